//! Output directory handling and run manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const OUT_ENV: &str = "SKEWDIAG_OUT";
pub const DEFAULT_OUT: &str = "skewdiag-out";

/// `<command>.manifest.json`, so runs of different commands can share a directory.
pub fn manifest_name(command: &str) -> String {
    format!("{command}.manifest.json")
}

/// Flag or config value, then `$SKEWDIAG_OUT`, then `./skewdiag-out`.
pub fn resolve_out_dir(configured: Option<&Path>) -> PathBuf {
    configured
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub timestamp: String,
    /// Fully resolved configuration
    pub config: serde_json::Value,
    /// File name to SHA-256 of its contents
    pub outputs: BTreeMap<String, String>,
}

/// Files written by one run.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    checksums: BTreeMap<String, String>,
}

impl OutputSet {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            checksums: BTreeMap::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.checksums.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    /// Writes the manifest next to the outputs.
    pub fn finish(self, command: &str, seed: u64, config: serde_json::Value) -> Result<RunManifest> {
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            config,
            outputs: self.checksums,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.dir.join(manifest_name(command));
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(manifest)
    }
}
