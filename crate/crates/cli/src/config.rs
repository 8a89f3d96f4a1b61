//! Layering of config-file values under command-line flags.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::args::Command;

/// Parsed TOML config: top-level common keys plus one table per subcommand.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    common: Map<String, Value>,
    sections: Map<String, Value>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config file {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text)?;
        let mut out = Self::default();
        for (key, value) in table {
            let value = serde_json::to_value(value)?;
            if Command::NAMES.contains(&key.as_str()) {
                if !value.is_object() {
                    bail!("[{key}] must be a table");
                }
                out.sections.insert(key, value);
            } else {
                out.common.insert(key, value);
            }
        }
        Ok(out)
    }

    pub fn common(&self) -> &Map<String, Value> {
        &self.common
    }

    pub fn section(&self, command: &str) -> Map<String, Value> {
        match self.sections.get(command) {
            Some(Value::Object(m)) => m.clone(),
            _ => Map::new(),
        }
    }
}

/// Overlays the flags that were given on top of `file` and rejects keys that
/// `T` does not know.
pub fn merge<T>(flags: &T, file: Map<String, Value>, what: &str) -> Result<T>
where
    T: Serialize + DeserializeOwned + Default,
{
    let Value::Object(known) = serde_json::to_value(T::default())? else {
        unreachable!("argument structs serialize to objects")
    };
    if let Some(unknown) = file.keys().find(|k| !known.contains_key(*k)) {
        bail!("unknown key `{unknown}` in {what} configuration");
    }
    let mut merged = file;
    if let Value::Object(given) = serde_json::to_value(flags)? {
        for (k, v) in given {
            // absent flags serialize as null, unset switches as false
            if !(v.is_null() || v == Value::Bool(false)) {
                merged.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(merged)).with_context(|| format!("invalid {what} configuration"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::{CommonArgs, SimulateArgs};

    #[test]
    fn flags_override_file() {
        let cfg = ConfigFile::parse(
            "seed = 5\ncircuit = \"closed\"\n[simulate]\nn = 64\ntrials = 7\nc = 0.5\nregime = \"constant_c2\"\ndump_matrices = true\n",
        )
        .unwrap();
        let flags = SimulateArgs {
            n: Some(32),
            ..Default::default()
        };
        let merged = merge(&flags, cfg.section("simulate"), "simulate").unwrap();
        assert_eq!(merged.n, Some(32));
        assert_eq!(merged.trials, Some(7));
        assert_eq!(merged.ensemble.c.as_deref(), Some("0.5"));
        assert!(merged.dump_matrices);

        let common = CommonArgs {
            seed: Some(9),
            ..Default::default()
        };
        let merged = merge(&common, cfg.common().clone(), "common").unwrap();
        assert_eq!(merged.seed, Some(9));
        assert_eq!(merged.circuit, Some(skewdiag::hankel_volume::Circuit::Closed));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let cfg = ConfigFile::parse("[simulate]\nsize = 3\n").unwrap();
        let err = merge(&SimulateArgs::default(), cfg.section("simulate"), "simulate").unwrap_err();
        assert!(err.to_string().contains("size"));
        assert!(ConfigFile::parse("simulate = 3\n").is_err());
    }
}
