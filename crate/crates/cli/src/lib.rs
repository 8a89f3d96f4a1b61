//! Command-line harness around the `skewdiag` library.
//!
//! Every subcommand resolves its parameters (flags over config file over
//! defaults), validates them, does its work, writes its outputs into one
//! directory and records their checksums in a `<command>.manifest.json`.

pub mod args;
pub mod commands;
pub mod config;
pub mod output;

use anyhow::Result;

pub use args::Cli;
use args::Command;
use commands::Context;
use config::{merge, ConfigFile};
pub use output::RunManifest;

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// A comparison or identity check did not hold.
    ComparisonFailed,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::ComparisonFailed => 2,
        }
    }
}

/// Exit code for errors raised before or during the work.
pub const VALIDATION_FAILURE: u8 = 1;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: Status,
    /// Text for standard output.
    pub stdout: String,
    pub manifest: RunManifest,
}

pub fn run(cli: &Cli) -> Result<RunOutcome> {
    let file = match &cli.common.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let common = merge(&cli.common, file.common().clone(), "top-level")?;
    let ctx = Context {
        seed: common.seed.unwrap_or(DEFAULT_SEED),
        circuit: common.circuit.unwrap_or_default(),
        out_dir: output::resolve_out_dir(common.out.as_deref()),
    };
    let name = cli.command.name();
    let section = file.section(name);
    match &cli.command {
        Command::Partitions(a) => commands::partitions(&ctx, merge(a, section, name)?),
        Command::Volume(a) => commands::volume(&ctx, merge(a, section, name)?),
        Command::Moments(a) => commands::moments(&ctx, merge(a, section, name)?),
        Command::Simulate(a) => commands::simulate(&ctx, merge(a, section, name)?),
        Command::Compare(a) => commands::compare(&ctx, merge(a, section, name)?),
        Command::Freeconv(a) => commands::freeconv(&ctx, merge(a, section, name)?),
        Command::Concentration(a) => commands::concentration(&ctx, merge(a, section, name)?),
    }
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod guide {}
