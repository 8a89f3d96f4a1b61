use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Deserializer, Serialize};
use skewdiag::ensembles::EntryDist;
use skewdiag::hankel_volume::Circuit;

#[derive(Debug, Clone, Parser)]
#[command(
    name = "skewdiag",
    version,
    about = "Exact limit moments and simulated spectra for skew-diagonal random matrices"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct CommonArgs {
    /// Master seed for every random stream
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (falls back to $SKEWDIAG_OUT, then ./skewdiag-out)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML file supplying defaults; command-line flags take precedence
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Volume convention: `open` or `closed`
    #[arg(long, global = true)]
    pub circuit: Option<Circuit>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Count, and optionally list, the pair partitions of {1..k}
    Partitions(PartitionsArgs),
    /// Hankel volume of one pair partition, or of all partitions of order k
    Volume(VolumeArgs),
    /// Table of limiting moments M_k(c)
    Moments(MomentsArgs),
    /// Sample matrices and record their spectral statistics
    Simulate(SimulateArgs),
    /// Compare simulated moments with their limits
    Compare(CompareArgs),
    /// Check the free-cumulant decomposition of the limit law
    Freeconv(FreeconvArgs),
    /// Fourth central moment of tr X^k across matrix sizes
    Concentration(ConcentrationArgs),
}

impl Command {
    pub const NAMES: [&'static str; 7] = [
        "partitions",
        "volume",
        "moments",
        "simulate",
        "compare",
        "freeconv",
        "concentration",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Partitions(_) => "partitions",
            Command::Volume(_) => "volume",
            Command::Moments(_) => "moments",
            Command::Simulate(_) => "simulate",
            Command::Compare(_) => "compare",
            Command::Freeconv(_) => "freeconv",
            Command::Concentration(_) => "concentration",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Exact,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeArg {
    #[value(name = "weak_c1")]
    WeakC1,
    #[value(name = "constant_c2")]
    ConstantC2,
    Hankel,
    Iid,
}

/// Accepts `c = "1/4"` as well as `c = 0.25` in config files.
fn number_or_string<'de, D: Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Text(String),
        Int(i64),
        Float(f64),
    }
    Ok(Option::<Raw>::deserialize(d)?.map(|r| match r {
        Raw::Text(s) => s,
        Raw::Int(i) => i.to_string(),
        Raw::Float(f) => f.to_string(),
    }))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct PartitionsArgs {
    /// Order (even, at most 12)
    #[arg(long)]
    pub k: Option<usize>,
    /// Also list every partition with its height
    #[arg(long)]
    #[serde(default)]
    pub list: bool,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct VolumeArgs {
    /// Order; all partitions of this order are evaluated when --partition is absent
    #[arg(long)]
    pub k: Option<usize>,
    /// Partition in block notation, e.g. "{1,3}{2,4}"
    #[arg(long)]
    pub partition: Option<String>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Monte Carlo sample count
    #[arg(long)]
    pub samples: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct MomentsArgs {
    #[arg(long)]
    pub kmax: Option<usize>,
    /// Correlation in [0, 1], e.g. "1/4" or "0.25"
    #[arg(long)]
    #[serde(default, deserialize_with = "number_or_string")]
    pub c: Option<String>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub samples: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct EnsembleArgs {
    #[arg(long, value_enum)]
    pub regime: Option<RegimeArg>,
    /// AR(1) coefficient for weak_c1
    #[arg(long)]
    pub rho: Option<f64>,
    /// Correlation for constant_c2
    #[arg(long)]
    #[serde(default, deserialize_with = "number_or_string")]
    pub c: Option<String>,
    /// gaussian or rademacher
    #[arg(long)]
    pub entry: Option<EntryDist>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub ensemble: EnsembleArgs,
    /// Matrix size
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Histogram bin count
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub hist_lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub hist_hi: Option<f64>,
    /// Write every sampled matrix as CSV
    #[arg(long)]
    #[serde(default)]
    pub dump_matrices: bool,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct CompareArgs {
    /// trials.csv, or a directory containing it (default: the output directory)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Highest moment order to compare (at most 8)
    #[arg(long)]
    pub kmax: Option<usize>,
    /// Compare against M_k(c) instead of the limit implied by the recorded regime
    #[arg(long)]
    #[serde(default, deserialize_with = "number_or_string")]
    pub c: Option<String>,
    /// Flag rows more than this many standard errors from the limit
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct FreeconvArgs {
    #[arg(long)]
    #[serde(default, deserialize_with = "number_or_string")]
    pub c: Option<String>,
    #[arg(long)]
    pub kmax: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct ConcentrationArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub ensemble: EnsembleArgs,
    /// Trace powers, comma separated
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<u32>>,
    /// Matrix sizes, comma separated
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
}
