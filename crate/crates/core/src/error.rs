use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("k must be even (got {0})")]
    OddOrder(usize),

    #[error("k must be at least 2 (got {0})")]
    OrderTooSmall(usize),

    #[error("{what} is capped at {cap} (requested {requested})")]
    EnumerationCap {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("invalid pair partition: {0}")]
    InvalidPartition(String),

    #[error("cannot parse {kind} from {input:?}")]
    Parse { kind: &'static str, input: String },

    #[error(
        "exact volume supports cross-sections of dimension at most {cap} (got {dimension}); \
         use the Monte Carlo method instead"
    )]
    ExactVolumeUnsupported { dimension: usize, cap: usize },

    #[error("correlation parameter must lie in [0, 1] (got {0})")]
    CorrelationOutOfRange(String),

    #[error("invalid ensemble spec: {0}")]
    InvalidSpec(String),

    #[error("at least {required} trials are required (got {got})")]
    TooFewTrials { required: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver failed to converge after {iterations} iterations (seed {seed:?})")]
    NoConvergence { iterations: usize, seed: Option<u64> },
}
