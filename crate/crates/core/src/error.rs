use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("throughput prediction needs a normalization throughput x1")]
    MissingNormalization,

    #[error("dataset has no n = 1 baseline measurement")]
    MissingBaseline,

    #[error("baseline throughput X(1) is zero")]
    ZeroBaseline,

    #[error("insufficient data: need at least {needed} distinct load levels, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate data: every throughput is zero")]
    DegenerateData,

    #[error("fit and dataset load levels differ")]
    MismatchedDataset,

    #[error("duplicate load level n = {0}")]
    DuplicateLoad(f64),

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("noise must be a finite value >= 0, got {0}")]
    InvalidNoise(f64),

    #[error("invalid time series: {0}")]
    InvalidSeries(String),

    #[error("no steady state: {0}")]
    NoSteadyState(String),

    #[error("trim ({ramp_up} s up + {ramp_down} s down) exceeds run duration {duration} s")]
    TrimExceedsRun { ramp_up: f64, ramp_down: f64, duration: f64 },

    #[error("run at load {load}: {source}")]
    Run {
        load: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Strips [`Error::Run`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Run { source, .. } => source.root(),
            other => other,
        }
    }
}
