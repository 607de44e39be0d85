use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parameter {name} = {value} outside [{lower}, {upper}]")]
    OutOfBounds {
        name: String,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coefficient `{coefficient}` is non-finite at probe {probe}")]
    NonFiniteCoefficient {
        coefficient: &'static str,
        probe: usize,
    },

    #[error("model `{model}` does not supply {missing}")]
    MissingDerivative {
        model: String,
        missing: &'static str,
    },

    #[error("state became non-finite at step {step}")]
    Blowup { step: usize },

    #[error("path {path} failed: {source}")]
    PathFailed {
        path: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("diffusion coefficient vanishes at observation {index}")]
    DegenerateDiffusion { index: usize },

    #[error("{failed} of {total} replications failed")]
    TooManyFailures { failed: usize, total: usize },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
