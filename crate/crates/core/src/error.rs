use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {value} lies outside the support {support}")]
    Domain { value: f64, support: String },

    #[error("basis order {requested} exceeds the configured maximum {max}")]
    Capacity { requested: usize, max: usize },

    #[error("index {index} out of range (valid: {valid})")]
    Index { index: usize, valid: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{0} is not implemented for this basis family")]
    NotImplemented(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("proposal density is zero at sample {sample}; importance weight undefined")]
    EstimatorUndefined { sample: usize },

    #[error("{rejected} of {total} samples had a non-finite score (limit {limit})")]
    TooManyRejected {
        rejected: usize,
        total: usize,
        limit: usize,
    },

    #[error("score undefined: expansion vanishes at this point")]
    Pole,

    #[error("CDF table failed its closure check (max |Phi(end) - I| = {deviation:e}); {suggestion}")]
    CdfTable { deviation: f64, suggestion: String },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("density already carries a standardizing transform")]
    TransformAlreadyAttached,

    #[error("non-finite matrix entry")]
    NonFinite,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
