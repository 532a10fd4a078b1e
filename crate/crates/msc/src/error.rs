use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0:?}")]
    InvalidDataset(Vec<String>),
    #[error("zero column at index {0}: cannot normalize")]
    ZeroColumn(usize),
    #[error("threshold q={q} out of range [1, {max}]")]
    ThresholdOutOfRange { q: usize, max: usize },
    #[error("quantile level l={l} out of range [1, {max}]")]
    QuantileOutOfRange { l: usize, max: usize },
    #[error("solver did not converge in {iterations} iterations (primal {primal:.3e}, dual {dual:.3e})")]
    NoConvergence {
        iterations: usize,
        primal: f64,
        dual: f64,
    },
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("eigendecomposition failed: {0}")]
    EigenFailure(String),
    #[error("all {0} trials failed")]
    AllTrialsFailed(usize),
    #[error("io error at {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
