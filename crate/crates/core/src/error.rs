use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("metric {metric} cannot be applied to {element} elements")]
    IncompatibleMetric {
        metric: &'static str,
        element: &'static str,
    },

    #[error("empty input")]
    Empty,

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("malformed distance matrix: {0}")]
    MalformedMatrix(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("Jacobian undefined at degenerate scale (s = {0:e})")]
    DegenerateScale(f64),

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
