use thiserror::Error;

/// Errors raised by problem construction and the vector primitives.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoresetError {
    #[error("empty problem")]
    EmptyProblem,
    #[error("invalid vector: row {row} has a non-finite entry")]
    InvalidVector { row: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("weight index {index} out of range for {len} vectors")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid weight {weight} at index {index}")]
    InvalidWeight { index: usize, weight: f64 },
    #[error("collapsed iterate: update norm {norm:e} below tolerance")]
    CollapsedIterate { norm: f64 },
    #[error("empty input to cap-tree construction")]
    EmptyTree,
    #[error("invalid model data: {0}")]
    InvalidData(String),
    #[error("Newton iteration did not converge after {iterations} steps (gradient norm {grad_norm:e})")]
    NonConvergence {
        iterations: usize,
        grad_norm: f64,
        last: Vec<f64>,
    },
    #[error("covariance is not positive definite")]
    NotPositiveDefinite,
}

pub type Result<T> = std::result::Result<T, CoresetError>;
