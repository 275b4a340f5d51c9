use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular normal matrix at column {column} (pivot {pivot:e})")]
    Singular { column: usize, pivot: f64 },

    #[error("integration became unstable at t = {time}")]
    Instability { time: f64 },

    #[error("equilibrium not reached within horizon (residual {residual:e})")]
    NoEquilibrium { state: Vec<f64>, residual: f64 },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
