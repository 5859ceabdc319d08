use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid interval: a = {a} must be less than b = {b}")]
    InvalidInterval { a: f64, b: f64 },

    #[error("eigenvalue solver failed to converge for n = {n}, beta1 = {beta1}, beta2 = {beta2}")]
    ConvergenceFailure { n: usize, beta1: f64, beta2: f64 },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
