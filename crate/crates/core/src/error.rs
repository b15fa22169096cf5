use thiserror::Error;

/// Errors raised by table construction, model building and testing.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("models are not nested: {0}")]
    NotNested(String),

    #[error("move {index} is not in the kernel of the model matrix")]
    BasisMismatch { index: usize },

    #[error("fiber enumeration exceeded the node cap of {cap}")]
    CapExceeded { cap: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
