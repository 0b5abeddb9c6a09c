use thiserror::Error;

/// Errors raised across the consensus pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid label {label} at index {index} (expected < {bound})")]
    InvalidLabel {
        index: usize,
        label: usize,
        bound: usize,
    },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integer overflow while {0}")]
    Overflow(&'static str),

    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error("operation not supported for {0} models")]
    UnsupportedKind(&'static str),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
