//! Error taxonomy shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value is outside the supported domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Operand dimensions, layouts or precisions do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Pivot magnitude fell below the guard threshold during factorization.
    #[error("singular matrix: pivot below threshold in column {column}{}",
            .subcarrier.map(|k| format!(" (subcarrier {k})")).unwrap_or_default())]
    Singular {
        column: usize,
        subcarrier: Option<usize>,
    },

    /// Aligned allocation failed or the requested size overflows.
    #[error("allocation of {bytes} bytes failed")]
    Allocation { bytes: usize },

    /// A data or config file failed to parse; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Parsed data violates a semantic contract (duplicate index, bad range, ...).
    #[error("validation error: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }
}
