use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SplicError>;

#[derive(Debug, Error)]
pub enum SplicError {
    #[error("matrix must be at least 2x2, got {rows}x{cols}")]
    DegenerateDimensions { rows: usize, cols: usize },

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("anchor set carries no signal: the masked input is identically zero")]
    ZeroMaskedInput,

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("truncated payload: expected {expected} samples, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SplicError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        SplicError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SplicError::Io {
            path: path.into(),
            source,
        }
    }
}
