use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: no rows")]
    NoRows { path: PathBuf },

    #[error("{path}: row {row}, column {col}: {message}")]
    Csv {
        path: PathBuf,
        row: usize,
        col: usize,
        message: String,
    },

    #[error("training diverged at epoch {epoch}: quantization {quantization:e} exceeds {limit:e}")]
    Diverged {
        epoch: usize,
        quantization: f64,
        limit: f64,
    },

    #[error("{path}: {message}")]
    Bundle { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
