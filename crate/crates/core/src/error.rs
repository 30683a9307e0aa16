//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FadeError {
    /// A configuration value is out of range or inconsistent. `field` names
    /// the offending field (JSON-pointer style where the value came from a
    /// config document).
    #[error("invalid configuration: {field}: {message}")]
    Config { field: String, message: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// Malformed or insufficient data (too few rows, empty batch, ...).
    #[error("{0}")]
    Data(String),

    /// A cell failed to parse while ingesting a table.
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    /// Batches were fed to a sequential consumer out of order.
    #[error("batch sequencing error: {0}")]
    Sequencing(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl FadeError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        FadeError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        FadeError::Data(message.into())
    }
}

pub type Result<T> = std::result::Result<T, FadeError>;
