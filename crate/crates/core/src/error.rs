use std::io;

use thiserror::Error;

/// Errors raised by graph construction, simulation and the lemma machinery.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A line schedule could not place enough anchors inside the truncation.
    #[error("insufficient depth: {0}")]
    InsufficientDepth(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A manifest field failed validation.
    #[error("invalid manifest field `{field}`: {msg}")]
    Validation { field: &'static str, msg: String },

    #[error("linear solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl LabError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        LabError::InvalidInput(msg.into())
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
