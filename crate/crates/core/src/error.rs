use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CpcpError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CpcpError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("invalid observation mask: {0}")]
    InvalidMask(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("operation requires a {expected} problem")]
    WrongFormulation { expected: &'static str },

    #[error("objective increased from {previous:e} to {current:e}")]
    ObjectiveIncreased { previous: f64, current: f64 },

    #[error("dense storage of {entries} entries exceeds the budget of {budget} entries")]
    MemoryBudget { entries: usize, budget: usize },

    #[error("{}:{line}: {reason}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CpcpError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        CpcpError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn dims(expected: impl ToString, found: impl ToString) -> Self {
        CpcpError::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
