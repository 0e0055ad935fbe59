//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by node evaluation, encoding, training, and the harness.
#[derive(Debug, Error)]
pub enum NlnError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("model is not discretized: {0}")]
    NotDiscretized(String),

    #[error("non-finite gradient: {0}")]
    NonFiniteGradient(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NlnError>;
