//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    /// Malformed input: out-of-range vertices, arity mismatches, maps that are
    /// not embeddings, instances violating a structural precondition. The
    /// message names the violated condition.
    #[error("invalid input: {0}")]
    Input(String),

    /// Two objects that must share a language do not.
    #[error("language mismatch: {0}")]
    LanguageMismatch(String),

    /// A search or enumeration would exceed the configured budget. Callers
    /// surface this as an inconclusive result rather than an error where the
    /// verdict vocabulary allows it.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// The requested operation is not available for this input class.
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl CoreError {
    pub fn input(msg: impl Into<String>) -> Self {
        CoreError::Input(msg.into())
    }

    pub fn budget(msg: impl Into<String>) -> Self {
        CoreError::Budget(msg.into())
    }

    pub fn unsupported(msg: impl Into<String>) -> Self {
        CoreError::Unsupported(msg.into())
    }

    pub fn language(msg: impl Into<String>) -> Self {
        CoreError::LanguageMismatch(msg.into())
    }
}
