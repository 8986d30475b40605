use thiserror::Error;

/// Errors produced by the solvers and the CLI plumbing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("bracket not found: {0}")]
    BracketNotFound(String),

    #[error("truncation unsafe: {0}")]
    TruncationUnsafe(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code convention: 2 for validation errors, 1 for solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_) | Error::TruncationUnsafe(_) => 2,
            _ => 1,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
