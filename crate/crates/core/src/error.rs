use thiserror::Error;

/// Errors shared across the library.
///
/// `Refusal` is reserved for size-cap refusals: the input is well-formed but
/// the requested computation exceeds a configured exact-computation limit.
/// Callers must never silently approximate past a refusal.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("size cap exceeded: {0}")]
    Refusal(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
    pub fn refusal(msg: impl Into<String>) -> Self {
        Error::Refusal(msg.into())
    }
    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}
