use thiserror::Error;

/// Errors produced by sumcover operations.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Two operands belong to different ambient groups.
    #[error("group mismatch: operands belong to different groups")]
    GroupMismatch,

    /// Invalid input data; `path` points at the offending field.
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },

    /// A desk-scale cap was exceeded.
    #[error("cap exceeded: {what} = {actual} exceeds limit {limit}")]
    CapExceeded {
        what: &'static str,
        actual: u64,
        limit: u64,
    },

    /// An operation's precondition does not hold for the given input.
    #[error("precondition not met: {0}")]
    Precondition(String),
}

impl Error {
    pub fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
