use thiserror::Error;

pub type Result<T> = std::result::Result<T, QosError>;

#[derive(Debug, Error)]
pub enum QosError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected} links, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("profile is empty")]
    EmptyProfile,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}{}: {message}", record.map(|r| format!(" (record {r})")).unwrap_or_default())]
    Parse {
        line: usize,
        record: Option<usize>,
        message: String,
    },

    #[error("{path}: {message}")]
    File { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl QosError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        QosError::InvalidArgument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        QosError::Config(msg.into())
    }
}
