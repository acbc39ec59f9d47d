use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("unstable propagator: {0}")]
    Unstable(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn overflow(msg: impl Into<String>) -> Self {
        Error::Overflow(msg.into())
    }

    /// True for failures caused by the numbers themselves rather than the
    /// caller's arguments.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Overflow(_) | Error::Unstable(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
