use std::io;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or values handed to an operation do not satisfy its contract.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A hyperparameter or size is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An iterative numerical routine failed to converge.
    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// An experiment config could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),

    #[error("serialization error: {0}")]
    Serialization(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Serialization(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Serialization(err.to_string())
    }
}
