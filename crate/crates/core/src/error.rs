//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures surfaced by the numerical routines and the sweep harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input violated a documented precondition (shape, trace, positivity, order range, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// Two operands have incompatible dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An iterative optimizer stopped before meeting its tolerance.
    #[error("optimizer did not converge after {iterations} iterations (last objective {last_value})")]
    NonConvergence { iterations: usize, last_value: f64 },

    /// A configuration field could not be parsed or is out of range.
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    /// A report file could not be decoded.
    #[error("report parse error: {0}")]
    Report(String),

    /// Filesystem failure while reading or writing configuration or reports.
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
