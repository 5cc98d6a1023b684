//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by configuration validation, numeric preconditions, and
/// file I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration field failed validation.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An input had the wrong length or shape.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// An operation required a unit-norm vector and received something else.
    #[error("{context}: vector must have unit L2 norm (norm = {norm})")]
    NotUnitNorm { context: &'static str, norm: f64 },

    /// A zero vector was passed where a direction is required.
    #[error("{0}: zero vector cannot be normalized")]
    ZeroVector(&'static str),

    /// NaN or infinity appeared during computation.
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    /// Too few data points for the requested operation.
    #[error("{context}: need at least {needed} samples, got {got}")]
    TooFewSamples {
        context: &'static str,
        needed: usize,
        got: usize,
    },

    /// File I/O failure, annotated with the path involved.
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A file's contents did not match the expected format.
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },
}

impl Error {
    /// Wraps an I/O error with the path it occurred on.
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Builds a format error for the given path.
    pub fn format(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
