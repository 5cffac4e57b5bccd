use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("length mismatch: {what} (expected {expected}, got {actual})")]
    LengthMismatch {
        what: &'static str,
        expected: u64,
        actual: u64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: {what} needs at least {required} bits, got {actual}")]
    InsufficientData {
        what: &'static str,
        required: u64,
        actual: u64,
    },

    #[error("insufficient entropy: {0}")]
    InsufficientEntropy(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("convolution would overflow the exact transform: {0}")]
    ConvolutionPrecision(String),

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
