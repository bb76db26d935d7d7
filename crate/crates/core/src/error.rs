use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Error categories shared by every module of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent configuration (sizes, knobs, missing inputs).
    #[error("configuration error: {0}")]
    Config(String),
    /// Tensor or image shape mismatch.
    #[error("shape error: {0}")]
    Shape(String),
    /// Non-finite values where finite ones are required.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// API misuse: empty inputs, calling an operation out of order.
    #[error("usage error: {0}")]
    Usage(String),
    /// Malformed input file.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },
    /// Dataset does not satisfy the requirements of a run.
    #[error("data error: {0}")]
    Data(String),
    /// No episode passed the stage-(a) accuracy gate.
    #[error("measurement failure: {0}")]
    MeasurementFailure(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn format(offset: u64, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }
}
