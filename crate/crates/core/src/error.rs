use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the imaging pipeline.
#[derive(Debug, Error)]
pub enum FsiError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("frequency ({u}, {v}) is outside [0, {n})")]
    InvalidFrequency { u: usize, v: usize, n: usize },

    #[error("{name} = {value} is out of range: {reason}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("corpus at {0} produced no usable blocks")]
    EmptyCorpus(PathBuf),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = FsiError> = std::result::Result<T, E>;

impl FsiError {
    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        FsiError::Parse {
            context: context.into(),
            message: message.into(),
        }
    }

    pub(crate) fn mismatch(expected: impl ToString, actual: impl ToString) -> Self {
        FsiError::DimensionMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
