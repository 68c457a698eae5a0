use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("intensity must be positive and finite, got {0}")]
    InvalidIntensity(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point already present in configuration (index {0})")]
    DuplicatePoint(usize),

    #[error("mark variant mismatch: expected {expected}, got {got}")]
    MarkMismatch {
        expected: &'static str,
        got: &'static str,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("I/O error at {path}: {message}")]
    Io { path: String, message: String },
}

impl GeoError {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        GeoError::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, GeoError>;
