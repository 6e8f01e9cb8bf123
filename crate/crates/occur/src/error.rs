//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or operator dimensions are incompatible.
    #[error("shape error: {0}")]
    Shape(String),

    /// A scenario field or an input matrix failed validation.
    /// `field` is the dotted path into the scenario document.
    #[error("validation error at {field}: {message}")]
    Validation { field: String, message: String },

    /// A numeric procedure failed (non-convergence, imaginary residue,
    /// trace drift, lost mode tracking).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Requested evaluation outside the defined range (interpolation
    /// table, drive schedule).
    #[error("range error: {0}")]
    Range(String),

    /// Composite Hilbert space exceeds the supported size.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// Instantaneous spectrum too close to degenerate for mode tracking.
    #[error("degenerate spectrum: {0}")]
    Degenerate(String),

    /// Command-line usage error.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("scenario parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit code contract: 2 = invalid input, 3 = numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. }
            | Error::Usage(_)
            | Error::Range(_)
            | Error::Io(_)
            | Error::Parse(_)
            | Error::Shape(_) => 2,
            Error::Numeric(_) | Error::Capacity(_) | Error::Degenerate(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
