use std::path::PathBuf;

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("image {height}x{width} is smaller than the required {min_height}x{min_width}")]
    ImageTooSmall {
        height: usize,
        width: usize,
        min_height: usize,
        min_width: usize,
    },

    #[error("coordinate ({row}, {col}) is out of bounds for a {height}x{width} image")]
    OutOfBounds {
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },

    #[error("tensor is numerically zero")]
    ZeroTensor,

    #[error("degenerate eigensystem: {0}")]
    DegenerateEigensystem(String),

    #[error("invalid sampling ratio {0}; expected 0 < csr <= 1")]
    InvalidRatio(f64),

    #[error("operation requires a {expected} operator")]
    WrongOperatorVariant { expected: &'static str },

    #[error("woodbury cache was built for a different operator or penalty")]
    CacheMismatch,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed {kind} file: {reason}")]
    Format { kind: &'static str, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {reason}")]
    Image { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical pipeline, as opposed to bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ZeroTensor | Error::DegenerateEigensystem(_) | Error::CacheMismatch
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
