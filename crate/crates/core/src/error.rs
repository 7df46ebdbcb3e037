use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the traffic-engineering library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("duplicate edge {src} -> {dst}")]
    DuplicateEdge { src: usize, dst: usize },

    #[error("edge {src} -> {dst} has nonpositive capacity {capacity}")]
    NonPositiveCapacity { src: usize, dst: usize, capacity: f64 },

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid routing: {0}")]
    InvalidRouting(String),

    #[error("demand {src} -> {dst} has no candidate path")]
    Unroutable { src: usize, dst: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dim(what: &'static str, expected: usize, got: usize) -> Self {
        Error::Dimension {
            what,
            expected,
            got,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
