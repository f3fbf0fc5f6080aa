use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point count {n} is not divisible into {k} clusters")]
    NotDivisible { n: usize, k: usize },

    #[error("size mismatch: expected {expected} points, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("non-finite coordinate at point {index}")]
    NonFinite { index: usize },

    #[error("empty point cloud")]
    EmptyCloud,

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {message} (byte offset {offset})")]
    Format {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("truncated data: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },

    #[error("density is numerically zero at every design point; try a larger bandwidth than {bandwidth}")]
    ZeroDensity { bandwidth: f64 },

    #[error("{0}")]
    Degenerate(String),

    #[error("no latent registered for cluster with fingerprint {0:016x}")]
    MissingLatent(u64),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
