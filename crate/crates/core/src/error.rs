use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by loaders, trainers and the evaluation harness.
///
/// Loaders are total: a malformed input always yields one of these variants,
/// never a partially populated table.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A structural problem in an input file, pinned to a line number.
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// A precondition violation on an operation's arguments.
    #[error("{0}")]
    InvalidInput(String),

    /// Cross-file references that do not resolve (manifest ids, coverage).
    #[error("{0}")]
    Resolution(String),

    #[error("unsupported {what} format version {found} (expected {expected})")]
    VersionMismatch {
        what: String,
        found: u32,
        expected: u32,
    },

    /// A bug: an internal invariant did not hold.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn malformed(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
