use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: wrong columns, unparsable numbers.
    #[error("{}:{line}: {message}", path.display())]
    Schema {
        path: PathBuf,
        line: u64,
        message: String,
    },

    /// Well-formed input that breaks a semantic rule (unknown code, sign
    /// rule, duplicate key).
    #[error("{}:{line}: {message}", path.display())]
    Validation {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub(crate) fn schema(path: impl AsRef<Path>, line: u64, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.as_ref().to_path_buf(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn validation(
        path: impl AsRef<Path>,
        line: u64,
        message: impl Into<String>,
    ) -> Self {
        Error::Validation {
            path: path.as_ref().to_path_buf(),
            line,
            message: message.into(),
        }
    }

    /// Process exit code: 1 for I/O and schema problems, 2 for semantic
    /// validation failures, 3 for internal invariant breaches.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Schema { .. } | Error::Io { .. } | Error::Json { .. } => 1,
            Error::Validation { .. } | Error::Invalid(_) | Error::ModelMismatch(_) => 2,
            Error::Invariant(_) => 3,
        }
    }
}
