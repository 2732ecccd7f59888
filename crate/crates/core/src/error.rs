use std::path::PathBuf;

use thiserror::Error;

use crate::domain::ExpectationMode;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {what}: {detail}")]
    Validation { what: &'static str, detail: String },

    #[error("expected {expected} expectations, got {found}")]
    ModeMismatch {
        expected: ExpectationMode,
        found: ExpectationMode,
    },

    #[error("numeric failure in {routine}: {detail}")]
    Numeric { routine: &'static str, detail: String },

    #[error("{path}:{line}: {detail}")]
    Parse {
        path: PathBuf,
        line: u64,
        detail: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Validation {
            what,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 usage, 2 data, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Validation { .. } | Error::ModeMismatch { .. } | Error::Parse { .. } | Error::Io { .. } => 2,
            Error::Numeric { .. } => 3,
        }
    }
}
