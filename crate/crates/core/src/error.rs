use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("document `{doc_id}` contains no speech turns")]
    EmptyDocument { doc_id: String },

    #[error("invalid document: {0}")]
    InvalidDocument(String),

    #[error("invalid segmentation: {0}")]
    InvalidSegmentation(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("internal error: {0}")]
    Internal(String),
}

/// Coarse error families, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Io,
    Parse,
    Config,
    Data,
    Internal,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io { .. } => ErrorCategory::Io,
            Error::Parse { .. } => ErrorCategory::Parse,
            Error::Config(_) => ErrorCategory::Config,
            Error::EmptyDocument { .. }
            | Error::InvalidDocument(_)
            | Error::InvalidSegmentation(_)
            | Error::UndefinedMetric(_) => ErrorCategory::Data,
            Error::Internal(_) => ErrorCategory::Internal,
        }
    }
}
