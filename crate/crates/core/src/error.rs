use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("channel mismatch: expected {expected}, found {found}")]
    ChannelMismatch { expected: usize, found: usize },

    #[error("run lengths sum to {sum}, expected {expected}")]
    SumMismatch { sum: u64, expected: u64 },

    #[error("thresholds belong to the {found} branch, expected {expected}")]
    BranchMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("inconsistent data: {0}")]
    Data(String),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("{path}: {detail}")]
    Format { path: PathBuf, detail: String },

    #[error("{path}: field `{field}`: {detail}")]
    Manifest {
        path: PathBuf,
        field: String,
        detail: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dims(expected: (usize, usize), found: (usize, usize)) -> Self {
        Error::DimensionMismatch { expected, found }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn manifest(
        path: impl Into<PathBuf>,
        field: impl Into<String>,
        detail: impl Into<String>,
    ) -> Self {
        Error::Manifest {
            path: path.into(),
            field: field.into(),
            detail: detail.into(),
        }
    }

    /// Errors caused by bad parameters rather than bad data.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::ConfigInvalid(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
