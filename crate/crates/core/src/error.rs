//! Crate-wide error type and the process exit-code mapping.

use thiserror::Error;

use crate::autodiff::AutodiffError;
use crate::cli::config::ConfigError;
use crate::features::FeatureError;
use crate::graph::GraphError;
use crate::ingest::IngestError;
use crate::trainer::TrainError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Exit status for usage errors (bad flags, missing arguments).
pub const EXIT_USAGE: i32 = 1;
/// Exit status for validation and contract errors.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit status for runtime numerical failures.
pub const EXIT_NUMERICAL: i32 = 3;

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => EXIT_USAGE,
            Error::Autodiff(e) if e.is_numerical() => EXIT_NUMERICAL,
            Error::Train(e) if e.is_numerical() => EXIT_NUMERICAL,
            _ => EXIT_VALIDATION,
        }
    }
}
