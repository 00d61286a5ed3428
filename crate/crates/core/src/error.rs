use std::path::PathBuf;

use thiserror::Error;

/// Every failure the solver, loaders and harness can report.
///
/// The variants map onto the CLI exit codes (see [`DaError::exit_code`]).
#[derive(Debug, Error)]
pub enum DaError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl DaError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        DaError::Config(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        DaError::Data(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        DaError::Numerical(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DaError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the `dollda` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            DaError::Config(_) => 2,
            DaError::Data(_) | DaError::Io { .. } => 3,
            DaError::Numerical(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, DaError>;
