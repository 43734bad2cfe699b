use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Error)]
pub enum SimError {
    /// Invalid user-supplied parameter or configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A matrix that must be positive definite was (numerically) singular.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// Inputs with inconsistent shapes or missing serving gateways.
    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl SimError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        SimError::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad configuration rather than the environment.
    pub fn is_config(&self) -> bool {
        matches!(self, SimError::Config(_) | SimError::Parse { .. })
    }
}
