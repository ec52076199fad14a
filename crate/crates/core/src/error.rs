use std::path::PathBuf;

use tensorcore::TensorError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum P2gError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("missing prerequisite: {0}")]
    MissingPrerequisite(String),
    #[error("architecture mismatch: {0}")]
    Mismatch(String),
    #[error("numerical divergence: {0}")]
    Divergence(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

pub type Result<T, E = P2gError> = std::result::Result<T, E>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> P2gError {
    let path = path.into();
    move |source| P2gError::Io { path, source }
}

pub(crate) fn json_err(path: impl Into<PathBuf>) -> impl FnOnce(serde_json::Error) -> P2gError {
    let path = path.into();
    move |source| P2gError::Json { path, source }
}
