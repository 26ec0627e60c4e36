use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, GflError>;

#[derive(Debug, Error)]
pub enum GflError {
    #[error("{file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },
    #[error("malformed graph structure: {0}")]
    Structure(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("non-finite value: {0}")]
    Numeric(String),
    #[error("value out of domain: {0}")]
    Domain(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("cannot stratify: {0}")]
    Stratification(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("training diverged in fold {fold} at epoch {epoch}: loss = {loss}")]
    Divergence {
        fold: usize,
        epoch: usize,
        loss: f64,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl GflError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GflError::Io {
            path: path.into(),
            source,
        }
    }
}
