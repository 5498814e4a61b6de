use std::path::PathBuf;

use thiserror::Error;

/// Errors from the dataset pipeline, file formats, and experiment drivers.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("manifest error in {path} line {line}: {message}")]
    Manifest {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("decode error for {path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("checkpoint {path}: {source}")]
    Checkpoint {
        path: PathBuf,
        #[source]
        source: cae_core::Error,
    },
    #[error(transparent)]
    Core(#[from] cae_core::Error),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl PipelineError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;
