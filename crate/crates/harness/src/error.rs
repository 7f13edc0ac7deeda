use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the harness.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] lmoamp_core::Error),

    #[error("worker pool: {0}")]
    Pool(String),
}
