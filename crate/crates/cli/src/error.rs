use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Input {
        path: PathBuf,
        source: udforest::Error,
    },

    #[error("{0}")]
    Usage(String),

    #[error("sent_id sets disagree for {count} sentence(s): {listed}")]
    Mismatch { count: usize, listed: String },

    #[error("{failed} sentence(s) failed")]
    Failed { failed: usize },

    #[error(transparent)]
    Core(#[from] udforest::Error),
}
