//! Pipeline driver: each subcommand is one stage writing into a run directory.

pub mod config;
pub mod stages;

use std::path::PathBuf;

pub use config::{PipelineConfig, Stage};

/// Failures grouped by the exit code they map to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("missing artifact: {}", .0.display())]
    MissingArtifact(PathBuf),

    #[error("stage `{stage}` was produced by a different configuration (expected hash {expected}, found {found})")]
    ConfigMismatch {
        stage: String,
        expected: String,
        found: String,
    },

    #[error(transparent)]
    Core(#[from] finesdf::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 1 usage, 2 data, 3 numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(finesdf::Error::NonFiniteLoss { .. }) => 3,
            _ => 2,
        }
    }
}

/// Worker threads from the flag, else `FINESDF_THREADS`, else rayon's default.
pub fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var("FINESDF_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("FINESDF_THREADS must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}
