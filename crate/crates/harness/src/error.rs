use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration ({stage}): {message}")]
    Validation { stage: &'static str, message: String },
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<HarnessError>,
    },
    #[error(transparent)]
    Core(#[from] minority_core::Error),
    #[error(transparent)]
    Checkpoint(#[from] crate::checkpoint::CheckpointError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Table { path: PathBuf, message: String },
    #[error("missing artifact {}; run the {stage} stage first", path.display())]
    MissingArtifact { path: PathBuf, stage: &'static str },
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    pub fn table(path: &Path, message: impl Into<String>) -> Self {
        Self::Table { path: path.to_path_buf(), message: message.into() }
    }

    /// Exit status for the command line: 2 for bad input, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation { .. } => 2,
            _ => 1,
        }
    }

    /// Stage the error is attributed to, if any.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Self::Validation { stage, .. } | Self::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
