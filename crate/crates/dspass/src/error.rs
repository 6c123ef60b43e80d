use std::path::{Path, PathBuf};

use thiserror::Error;

/// Failures of the command-line pipeline, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, configuration or a missing input path (exit code 2).
    #[error("{0}")]
    Usage(String),
    /// Unreadable or inconsistent data (exit code 3).
    #[error("{0}")]
    Data(String),
    /// Broken internal invariant (exit code 4).
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    pub(crate) fn io(path: &Path, err: std::io::Error) -> Self {
        let msg = format!("{}: {err}", path.display());
        if err.kind() == std::io::ErrorKind::NotFound {
            CliError::Usage(msg)
        } else {
            CliError::Data(msg)
        }
    }
}

impl From<dspass_core::Error> for CliError {
    fn from(e: dspass_core::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

/// Malformed weight or logit container.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}: {message} at byte {offset}", path = .path.as_deref().map(|p| p.display().to_string()).unwrap_or_else(|| "<buffer>".into()))]
pub struct FormatError {
    pub path: Option<PathBuf>,
    pub offset: usize,
    pub message: String,
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Data(e.to_string())
    }
}
