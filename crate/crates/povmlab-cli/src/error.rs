//! CLI error classification, mapped onto process exit codes.

use povmlab::LabError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed configuration or unsupported parameter (exit code 2).
    #[error("validation error: {0}")]
    Validation(String),

    /// A physical guard fired while running (exit code 3).
    #[error("physical guard: {0}")]
    Guard(LabError),

    /// A declared tolerance was not met (exit code 4).
    #[error("tolerance failure: {0}")]
    Tolerance(String),

    /// Filesystem problems (exit code 2).
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::Guard(_) => 3,
            CliError::Tolerance(_) => 4,
        }
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Localization { .. }
            | LabError::Calibration { .. }
            | LabError::Conditioning { .. }
            | LabError::Alignment(_) => CliError::Guard(e),
            other => CliError::Validation(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
