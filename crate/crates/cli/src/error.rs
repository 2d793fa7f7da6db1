use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("calibration FAILED; report written to {}", .0.display())]
    CalibrationFailed(PathBuf),
    #[error(transparent)]
    Core(#[from] esc_core::Error),
}

impl CliError {
    /// 2 config/validation, 3 calibration failed, 4 numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::CalibrationFailed(_) => 3,
            CliError::Core(e) if e.is_numerical() => 4,
            CliError::Core(_) => 2,
        }
    }
}
