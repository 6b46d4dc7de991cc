use std::path::Path;

use metasp_core::Error as CoreError;

/// Failure classes, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Data(_) => 3,
            HarnessError::Numeric(_) => 4,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        HarnessError::Data(msg.into())
    }

    pub(crate) fn io(path: &Path, err: std::io::Error) -> Self {
        HarnessError::Data(format!("{}: {err}", path.display()))
    }
}

impl From<CoreError> for HarnessError {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::InvalidArgument(_) | CoreError::DimensionMismatch { .. } => {
                HarnessError::Config(err.to_string())
            }
            CoreError::Degenerate(_) => HarnessError::Data(err.to_string()),
            CoreError::NonFinite(_) | CoreError::Diverged { .. } => HarnessError::Numeric(err.to_string()),
        }
    }
}

impl From<csv::Error> for HarnessError {
    fn from(err: csv::Error) -> Self {
        HarnessError::Data(err.to_string())
    }
}
