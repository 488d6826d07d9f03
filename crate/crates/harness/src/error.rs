//! Harness error type with the process exit code baked in.

use driftbench_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    /// The configuration is unreadable, unparsable, or invalid. Exit code 2.
    #[error("{0}")]
    Config(String),
    /// Anything that goes wrong after the configuration checked out. Exit
    /// code 1.
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Runtime(_) => 1,
        }
    }
}

impl From<CoreError> for HarnessError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Config(_) => HarnessError::Config(e.to_string()),
            other => HarnessError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Runtime(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
