//! Experiment presets, comparison pipelines, JSON configuration, and CSV /
//! report emission around the `jumplab-core` numerics.

pub mod checkpoint;
pub mod config;
pub mod csvio;
pub mod parallel;
pub mod report;
pub mod scenarios;

pub use report::ComparisonReport;

/// CLI-level error with a process exit code: validation failures exit 2,
/// numerical failures exit 3, I/O problems exit 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        CliError::Numerical(msg.into())
    }
}

impl From<jumplab_core::CoreError> for CliError {
    fn from(err: jumplab_core::CoreError) -> Self {
        CliError::Numerical(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Crate version, recorded in run provenance blocks.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
