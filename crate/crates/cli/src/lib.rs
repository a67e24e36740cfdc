//! Pipeline orchestration behind the `ssge` binary: configuration
//! parsing, the training loop, downstream evaluation, and the scaling
//! benchmark. Exposed as a library so integration tests can drive runs
//! in-process.

pub mod bench;
pub mod config;
pub mod train;

pub use bench::{run_bench, BenchRow};
pub use config::TrainConfig;
pub use train::{run_train, TrainOutcome};

/// Errors from any pipeline stage.
#[derive(Debug)]
pub enum CliError {
    Core(ssge_core::Error),
    Io(ssge_dataio::IoError),
    Config(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Config(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ssge_core::Error> for CliError {
    fn from(e: ssge_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<ssge_dataio::IoError> for CliError {
    fn from(e: ssge_dataio::IoError) -> Self {
        CliError::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
