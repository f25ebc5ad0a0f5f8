use thiserror::Error;

/// Everything that stops a run before a report exists. All of these map to
/// exit code 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] ssusy_core::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
