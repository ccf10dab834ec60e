use thiserror::Error;

/// Failures of the driver, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("sampler error: {0}")]
    Sampler(#[from] abc_core::AbcError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("initialisation did not reach its stopping rule within {0} batches")]
    InitBudget(usize),
    #[error("report error: {0}")]
    Report(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// 2 for bad configuration, 3 for everything that fails at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 3,
        }
    }
}
