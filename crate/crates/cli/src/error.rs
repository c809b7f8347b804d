use thiserror::Error;

/// Failures mapped onto the process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("runtime failure: {0}")]
    Runtime(String),
    #[error("verify suite failed: {0}")]
    Verify(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Verify(_) => 3,
        }
    }

    pub fn runtime(context: &str, err: impl std::fmt::Display) -> Self {
        CliError::Runtime(format!("{context}: {err}"))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("i/o: {e}"))
    }
}
