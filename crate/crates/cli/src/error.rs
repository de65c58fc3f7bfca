use thiserror::Error;

use ctxed_prompt::PromptError;

/// Exit code 1: bad input, configuration or arguments.
pub const EXIT_VALIDATION: i32 = 1;
/// Exit code 2: failure while running (I/O, numerical, remote service).
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }
}

impl From<ctxed_core::Error> for CliError {
    fn from(e: ctxed_core::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

impl From<PromptError> for CliError {
    fn from(e: PromptError) -> Self {
        match e {
            PromptError::Core(e) => e.into(),
            PromptError::Io(_) | PromptError::Llm(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
