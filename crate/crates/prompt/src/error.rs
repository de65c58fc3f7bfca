use thiserror::Error;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("missing placeholder value: [[{0}]]")]
    MissingPlaceholder(String),

    #[error("few-shot prompt needs at least one exemplar")]
    NoExemplars,

    #[error("invalid shot config: {0}")]
    InvalidShotConfig(String),

    #[error("cache {path}, line {line}: {message}")]
    BadCacheLine { path: String, line: usize, message: String },

    #[error(transparent)]
    Core(#[from] ctxed_core::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Llm(#[from] LlmError),
}

/// Failures at the model-service boundary.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("no fixture for prompt {0}")]
    NoFixture(String),

    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: usize },

    #[error("request timed out after {attempts} attempts")]
    Timeout { attempts: usize },

    #[error("HTTP {status} after {attempts} attempts: {body}")]
    Http { status: u16, attempts: usize, body: String },

    #[error("transport error after {attempts} attempts: {message}")]
    Transport { attempts: usize, message: String },

    #[error("malformed response: {0}")]
    BadResponse(String),

    #[error("missing configuration: {0}")]
    MissingConfig(String),
}
