use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: malformed JSON: {message}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("sentence {sentence}: empty span [{start}, {end})")]
    EmptySpan {
        sentence: String,
        start: usize,
        end: usize,
    },

    #[error("sentence {sentence}: span [{start}, {end}) out of bounds for {len} tokens")]
    SpanOutOfBounds {
        sentence: String,
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("sentence {sentence}: overlapping spans [{a_start}, {a_end}) and [{b_start}, {b_end})")]
    OverlappingSpans {
        sentence: String,
        a_start: usize,
        a_end: usize,
        b_start: usize,
        b_end: usize,
    },

    #[error("unknown schema version {0}")]
    UnknownSchemaVersion(u64),

    #[error("invalid sentence {sentence}: {reason}")]
    InvalidSentence { sentence: String, reason: String },

    #[error("duplicate sentence id {0}")]
    DuplicateSentence(String),

    #[error("unknown event type {0:?}")]
    UnknownEventType(String),

    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },

    #[error("truncated file: {0}")]
    Truncated(String),

    #[error("unsupported version {found} (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("missing embeddings for sentence {0}")]
    MissingEmbeddings(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("LoRA rank {rank} invalid for {din}x{dout} linear layer")]
    InvalidRank { rank: usize, din: usize, dout: usize },

    #[error("label-space mismatch: {0}")]
    LabelSpaceMismatch(String),

    #[error("corrupted checkpoint: {0}")]
    CorruptedCheckpoint(String),

    #[error("invalid analysis request: {0}")]
    InvalidAnalysis(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error stems from bad input or configuration, as opposed to a
    /// failure while running (I/O, numerical blow-up).
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::NonFinite(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
