//! Event detection over pluggable token embeddings.
//!
//! Sentences are converted to word-level classification: every word gets
//! either an event type or `NA`. A fusion block injects sentence-level context
//! into the token states, a small projection head produces logits, and spans
//! are reconstructed from the predicted labels for exact-match scoring.
//!
//! Modules:
//! - [`corpus`]: datasets, vocabularies, label conversion, embedding stores
//! - [`nn`]: tensors, parameter store, hand-paired forward/backward layers, AdamW
//! - [`fusion`]: the five context architectures and the shared classification head
//! - [`lora`]: low-rank adapters for every linear layer
//! - [`trainer`]: training loop, model selection, checkpoints
//! - [`eval`]: span decoding, micro/macro scoring, long-tail analysis, paired t-test

pub mod corpus;
pub mod error;
pub mod eval;
pub mod exec;
pub mod fusion;
pub mod lora;
pub mod nn;
pub mod trainer;

pub use error::{Error, Result};
