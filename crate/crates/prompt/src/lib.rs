//! Prompting harness for event detection with instruction-following LLMs.
//!
//! Builds few-shot and zero-shot prompts from stored templates, samples
//! exemplars per event type, parses and post-validates model output against
//! the event ontology, and scores the result with the span-exact scorer from
//! `ctxed-core`. The model sits behind [`LlmClient`]; [`StubClient`] replays
//! recorded responses and [`HttpClient`] talks to an OpenAI-compatible
//! endpoint.

mod cache;
mod client;
mod error;
mod parse;
mod score;
mod shots;
mod template;

pub use cache::{prompt_hash, CacheEntry, ResponseCache};
pub use client::{generate_all, HttpClient, HttpConfig, LlmClient, StubClient, ENV_API_KEY, ENV_BASE_URL, ENV_MODEL, MAX_ATTEMPTS};
pub use error::{LlmError, PromptError};
pub use parse::{parse_llm_output, ParseOutcome, PredictionEntry, RejectedEntry};
pub use score::{entries_to_mentions, prompt_score, score_responses, PromptScore};
pub use shots::{sample_shots, Exemplar, ShotConfig, ShotMode};
pub use template::{exemplar_block, render_prompt, render_template, Template, TemplateKind};
