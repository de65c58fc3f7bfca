use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde_json::{json, Value};

use crate::cache::{prompt_hash, read_entries, ResponseCache};
use crate::error::{LlmError, PromptError};

pub const ENV_BASE_URL: &str = "CTXED_LLM_BASE_URL";
pub const ENV_API_KEY: &str = "CTXED_LLM_API_KEY";
pub const ENV_MODEL: &str = "CTXED_LLM_MODEL";
/// Upper bound on attempts per request, retries included.
pub const MAX_ATTEMPTS: usize = 3;

pub trait LlmClient: Sync {
    fn generate(&self, prompt: &str, temperature: f64) -> Result<String, LlmError>;

    /// Model identifier recorded in the response cache.
    fn model(&self) -> &str;
}

/// Replays responses registered under the SHA-256 of the prompt.
#[derive(Debug, Clone, Default)]
pub struct StubClient {
    responses: HashMap<String, String>,
    model: String,
}

impl StubClient {
    pub fn new() -> Self {
        StubClient {
            responses: HashMap::new(),
            model: "stub".into(),
        }
    }

    pub fn register(&mut self, prompt: &str, response: impl Into<String>) {
        self.responses.insert(prompt_hash(prompt), response.into());
    }

    pub fn register_hash(&mut self, hash: impl Into<String>, response: impl Into<String>) {
        self.responses.insert(hash.into(), response.into());
    }

    /// Loads a fixture in the response-cache JSONL format.
    pub fn from_fixture(path: impl AsRef<Path>) -> Result<Self, PromptError> {
        let mut stub = StubClient::new();
        for entry in read_entries(path.as_ref())? {
            stub.register_hash(entry.prompt_sha256, entry.response);
        }
        Ok(stub)
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl LlmClient for StubClient {
    fn generate(&self, prompt: &str, _temperature: f64) -> Result<String, LlmError> {
        let hash = prompt_hash(prompt);
        self.responses.get(&hash).cloned().ok_or(LlmError::NoFixture(hash))
    }

    fn model(&self) -> &str {
        &self.model
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    /// Base URL up to and including the API version, e.g. `https://host/v1`.
    pub base_url: String,
    pub api_key: Option<String>,
    pub model: String,
    pub timeout: Duration,
    /// Clamped to `1..=MAX_ATTEMPTS`.
    pub max_attempts: usize,
    pub backoff: Duration,
}

impl HttpConfig {
    pub fn from_env() -> Result<Self, LlmError> {
        let base_url = std::env::var(ENV_BASE_URL).map_err(|_| LlmError::MissingConfig(format!("{ENV_BASE_URL} is not set")))?;
        let model = std::env::var(ENV_MODEL).map_err(|_| LlmError::MissingConfig(format!("{ENV_MODEL} is not set")))?;
        Ok(HttpConfig {
            base_url,
            api_key: std::env::var(ENV_API_KEY).ok(),
            model,
            timeout: Duration::from_secs(60),
            max_attempts: MAX_ATTEMPTS,
            backoff: Duration::from_millis(500),
        })
    }
}

/// Client for an OpenAI-compatible `/chat/completions` endpoint.
#[derive(Debug)]
pub struct HttpClient {
    config: HttpConfig,
    agent: ureq::Agent,
}

enum Attempt {
    Done(String),
    Retry(LlmError),
    Fail(LlmError),
}

impl HttpClient {
    pub fn new(config: HttpConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpClient { config, agent }
    }

    pub fn from_env() -> Result<Self, LlmError> {
        Ok(HttpClient::new(HttpConfig::from_env()?))
    }

    fn attempt(&self, body: &str, attempts: usize) -> Attempt {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let mut req = self.agent.post(&url).header("Content-Type", "application/json");
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = match req.send(body) {
            Ok(resp) => resp,
            Err(ureq::Error::Timeout(_)) => return Attempt::Retry(LlmError::Timeout { attempts }),
            Err(e) => {
                return Attempt::Retry(LlmError::Transport {
                    attempts,
                    message: e.to_string(),
                })
            }
        };
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().unwrap_or_default();
        match status {
            200..=299 => match extract_content(&text) {
                Some(content) => Attempt::Done(content),
                None => Attempt::Fail(LlmError::BadResponse(truncate(&text))),
            },
            429 => Attempt::Retry(LlmError::RateLimited { attempts }),
            500..=599 => Attempt::Retry(LlmError::Http {
                status,
                attempts,
                body: truncate(&text),
            }),
            _ => Attempt::Fail(LlmError::Http {
                status,
                attempts,
                body: truncate(&text),
            }),
        }
    }
}

fn truncate(s: &str) -> String {
    s.chars().take(500).collect()
}

fn extract_content(body: &str) -> Option<String> {
    let v: Value = serde_json::from_str(body).ok()?;
    v.get("choices")?.get(0)?.get("message")?.get("content")?.as_str().map(str::to_string)
}

impl LlmClient for HttpClient {
    fn generate(&self, prompt: &str, temperature: f64) -> Result<String, LlmError> {
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
        })
        .to_string();
        let attempts = self.config.max_attempts.clamp(1, MAX_ATTEMPTS);
        let mut last = None;
        for n in 1..=attempts {
            match self.attempt(&body, n) {
                Attempt::Done(content) => return Ok(content),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(e) => last = Some(e),
            }
            if n < attempts {
                std::thread::sleep(self.config.backoff * n as u32);
            }
        }
        Err(last.expect("at least one attempt"))
    }

    fn model(&self) -> &str {
        &self.config.model
    }
}

/// Runs every prompt through `client` with at most `parallelism` requests in
/// flight, consulting and filling `cache` as responses arrive. Results are in
/// prompt order.
pub fn generate_all<C: LlmClient + ?Sized>(
    client: &C,
    prompts: &[String],
    temperature: f64,
    cache: &mut ResponseCache,
    parallelism: usize,
) -> Vec<Result<String, PromptError>> {
    let model = client.model().to_string();
    let next = AtomicUsize::new(0);
    let cache = Mutex::new(cache);
    let results: Mutex<Vec<Option<Result<String, PromptError>>>> = Mutex::new((0..prompts.len()).map(|_| None).collect());
    let worker = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        let Some(prompt) = prompts.get(i) else { break };
        let cached = cache.lock().expect("cache lock").get(prompt, &model, temperature).map(str::to_string);
        let result = match cached {
            Some(r) => Ok(r),
            None => client.generate(prompt, temperature).map_err(PromptError::from).and_then(|r| {
                cache.lock().expect("cache lock").insert(prompt, &model, temperature, &r)?;
                Ok(r)
            }),
        };
        results.lock().expect("results lock")[i] = Some(result);
    };
    std::thread::scope(|s| {
        for _ in 0..parallelism.max(1).min(prompts.len().max(1)) {
            s.spawn(worker);
        }
    });
    results
        .into_inner()
        .expect("results lock")
        .into_iter()
        .map(|r| r.expect("every prompt processed"))
        .collect()
}
