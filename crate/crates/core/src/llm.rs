//! Completion backends: a remote OpenAI-compatible chat client with bounded
//! retries, and a deterministic scripted backend replaying fixture files.
//!
//! [`complete`] checks the token budget before anything else; an oversized
//! bundle never reaches a backend. Backends are stateless per call and safe
//! to share across threads; scripted fixtures are loaded read-only up front.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::program::GeneratedText;
use crate::prompt::{LlmConfig, PromptBundle};

/// Environment variable holding the bearer token for the remote backend.
pub const API_KEY_ENV: &str = "WEBWISE_API_KEY";

/// Identifies one completion call for scripted lookup: the task, the episode
/// seed, and the 0-based index of the call within the episode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CallKey {
    pub task_id: String,
    pub seed: u64,
    pub step_index: usize,
}

impl CallKey {
    pub fn new(task_id: &str, seed: u64, step_index: usize) -> Self {
        Self { task_id: task_id.to_string(), seed, step_index }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("Token Limit Exceeded: estimated {estimate} tokens over a budget of {budget}")]
    TokenLimitExceeded { estimate: usize, budget: usize },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("no scripted response for task '{task_id}' seed {seed} step {step_index}")]
    ScriptMiss { task_id: String, seed: u64, step_index: usize },
    #[error("fixture error: {0}")]
    Fixture(String),
}

/// A source of completions. Implementations must be safe to call from
/// multiple threads at once.
pub trait CompletionBackend: Send + Sync {
    fn complete(&self, bundle: &PromptBundle, key: &CallKey) -> Result<GeneratedText, LlmError>;
}

/// Completes a prompt after enforcing the input token budget. Returns
/// [`LlmError::TokenLimitExceeded`] without calling the backend when the
/// bundle estimate is over `cfg.max_tokens`.
pub fn complete(
    backend: &dyn CompletionBackend,
    bundle: &PromptBundle,
    key: &CallKey,
    cfg: &LlmConfig,
) -> Result<GeneratedText, LlmError> {
    if bundle.token_estimate > cfg.max_tokens {
        return Err(LlmError::TokenLimitExceeded {
            estimate: bundle.token_estimate,
            budget: cfg.max_tokens,
        });
    }
    backend.complete(bundle, key)
}

/// One line of a scripted fixture file. `seed` narrows a record to a single
/// episode; records without it answer every episode of the task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub task_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub step_index: usize,
    pub response_text: String,
}

/// Deterministic backend replaying responses from fixture records. Lookup
/// tries the seed-qualified key first, then the seed-agnostic one, and fails
/// loudly on a miss.
#[derive(Debug, Default, Clone)]
pub struct ScriptedBackend {
    responses: HashMap<(String, Option<u64>, usize), String>,
}

impl ScriptedBackend {
    pub fn from_records(records: impl IntoIterator<Item = FixtureRecord>) -> Self {
        let mut responses = HashMap::new();
        for record in records {
            responses
                .insert((record.task_id, record.seed, record.step_index), record.response_text);
        }
        Self { responses }
    }

    /// Loads a line-delimited JSON fixture file.
    pub fn from_file(path: &Path) -> Result<Self, LlmError> {
        let file = fs::File::open(path)
            .map_err(|e| LlmError::Fixture(format!("open {}: {e}", path.display())))?;
        let mut records = Vec::new();
        for (number, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| LlmError::Fixture(format!("read line: {e}")))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: FixtureRecord = serde_json::from_str(&line).map_err(|e| {
                LlmError::Fixture(format!("{}:{}: {e}", path.display(), number + 1))
            })?;
            records.push(record);
        }
        Ok(Self::from_records(records))
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl CompletionBackend for ScriptedBackend {
    fn complete(&self, _bundle: &PromptBundle, key: &CallKey) -> Result<GeneratedText, LlmError> {
        let qualified = (key.task_id.clone(), Some(key.seed), key.step_index);
        if let Some(text) = self.responses.get(&qualified) {
            return Ok(GeneratedText::from(text.clone()));
        }
        let fallback = (key.task_id.clone(), None, key.step_index);
        match self.responses.get(&fallback) {
            Some(text) => Ok(GeneratedText::from(text.clone())),
            None => Err(LlmError::ScriptMiss {
                task_id: key.task_id.clone(),
                seed: key.seed,
                step_index: key.step_index,
            }),
        }
    }
}

/// Writes fixture records as line-delimited JSON.
pub fn write_fixture(path: &Path, records: &[FixtureRecord]) -> std::io::Result<()> {
    let mut out = fs::File::create(path)?;
    for record in records {
        let line = serde_json::to_string(record).expect("fixture record serializes");
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Retry schedule for the remote backend: transient failures (transport
/// errors, 429, 5xx) are retried with exponential backoff.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { attempts: 3, initial_backoff: Duration::from_secs(1) }
    }
}

/// OpenAI-compatible chat-completions client.
pub struct RemoteBackend {
    client: reqwest::blocking::Client,
    base_url: String,
    api_key: Option<String>,
    model_name: String,
    temperature: f64,
    retry: RetryPolicy,
}

#[derive(Debug, Deserialize)]
struct ChatCompletionResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Debug, Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Debug, Deserialize)]
struct ChatMessage {
    content: String,
}

impl RemoteBackend {
    /// Builds a client for `base_url`, reading the bearer token from
    /// [`API_KEY_ENV`].
    pub fn new(base_url: &str, cfg: &LlmConfig, retry: RetryPolicy) -> Self {
        Self {
            client: reqwest::blocking::Client::new(),
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key: std::env::var(API_KEY_ENV).ok(),
            model_name: cfg.model_name.clone(),
            temperature: cfg.temperature,
            retry,
        }
    }

    fn request_once(&self, body: &serde_json::Value) -> Result<GeneratedText, RequestFailure> {
        let url = format!("{}/v1/chat/completions", self.base_url);
        let mut request = self.client.post(&url).json(body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .map_err(|e| RequestFailure::Transient(format!("request to {url}: {e}")))?;
        let status = response.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(RequestFailure::Transient(format!("status {status}")));
        }
        if !status.is_success() {
            return Err(RequestFailure::Permanent(format!("status {status}")));
        }
        let parsed: ChatCompletionResponse = response
            .json()
            .map_err(|e| RequestFailure::Permanent(format!("malformed response: {e}")))?;
        let content = parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| RequestFailure::Permanent("response held no choices".to_string()))?;
        Ok(GeneratedText::from(content))
    }
}

enum RequestFailure {
    Transient(String),
    Permanent(String),
}

impl CompletionBackend for RemoteBackend {
    fn complete(&self, bundle: &PromptBundle, _key: &CallKey) -> Result<GeneratedText, LlmError> {
        let messages: Vec<serde_json::Value> = bundle
            .messages
            .iter()
            .map(|m| serde_json::json!({ "role": m.role.as_str(), "content": m.content }))
            .collect();
        let body = serde_json::json!({
            "model": self.model_name,
            "temperature": self.temperature,
            "messages": messages,
        });
        let mut backoff = self.retry.initial_backoff;
        let mut last_error = String::new();
        for attempt in 1..=self.retry.attempts {
            match self.request_once(&body) {
                Ok(text) => return Ok(text),
                Err(RequestFailure::Permanent(reason)) => {
                    return Err(LlmError::Transport(reason));
                }
                Err(RequestFailure::Transient(reason)) => {
                    last_error = reason;
                    if attempt < self.retry.attempts {
                        std::thread::sleep(backoff);
                        backoff *= 2;
                    }
                }
            }
        }
        Err(LlmError::Transport(format!(
            "gave up after {} attempts: {last_error}",
            self.retry.attempts
        )))
    }
}
