//! Blocking client for a text-completions JSON endpoint, and a task backend
//! built on it.
//!
//! Request body: `{model, prompt, temperature, max_tokens, stop}`.
//! Response body: `{"choices": [{"text": ...}, ...]}`.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::prompt::{build_predict_prompt, build_refine_prompt, PromptExemplars, PromptTask};
use super::{BackendError, TaskBackend};
use crate::rng::Rng;

/// Environment variable holding the bearer credential.
pub const API_KEY_ENV: &str = "LLM_API_KEY";

pub const REFINE_TEMPERATURE: f64 = 0.0;
pub const PREDICT_TEMPERATURE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub base_url: String,
    pub model_name: String,
    pub timeout_ms: u64,
    pub max_in_flight: usize,
    pub max_attempts: u32,
    pub backoff_ms: u64,
    pub max_tokens: u32,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            base_url: "http://localhost:8000/v1".into(),
            model_name: "code-davinci-002".into(),
            timeout_ms: 30_000,
            max_in_flight: 4,
            max_attempts: 3,
            backoff_ms: 500,
            max_tokens: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlmRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub stop: Vec<String>,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    temperature: f64,
    max_tokens: u32,
    stop: &'a [String],
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    text: String,
}

/// Counting gate on concurrent requests.
struct InFlight {
    active: Mutex<usize>,
    freed: Condvar,
    cap: usize,
}

impl InFlight {
    fn acquire(&self) -> InFlightGuard<'_> {
        let mut n = self.active.lock().expect("in-flight lock");
        while *n >= self.cap {
            n = self.freed.wait(n).expect("in-flight lock");
        }
        *n += 1;
        InFlightGuard(self)
    }
}

struct InFlightGuard<'a>(&'a InFlight);

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        *self.0.active.lock().expect("in-flight lock") -= 1;
        self.0.freed.notify_one();
    }
}

enum Attempt {
    Transient(String),
    Retryable5xx(u16, String),
}

pub struct LlmClient {
    config: LlmConfig,
    api_key: String,
    agent: ureq::Agent,
    gate: InFlight,
}

impl std::fmt::Debug for LlmClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LlmClient")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl LlmClient {
    /// Reads the credential from `LLM_API_KEY`.
    pub fn from_env(config: LlmConfig) -> Result<Self, BackendError> {
        let key = std::env::var(API_KEY_ENV)
            .map_err(|_| BackendError::Config(format!("{API_KEY_ENV} is not set")))?;
        Self::with_api_key(config, key)
    }

    pub fn with_api_key(config: LlmConfig, api_key: String) -> Result<Self, BackendError> {
        if config.base_url.is_empty() {
            return Err(BackendError::Config("base_url is empty".into()));
        }
        if config.max_in_flight == 0 || config.max_attempts == 0 {
            return Err(BackendError::Config(
                "max_in_flight and max_attempts must be positive".into(),
            ));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        let gate = InFlight {
            active: Mutex::new(0),
            freed: Condvar::new(),
            cap: config.max_in_flight,
        };
        Ok(Self {
            config,
            api_key,
            agent,
            gate,
        })
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    fn endpoint(&self) -> String {
        format!("{}/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn attempt(&self, body: &WireRequest<'_>) -> Result<Result<String, Attempt>, BackendError> {
        let _slot = self.gate.acquire();
        let sent = self
            .agent
            .post(&self.endpoint())
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(body);
        let mut resp = match sent {
            Ok(r) => r,
            Err(e) => return Ok(Err(Attempt::Transient(e.to_string()))),
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Ok(Err(Attempt::Transient(e.to_string()))),
        };
        if status == 429 || status >= 500 {
            return Ok(Err(Attempt::Retryable5xx(status, text)));
        }
        if !(200..300).contains(&status) {
            return Err(BackendError::Status { status, body: text });
        }
        let parsed: WireResponse =
            serde_json::from_str(&text).map_err(|e| BackendError::Malformed(e.to_string()))?;
        let first = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| BackendError::Malformed("no choices".into()))?;
        Ok(Ok(first.text))
    }

    /// Sends one completion request, retrying transport failures, 429 and 5xx
    /// with exponential backoff. The text is cut at the first stop sequence.
    pub fn complete(&self, request: &LlmRequest) -> Result<String, BackendError> {
        let body = WireRequest {
            model: &self.config.model_name,
            prompt: &request.prompt,
            temperature: request.temperature,
            max_tokens: request.max_tokens,
            stop: &request.stop,
        };
        let mut last = None;
        for attempt in 0..self.config.max_attempts {
            if attempt > 0 {
                let wait = self.config.backoff_ms.saturating_mul(1 << (attempt - 1));
                std::thread::sleep(Duration::from_millis(wait));
            }
            match self.attempt(&body)? {
                Ok(text) => return Ok(truncate_at_stop(&text, &request.stop).to_owned()),
                Err(e) => last = Some(e),
            }
        }
        Err(match last {
            Some(Attempt::Retryable5xx(status, body)) => BackendError::Status { status, body },
            Some(Attempt::Transient(message)) => BackendError::Network {
                attempts: self.config.max_attempts,
                message,
            },
            None => unreachable!("max_attempts > 0"),
        })
    }
}

/// Cuts `text` at the earliest occurrence of any stop sequence.
pub(crate) fn truncate_at_stop<'a>(text: &'a str, stop: &[String]) -> &'a str {
    let cut = stop
        .iter()
        .filter(|s| !s.is_empty())
        .filter_map(|s| text.find(s.as_str()))
        .min()
        .unwrap_or(text.len());
    &text[..cut]
}

fn parse_list(text: &str) -> Vec<String> {
    text.lines()
        .next()
        .unwrap_or("")
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| c == ',' || c == '.').to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

/// A prompted LLM as the task model.
#[derive(Debug)]
pub struct LlmBackend {
    client: LlmClient,
    exemplars: PromptExemplars,
    task: PromptTask,
}

impl LlmBackend {
    pub fn new(client: LlmClient, exemplars: PromptExemplars, task: PromptTask) -> Self {
        Self {
            client,
            exemplars,
            task,
        }
    }

    pub fn client(&self) -> &LlmClient {
        &self.client
    }

    fn request(&self, prompt: String, temperature: f64, stop: &str) -> LlmRequest {
        LlmRequest {
            prompt,
            temperature,
            max_tokens: self.client.config.max_tokens,
            stop: vec![stop.to_owned()],
        }
    }
}

impl TaskBackend for LlmBackend {
    fn predict(&self, x: &[String], _rng: &mut Rng) -> Result<Vec<String>, BackendError> {
        let prompt = build_predict_prompt(&self.exemplars, x);
        let text = self
            .client
            .complete(&self.request(prompt, PREDICT_TEMPERATURE, "\n"))?;
        Ok(parse_list(&text))
    }

    fn refine(
        &self,
        x: &[String],
        y_hat: &[String],
        critique: &str,
        _rng: &mut Rng,
    ) -> Result<Vec<String>, BackendError> {
        let prompt = build_refine_prompt(&self.exemplars, x, y_hat, Some(critique), self.task);
        let text = self
            .client
            .complete(&self.request(prompt, REFINE_TEMPERATURE, "\n\n"))?;
        Ok(parse_list(&text))
    }

    fn complete(&self, prompt: &str, temperature: f64) -> Result<String, BackendError> {
        self.client
            .complete(&self.request(prompt.to_owned(), temperature, "\n\n"))
    }
}
