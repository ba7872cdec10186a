//! Sampling candidate repairs from a chat-completion provider.

mod extract;
mod http;
mod mock;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use extract::{extract_code, fenced_blocks, CandidateProgram, ExtractionMethod, WHOLE_TEXT_THRESHOLD};
pub use http::HttpProvider;
pub use mock::MockProvider;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProviderError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited: {0}")]
    RateLimited(String),
    #[error("provider unavailable: {0}")]
    Unavailable(String),
    #[error("request rejected: {0}")]
    BadRequest(String),
    #[error("no canned response: {0}")]
    MockMissing(String),
}

impl ProviderError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, ProviderError::RateLimited(_) | ProviderError::Unavailable(_))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GatewayError {
    #[error("all {samples} samples failed; last error: {last}")]
    ProviderUnavailable { samples: usize, last: String },
    #[error("authentication failed: {0}")]
    AuthError(String),
    #[error("invalid provider config: {0}")]
    InvalidConfig(String),
    #[error("no code found in response")]
    NoCodeFound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub temperature: f64,
    pub samples_per_prompt: usize,
    pub max_retries: u32,
    pub timeout_secs: u64,
    /// Concurrent requests per prompt.
    pub parallelism: usize,
    /// First retry delay; doubles on every further attempt.
    pub backoff_ms: u64,
    pub max_backoff_ms: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-3.5-turbo".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            temperature: 0.8,
            samples_per_prompt: 5,
            max_retries: 3,
            timeout_secs: 60,
            parallelism: 1,
            backoff_ms: 500,
            max_backoff_ms: 30_000,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        let bad = |m: &str| Err(GatewayError::InvalidConfig(m.to_string()));
        if self.samples_per_prompt == 0 {
            return bad("samples_per_prompt must be at least 1");
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return bad("temperature must be a nonnegative number");
        }
        if self.parallelism == 0 {
            return bad("parallelism must be at least 1");
        }
        if self.timeout_secs == 0 {
            return bad("timeout_secs must be positive");
        }
        Ok(())
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let ms = self.backoff_ms.saturating_mul(1u64 << attempt.min(20)).min(self.max_backoff_ms);
        Duration::from_millis(ms)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest<'a> {
    pub prompt: &'a str,
    pub prompt_id: &'a str,
    pub sample_index: usize,
    pub model: &'a str,
    pub temperature: f64,
}

pub trait Provider: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ProviderError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawResponse {
    pub prompt_id: String,
    pub sample_index: usize,
    /// Reply text; `None` when the sample failed.
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub provider: String,
    pub retries: u32,
    /// Wall time in milliseconds, retries included.
    pub latency_ms: u64,
}

impl RawResponse {
    pub fn failed(&self) -> bool {
        self.text.is_none()
    }
}

/// Hex SHA-256 of the rendered prompt.
pub fn prompt_id(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// Requests `samples_per_prompt` independent completions. Samples that still
/// fail after retries are returned marked as failed. The call as a whole
/// fails only on an authentication error or when every sample failed.
pub fn sample_repairs(
    prompt: &str,
    cfg: &ProviderConfig,
    provider: &dyn Provider,
) -> Result<Vec<RawResponse>, GatewayError> {
    sample_repairs_with_sleep(prompt, cfg, provider, &std::thread::sleep)
}

pub fn sample_repairs_with_sleep(
    prompt: &str,
    cfg: &ProviderConfig,
    provider: &dyn Provider,
    sleep: &(dyn Fn(Duration) + Sync),
) -> Result<Vec<RawResponse>, GatewayError> {
    cfg.validate()?;
    let id = prompt_id(prompt);
    let n = cfg.samples_per_prompt;
    let slots: Vec<Mutex<Option<SampleResult>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..cfg.parallelism.min(n) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                if k >= n {
                    break;
                }
                let request = CompletionRequest {
                    prompt,
                    prompt_id: &id,
                    sample_index: k,
                    model: &cfg.model,
                    temperature: cfg.temperature,
                };
                let response = one_sample(&request, cfg, provider, sleep);
                *slots[k].lock().expect("slot lock") = Some(response);
            });
        }
    });
    let (responses, errors): (Vec<RawResponse>, Vec<Option<ProviderError>>) =
        slots.into_iter().map(|m| m.into_inner().expect("slot lock").expect("every slot filled")).unzip();

    if let Some(ProviderError::Auth(msg)) = errors.into_iter().flatten().find(|e| matches!(e, ProviderError::Auth(_))) {
        return Err(GatewayError::AuthError(msg));
    }
    if responses.iter().all(RawResponse::failed) {
        let last = responses.last().and_then(|r| r.error.clone()).unwrap_or_default();
        return Err(GatewayError::ProviderUnavailable { samples: n, last });
    }
    Ok(responses)
}

type SampleResult = (RawResponse, Option<ProviderError>);

fn one_sample(
    request: &CompletionRequest<'_>,
    cfg: &ProviderConfig,
    provider: &dyn Provider,
    sleep: &(dyn Fn(Duration) + Sync),
) -> SampleResult {
    let started = Instant::now();
    let mut retries = 0;
    let outcome = loop {
        match provider.complete(request) {
            Ok(text) => break Ok(text),
            Err(e) if e.is_retryable() && retries < cfg.max_retries => {
                log::warn!("sample {} of {}: {e}; retrying", request.sample_index, &request.prompt_id[..12]);
                sleep(cfg.backoff(retries));
                retries += 1;
            }
            Err(e) => break Err(e),
        }
    };
    let (text, error) = match outcome {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(e)),
    };
    let response = RawResponse {
        prompt_id: request.prompt_id.to_string(),
        sample_index: request.sample_index,
        text,
        error: error.as_ref().map(ToString::to_string),
        provider: provider.name().to_string(),
        retries,
        latency_ms: started.elapsed().as_millis() as u64,
    };
    (response, error)
}
