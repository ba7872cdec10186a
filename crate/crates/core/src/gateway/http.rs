use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

use super::{CompletionRequest, GatewayError, Provider, ProviderConfig, ProviderError};

/// OpenAI-style chat-completion endpoint, one request per sample.
pub struct HttpProvider {
    client: Client,
    endpoint: String,
    api_key: Option<String>,
}

impl HttpProvider {
    /// Reads the API key from the configured environment variable, if set.
    pub fn new(cfg: &ProviderConfig) -> Result<Self, GatewayError> {
        let api_key = std::env::var(&cfg.api_key_env).ok().filter(|k| !k.is_empty());
        Self::with_key(cfg, api_key)
    }

    pub fn with_key(cfg: &ProviderConfig, api_key: Option<String>) -> Result<Self, GatewayError> {
        let client = Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| GatewayError::InvalidConfig(e.to_string()))?;
        Ok(Self { client, endpoint: cfg.endpoint.clone(), api_key })
    }

    pub fn request_body(request: &CompletionRequest<'_>) -> Value {
        json!({
            "model": request.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "n": 1,
        })
    }
}

pub fn classify_status(status: StatusCode, body: &str) -> ProviderError {
    let msg = format!("HTTP {}: {}", status.as_u16(), truncate(body, 300));
    match status.as_u16() {
        401 | 403 => ProviderError::Auth(msg),
        429 => ProviderError::RateLimited(msg),
        500..=599 => ProviderError::Unavailable(msg),
        _ => ProviderError::BadRequest(msg),
    }
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

pub fn parse_reply(body: &str) -> Result<String, ProviderError> {
    let v: Value =
        serde_json::from_str(body).map_err(|e| ProviderError::BadRequest(format!("invalid JSON reply: {e}")))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| ProviderError::BadRequest("reply has no choices[0].message.content".into()))
}

impl Provider for HttpProvider {
    fn name(&self) -> &str {
        "http"
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ProviderError> {
        let mut req = self.client.post(&self.endpoint).json(&Self::request_body(request));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        let status = resp.status();
        let body = resp.text().map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        if !status.is_success() {
            return Err(classify_status(status, &body));
        }
        parse_reply(&body)
    }
}
