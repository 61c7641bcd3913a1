//! OpenAI-compatible chat-completions backend with retry and backoff.

use std::thread;
use std::time::{Duration, Instant};

use cultalign_core::gateway::{ChatBackend, ChatRequest, ChatResponse, GatewayError};
use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub timeout: Duration,
    /// Total attempts per request, including the first.
    pub max_attempts: u32,
    /// Delay before the second attempt; doubles on each further retry.
    pub backoff: Duration,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: String::new(),
            api_key_env: "CULTALIGN_API_KEY".into(),
            timeout: Duration::from_secs(60),
            max_attempts: 3,
            backoff: Duration::from_secs(1),
        }
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    api_key: String,
    agent: ureq::Agent,
    id: String,
}

impl HttpBackend {
    /// Reads the key from the configured environment variable.
    pub fn from_env(config: HttpConfig) -> Result<Self, GatewayError> {
        let key = std::env::var(&config.api_key_env)
            .map_err(|_| GatewayError::Config(format!("environment variable {} is not set", config.api_key_env)))?;
        Self::new(config, key)
    }

    pub fn new(config: HttpConfig, api_key: String) -> Result<Self, GatewayError> {
        if config.model.is_empty() {
            return Err(GatewayError::Config("backend.model is empty".into()));
        }
        if config.max_attempts == 0 {
            return Err(GatewayError::Config("backend.max_attempts must be positive".into()));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let id = format!("http:{}", config.model);
        Ok(Self { config, api_key, agent, id })
    }

    fn body(&self, request: &ChatRequest) -> Value {
        let mut messages = Vec::new();
        if !request.system_prompt.is_empty() {
            messages.push(json!({ "role": "system", "content": request.system_prompt }));
        }
        messages.push(json!({ "role": "user", "content": request.user_prompt }));
        let mut body = json!({
            "model": self.config.model,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        if let Some(seed) = request.seed {
            body["seed"] = json!(seed);
        }
        body
    }

    fn attempt(&self, body: &str) -> Result<(String, bool), GatewayError> {
        let mut resp = self
            .agent
            .post(&self.config.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .header("Content-Type", "application/json")
            .send(body)
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| GatewayError::Transport(e.to_string()))?;
        match status {
            200..=299 => parse_completion(&text),
            401 | 403 => Err(GatewayError::Auth(format!("HTTP {status}"))),
            _ => Err(GatewayError::Http { status, body: truncate(&text, 300) }),
        }
    }
}

fn truncate(s: &str, n: usize) -> String {
    s.chars().take(n).collect()
}

/// Content and whether generation stopped on the token limit.
fn parse_completion(text: &str) -> Result<(String, bool), GatewayError> {
    let v: Value = serde_json::from_str(text).map_err(|e| GatewayError::Malformed(e.to_string()))?;
    let choice = v.get("choices").and_then(|c| c.get(0)).ok_or_else(|| GatewayError::Malformed("no choices".into()))?;
    let content = choice
        .pointer("/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| GatewayError::Malformed("no message content".into()))?;
    let truncated = choice.get("finish_reason").and_then(Value::as_str) == Some("length");
    Ok((content.to_string(), truncated))
}

impl ChatBackend for HttpBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        request.validate()?;
        let body = self.body(request).to_string();
        let start = Instant::now();
        let mut delay = self.config.backoff;
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&body) {
                Ok((text, truncated)) => {
                    return Ok(ChatResponse {
                        text,
                        backend_id: self.id.clone(),
                        latency: start.elapsed(),
                        attempts,
                        truncated,
                    })
                }
                Err(e) if e.is_transient() && attempts < self.config.max_attempts => {
                    thread::sleep(delay);
                    delay = delay.saturating_mul(2);
                }
                Err(e) if e.is_transient() => {
                    return Err(GatewayError::Exhausted { attempts, last: e.to_string() });
                }
                Err(e) => return Err(e),
            }
        }
    }
}
