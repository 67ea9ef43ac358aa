use std::time::Duration;

use serde_json::{json, Value};

use super::backend::{BackendError, BackendReply, ChatBackend, Usage};
use super::prompt::PromptBundle;

pub const DEFAULT_KEY_ENV: &str = "MOTIF_API_KEY";

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    /// Full chat-completions URL.
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub timeout: Duration,
    /// Environment variable holding the bearer token.
    pub key_env: String,
}

impl HttpConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            temperature: 1.0,
            timeout: Duration::from_secs(120),
            key_env: DEFAULT_KEY_ENV.to_string(),
        }
    }
}

/// Replaces every occurrence of `secret` in `text`.
pub fn redact(text: &str, secret: Option<&str>) -> String {
    match secret {
        Some(s) if !s.is_empty() => text.replace(s, "[redacted]"),
        _ => text.to_string(),
    }
}

fn redact_value(v: &Value, secret: Option<&str>) -> Value {
    match v {
        Value::String(s) => Value::String(redact(s, secret)),
        Value::Array(xs) => Value::Array(xs.iter().map(|x| redact_value(x, secret)).collect()),
        Value::Object(m) => Value::Object(m.iter().map(|(k, x)| (k.clone(), redact_value(x, secret))).collect()),
        other => other.clone(),
    }
}

pub fn response_schema() -> Value {
    json!({
        "type": "json_schema",
        "json_schema": {
            "name": "strategy_reply",
            "strict": true,
            "schema": {
                "type": "object",
                "properties": {
                    "reasoning": {"type": "string"},
                    "code": {"type": "string"},
                    "summary": {"type": "string"}
                },
                "required": ["reasoning", "code", "summary"],
                "additionalProperties": false
            }
        }
    })
}

/// Chat-completions client using the structured-output request mode.
pub struct HttpChatBackend {
    config: HttpConfig,
    key: Option<String>,
    client: reqwest::blocking::Client,
    exchanges: Vec<Value>,
}

impl std::fmt::Debug for HttpChatBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpChatBackend")
            .field("config", &self.config)
            .field("key", &self.key.as_ref().map(|_| "[redacted]"))
            .finish()
    }
}

impl HttpChatBackend {
    /// Reads the credential from `config.key_env`; a missing variable means
    /// requests go out without an authorization header.
    pub fn new(config: HttpConfig) -> Result<Self, BackendError> {
        let key = std::env::var(&config.key_env).ok().filter(|k| !k.is_empty());
        Self::with_key(config, key)
    }

    pub fn with_key(config: HttpConfig, key: Option<String>) -> Result<Self, BackendError> {
        if config.model.trim().is_empty() {
            return Err(BackendError::Config("http backend needs a model name".into()));
        }
        if key.is_none() {
            log::warn!("{} is not set; sending unauthenticated requests", config.key_env);
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(Self { config, key, client, exchanges: Vec::new() })
    }

    pub fn request_body(&self, bundle: &PromptBundle) -> Value {
        json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [
                {"role": "system", "content": bundle.system},
                {"role": "user", "content": bundle.human}
            ],
            "response_format": response_schema()
        })
    }

    fn record(&mut self, request: &Value, status: Option<u16>, response: Value) {
        let key = self.key.as_deref();
        self.exchanges.push(json!({
            "request": redact_value(request, key),
            "status": status,
            "response": redact_value(&response, key),
        }));
    }
}

/// Extracts the message text and token usage from a completion body.
pub fn read_completion(body: &Value) -> Result<BackendReply, BackendError> {
    let content = body
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| BackendError::Transport("completion has no message content".into()))?;
    let usage = body.get("usage").map(|u| Usage {
        prompt_tokens: u.get("prompt_tokens").and_then(Value::as_u64).unwrap_or(0),
        completion_tokens: u.get("completion_tokens").and_then(Value::as_u64).unwrap_or(0),
    });
    Ok(BackendReply { content: content.to_string(), usage })
}

impl ChatBackend for HttpChatBackend {
    fn complete(&mut self, bundle: &PromptBundle, _request: u64) -> Result<BackendReply, BackendError> {
        let body = self.request_body(bundle);
        let mut req = self.client.post(&self.config.endpoint).json(&body);
        if let Some(k) = &self.key {
            req = req.bearer_auth(k);
        }
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) => {
                let msg = redact(&e.to_string(), self.key.as_deref());
                self.record(&body, None, Value::String(msg.clone()));
                return Err(BackendError::Transport(msg));
            }
        };
        let status = resp.status();
        let text = resp.text().map_err(|e| BackendError::Transport(redact(&e.to_string(), self.key.as_deref())))?;
        let parsed: Value = serde_json::from_str(&text).unwrap_or(Value::String(text.clone()));
        self.record(&body, Some(status.as_u16()), parsed.clone());
        if !status.is_success() {
            return Err(BackendError::Transport(format!("server answered {status}")));
        }
        read_completion(&parsed)
    }

    fn name(&self) -> &str {
        "http-chat"
    }

    fn take_exchanges(&mut self) -> Vec<Value> {
        std::mem::take(&mut self.exchanges)
    }
}
