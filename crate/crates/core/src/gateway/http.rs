//! Chat-completions wire format over HTTPS.

use std::time::Duration;

use serde_json::{json, Value};

use super::{ChatBackend, ChatRequest, ChatResponse, ContentPart, GatewayError, Role, ToolChoice, ToolIntent};
use crate::model::Usage;

pub const API_KEY_ENV: &str = "TSDEBATE_API_KEY";
pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub endpoint: String,
    pub api_key: String,
    pub timeout: Duration,
    /// Forward the request seed (some providers reject the field).
    pub send_seed: bool,
}

pub struct HttpBackend {
    config: HttpConfig,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, GatewayError> {
        if config.api_key.trim().is_empty() {
            return Err(GatewayError::Config(format!("{API_KEY_ENV} is not set")));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(Self { config, client })
    }

    /// Reads the key from [`API_KEY_ENV`].
    pub fn from_env(endpoint: Option<&str>) -> Result<Self, GatewayError> {
        let api_key = std::env::var(API_KEY_ENV)
            .map_err(|_| GatewayError::Config(format!("{API_KEY_ENV} is not set")))?;
        Self::new(HttpConfig {
            endpoint: endpoint.unwrap_or(DEFAULT_ENDPOINT).to_string(),
            api_key,
            timeout: Duration::from_secs(180),
            send_seed: true,
        })
    }
}

/// Request body in the de-facto chat-completions format.
pub fn wire_body(req: &ChatRequest, send_seed: bool) -> Value {
    let messages: Vec<Value> = req
        .messages
        .iter()
        .map(|m| {
            let role = match m.role {
                Role::System => "system",
                Role::User => "user",
                Role::Assistant => "assistant",
                Role::Tool => "tool",
            };
            let has_images = m.parts.iter().any(|p| matches!(p, ContentPart::Image { .. }));
            let content = if has_images {
                Value::Array(
                    m.parts
                        .iter()
                        .map(|p| match p {
                            ContentPart::Text { text } => json!({"type": "text", "text": text}),
                            ContentPart::Image { data_url } => {
                                json!({"type": "image_url", "image_url": {"url": data_url}})
                            }
                        })
                        .collect(),
                )
            } else if m.parts.is_empty() {
                Value::Null
            } else {
                Value::String(m.joined_text())
            };
            let mut msg = json!({"role": role, "content": content});
            if !m.tool_calls.is_empty() {
                msg["tool_calls"] = m
                    .tool_calls
                    .iter()
                    .map(|t| {
                        json!({
                            "id": t.id,
                            "type": "function",
                            "function": {"name": t.name, "arguments": t.arguments.to_string()},
                        })
                    })
                    .collect();
            }
            if let Some(id) = &m.tool_call_id {
                msg["tool_call_id"] = json!(id);
            }
            msg
        })
        .collect();
    let mut body = json!({
        "model": req.model,
        "messages": messages,
        "temperature": req.temperature,
        "max_tokens": req.max_tokens,
    });
    if !req.tools.is_empty() {
        body["tools"] = req
            .tools
            .iter()
            .map(|t| {
                json!({
                    "type": "function",
                    "function": {"name": t.name, "description": t.description, "parameters": t.parameters},
                })
            })
            .collect();
        body["tool_choice"] = json!(match req.tool_choice {
            ToolChoice::Auto => "auto",
            ToolChoice::None => "none",
        });
    }
    if let (Some(seed), true) = (req.seed, send_seed) {
        body["seed"] = json!(seed);
    }
    body
}

pub fn decode_response(body: &str) -> Result<ChatResponse, GatewayError> {
    let excerpt = || GatewayError::Decode {
        excerpt: body.chars().take(300).collect(),
    };
    let v: Value = serde_json::from_str(body).map_err(|_| excerpt())?;
    let msg = v.pointer("/choices/0/message").ok_or_else(excerpt)?;
    let text = msg.get("content").and_then(Value::as_str).unwrap_or("").to_string();
    let mut tool_calls = Vec::new();
    if let Some(calls) = msg.get("tool_calls").and_then(Value::as_array) {
        for (i, c) in calls.iter().enumerate() {
            let name = c.pointer("/function/name").and_then(Value::as_str).ok_or_else(excerpt)?;
            let raw_args = c.pointer("/function/arguments").and_then(Value::as_str).unwrap_or("{}");
            let arguments = serde_json::from_str(raw_args)
                .unwrap_or_else(|_| json!({"_unparsed": raw_args}));
            tool_calls.push(ToolIntent {
                id: c
                    .get("id")
                    .and_then(Value::as_str)
                    .map(str::to_string)
                    .unwrap_or_else(|| format!("call-{i}")),
                name: name.to_string(),
                arguments,
            });
        }
    }
    let usage = Usage::new(
        v.pointer("/usage/prompt_tokens").and_then(Value::as_u64).unwrap_or(0),
        v.pointer("/usage/completion_tokens").and_then(Value::as_u64).unwrap_or(0),
    );
    Ok(ChatResponse {
        text,
        tool_calls,
        usage,
    })
}

impl ChatBackend for HttpBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let resp = self
            .client
            .post(&self.config.endpoint)
            .bearer_auth(&self.config.api_key)
            .json(&wire_body(request, self.config.send_seed))
            .send()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 429 {
            let retry_after = resp
                .headers()
                .get(reqwest::header::RETRY_AFTER)
                .and_then(|h| h.to_str().ok())
                .and_then(|s| s.trim().parse::<f64>().ok())
                .map(Duration::from_secs_f64);
            return Err(GatewayError::RateLimited { retry_after });
        }
        let body = resp.text().map_err(|e| GatewayError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(GatewayError::Provider {
                status: status.as_u16(),
                message: body.chars().take(500).collect(),
            });
        }
        decode_response(&body)
    }
}
