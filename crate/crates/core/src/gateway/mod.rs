//! Chat-completion interface: request types, retrying gateway, the tool loop
//! and two backends (HTTP and scripted).

mod http;
mod scripted;
mod tool_loop;

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{SharedLedger, Usage};
use crate::orchestrator::RetryPolicy;

pub use http::{HttpBackend, HttpConfig, API_KEY_ENV, DEFAULT_ENDPOINT};
pub use scripted::{ScriptStep, ScriptedBackend};
pub use tool_loop::{
    parse_text_tool_calls, run_tool_loop, text_tool_protocol, ToolBox, TurnOutcome,
    BUDGET_EXHAUSTED, REPEATED_CALL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ContentPart {
    Text { text: String },
    Image { data_url: String },
}

/// A tool invocation requested by the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolIntent {
    pub id: String,
    pub name: String,
    pub arguments: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub parts: Vec<ContentPart>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<ToolIntent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_call_id: Option<String>,
}

impl Message {
    pub fn text(role: Role, text: impl Into<String>) -> Self {
        Self {
            role,
            parts: vec![ContentPart::Text { text: text.into() }],
            tool_calls: Vec::new(),
            tool_call_id: None,
        }
    }

    pub fn system(text: impl Into<String>) -> Self {
        Self::text(Role::System, text)
    }

    pub fn user(text: impl Into<String>) -> Self {
        Self::text(Role::User, text)
    }

    pub fn user_with_images(text: impl Into<String>, images: &[String]) -> Self {
        let mut m = Self::user(text);
        m.parts.extend(images.iter().map(|u| ContentPart::Image {
            data_url: u.clone(),
        }));
        m
    }

    pub fn assistant(text: impl Into<String>, tool_calls: Vec<ToolIntent>) -> Self {
        let text = text.into();
        Self {
            role: Role::Assistant,
            parts: if text.is_empty() {
                Vec::new()
            } else {
                vec![ContentPart::Text { text }]
            },
            tool_calls,
            tool_call_id: None,
        }
    }

    pub fn tool_result(call_id: &str, text: impl Into<String>) -> Self {
        Self {
            role: Role::Tool,
            parts: vec![ContentPart::Text { text: text.into() }],
            tool_calls: Vec::new(),
            tool_call_id: Some(call_id.to_string()),
        }
    }

    /// Concatenated text parts.
    pub fn joined_text(&self) -> String {
        self.parts
            .iter()
            .filter_map(|p| match p {
                ContentPart::Text { text } => Some(text.as_str()),
                ContentPart::Image { .. } => None,
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn image_count(&self) -> usize {
        self.parts
            .iter()
            .filter(|p| matches!(p, ContentPart::Image { .. }))
            .count()
    }
}

/// Declaration of a callable tool, in JSON-schema form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    pub description: String,
    pub parameters: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToolChoice {
    #[default]
    Auto,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tools: Vec<ToolSpec>,
    #[serde(default)]
    pub tool_choice: ToolChoice,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub max_tokens: u32,
    /// Role tag, e.g. `analyst.NUMERICAL.r1`. Not sent to providers.
    pub agent: String,
    /// Instance being solved. Not sent to providers.
    pub instance: String,
    /// Model turn index within the agent's conversation. Not sent to providers.
    #[serde(default)]
    pub turn: u32,
}

impl ChatRequest {
    pub fn new(model: &str, agent: &str, instance: &str, messages: Vec<Message>) -> Self {
        Self {
            model: model.to_string(),
            messages,
            tools: Vec::new(),
            tool_choice: ToolChoice::Auto,
            temperature: 0.0,
            seed: None,
            max_tokens: 1200,
            agent: agent.to_string(),
            instance: instance.to_string(),
            turn: 0,
        }
    }

    pub fn image_count(&self) -> usize {
        self.messages.iter().map(Message::image_count).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<ToolIntent>,
    pub usage: Usage,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GatewayError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("rate limited")]
    RateLimited { retry_after: Option<Duration> },
    #[error("provider error (HTTP {status}): {message}")]
    Provider { status: u16, message: String },
    #[error("malformed provider response: {excerpt}")]
    Decode { excerpt: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("script error: {0}")]
    Script(String),
    #[error("[{instance} / {agent}] {source}")]
    Turn {
        instance: String,
        agent: String,
        #[source]
        source: Box<GatewayError>,
    },
}

impl GatewayError {
    fn retryable(&self) -> bool {
        match self {
            GatewayError::Transport(_) | GatewayError::RateLimited { .. } => true,
            GatewayError::Provider { status, .. } => *status >= 500,
            _ => false,
        }
    }
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError>;

    /// Backends that never touch the network report zero elapsed time so
    /// transcripts stay byte-identical.
    fn deterministic(&self) -> bool {
        false
    }
}

/// Per-call context: where usage is recorded and where captures go.
#[derive(Clone, Copy)]
pub struct CallContext<'a> {
    pub ledger: &'a SharedLedger,
    pub capture_dir: Option<&'a Path>,
}

#[derive(Clone)]
pub struct Gateway {
    backend: Arc<dyn ChatBackend>,
    retry: RetryPolicy,
    sleep: fn(Duration),
}

impl Gateway {
    pub fn new(backend: Arc<dyn ChatBackend>, retry: RetryPolicy) -> Self {
        Self {
            backend,
            retry,
            sleep: std::thread::sleep,
        }
    }

    /// Replaces the backoff sleeper (tests).
    pub fn with_sleeper(mut self, sleep: fn(Duration)) -> Self {
        self.sleep = sleep;
        self
    }

    pub fn deterministic(&self) -> bool {
        self.backend.deterministic()
    }

    /// Seconds since `start`, or 0 under a deterministic backend.
    pub fn elapsed(&self, start: Instant) -> f64 {
        if self.deterministic() {
            0.0
        } else {
            start.elapsed().as_secs_f64()
        }
    }

    /// One assistant turn with retries. Usage lands in `ctx.ledger`.
    pub fn complete(&self, ctx: CallContext<'_>, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        if let Some(dir) = ctx.capture_dir {
            write_capture(dir, request, "request", request);
        }
        let attempts = self.retry.attempts.max(1);
        let mut attempt = 0;
        let result = loop {
            attempt += 1;
            match self.backend.complete(request) {
                Ok(r) => break Ok(r),
                Err(e) if e.retryable() && attempt < attempts => {
                    let wait = match &e {
                        GatewayError::RateLimited {
                            retry_after: Some(d),
                        } => *d,
                        _ => Duration::from_millis(
                            self.retry.base_delay_ms.saturating_mul(1 << (attempt - 1)),
                        ),
                    };
                    (self.sleep)(wait);
                }
                Err(e) => break Err(e),
            }
        };
        match result {
            Ok(resp) => {
                ctx.ledger.record(resp.usage);
                if let Some(dir) = ctx.capture_dir {
                    write_capture(dir, request, "response", &resp);
                }
                Ok(resp)
            }
            Err(e) => Err(GatewayError::Turn {
                instance: request.instance.clone(),
                agent: request.agent.clone(),
                source: Box::new(e),
            }),
        }
    }
}

/// Capture file path for one request or response.
pub fn capture_path(dir: &Path, agent: &str, turn: u32, kind: &str) -> PathBuf {
    dir.join(format!("{agent}.t{turn}.{kind}.json"))
}

fn write_capture<T: Serialize>(dir: &Path, request: &ChatRequest, kind: &str, value: &T) {
    // Captures are diagnostics; a failed write must not fail the run.
    let _ = std::fs::create_dir_all(dir);
    if let Ok(json) = serde_json::to_string_pretty(value) {
        let _ = std::fs::write(capture_path(dir, &request.agent, request.turn, kind), json);
    }
}
