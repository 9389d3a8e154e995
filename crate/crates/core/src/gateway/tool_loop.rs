use std::collections::HashSet;
use std::time::Instant;

use regex::Regex;
use std::sync::LazyLock;

use super::{
    CallContext, ChatRequest, Gateway, GatewayError, Message, Role, ToolChoice, ToolIntent,
    ToolSpec,
};
use crate::model::{ToolCall, Usage};

pub const BUDGET_EXHAUSTED: &str = "tool budget exhausted — provide your answer now";
pub const REPEATED_CALL: &str =
    "repeated call: this tool was already called with identical arguments in this turn.";

type Handler<'a> = dyn Fn(&str, &serde_json::Value) -> Result<String, String> + Sync + 'a;

/// A bound tool set: declarations plus the function that executes them.
pub struct ToolBox<'a> {
    pub specs: Vec<ToolSpec>,
    pub handler: &'a Handler<'a>,
    /// Provider-native function calling; otherwise the `TOOL:` text protocol.
    pub native: bool,
}

#[derive(Debug, Clone)]
pub struct TurnOutcome {
    pub text: String,
    pub tool_log: Vec<ToolCall>,
    pub usage: Usage,
    /// Full conversation including the final assistant reply.
    pub messages: Vec<Message>,
    /// Model turns taken.
    pub turns: u32,
}

/// Alternates model turns and tool executions until the model answers in
/// text. At most `budget` calls execute; the first intent past the budget
/// gets [`BUDGET_EXHAUSTED`] and exactly one more model turn is forced with
/// tools disabled. Turn numbers continue from `request.turn`.
pub fn run_tool_loop(
    gateway: &Gateway,
    ctx: CallContext<'_>,
    mut request: ChatRequest,
    tools: Option<&ToolBox<'_>>,
    budget: u32,
) -> Result<TurnOutcome, GatewayError> {
    let mut usage = Usage::default();
    let mut log: Vec<ToolCall> = Vec::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut executed = 0u32;
    let mut sequence = 0u32;
    let mut forced = false;
    let mut turns = 0u32;
    let first_turn = request.turn;

    if let Some(tb) = tools {
        if tb.native {
            request.tools = tb.specs.clone();
        } else {
            request.tools.clear();
            append_to_system(&mut request.messages, &text_tool_protocol(&tb.specs));
        }
    }

    loop {
        request.turn = first_turn + turns;
        request.tool_choice = if forced { ToolChoice::None } else { ToolChoice::Auto };
        let resp = gateway.complete(ctx, &request)?;
        turns += 1;
        usage = usage + resp.usage;

        let Some(tb) = tools else {
            request.messages.push(Message::assistant(resp.text.clone(), Vec::new()));
            return Ok(finish(resp.text, log, usage, request.messages, turns));
        };
        let intents = if tb.native || !resp.tool_calls.is_empty() {
            resp.tool_calls.clone()
        } else {
            parse_text_tool_calls(&resp.text, turns)
        };
        if intents.is_empty() || forced {
            request.messages.push(Message::assistant(resp.text.clone(), Vec::new()));
            return Ok(finish(resp.text, log, usage, request.messages, turns));
        }

        if tb.native {
            request.messages.push(Message::assistant(resp.text.clone(), intents.clone()));
        } else {
            request.messages.push(Message::assistant(resp.text.clone(), Vec::new()));
        }
        let mut text_results = Vec::new();
        for intent in &intents {
            sequence += 1;
            let started = Instant::now();
            let (result, ran) = if executed >= budget {
                forced = true;
                (BUDGET_EXHAUSTED.to_string(), false)
            } else {
                executed += 1;
                (execute(tb, intent, &mut seen), true)
            };
            log.push(ToolCall {
                agent: request.agent.clone(),
                tool: intent.name.clone(),
                arguments: intent.arguments.clone(),
                result: result.clone(),
                sequence,
                executed: ran,
                duration_s: gateway.elapsed(started),
            });
            if tb.native {
                request.messages.push(Message::tool_result(&intent.id, result));
            } else {
                text_results.push(format!("TOOL RESULT #{sequence} ({}):\n{result}", intent.name));
            }
        }
        if !text_results.is_empty() {
            request.messages.push(Message::user(text_results.join("\n\n")));
        }
    }
}

fn finish(text: String, tool_log: Vec<ToolCall>, usage: Usage, messages: Vec<Message>, turns: u32) -> TurnOutcome {
    TurnOutcome {
        text,
        tool_log,
        usage,
        messages,
        turns,
    }
}

fn execute(tb: &ToolBox<'_>, intent: &ToolIntent, seen: &mut HashSet<(String, String)>) -> String {
    if !tb.specs.iter().any(|s| s.name == intent.name) {
        let names: Vec<&str> = tb.specs.iter().map(|s| s.name.as_str()).collect();
        return format!("unknown tool {:?}; available tools: {}", intent.name, names.join(", "));
    }
    let key = (intent.name.clone(), canonical(&intent.arguments));
    let repeated = !seen.insert(key);
    let body = match (tb.handler)(&intent.name, &intent.arguments) {
        Ok(text) => text,
        Err(err) => format!("error: {err}"),
    };
    if repeated {
        format!("{REPEATED_CALL}\n{body}")
    } else {
        body
    }
}

/// serde_json maps are ordered, so compact serialization is canonical.
fn canonical(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::Null => "{}".to_string(),
        other => other.to_string(),
    }
}

fn append_to_system(messages: &mut Vec<Message>, text: &str) {
    match messages.iter_mut().find(|m| m.role == Role::System) {
        Some(m) if m.joined_text().contains(text) => {}
        Some(m) => {
            let joined = format!("{}\n\n{text}", m.joined_text());
            *m = Message::system(joined);
        }
        None => messages.insert(0, Message::system(text)),
    }
}

/// Instructions for models without native function calling.
pub fn text_tool_protocol(specs: &[ToolSpec]) -> String {
    let mut out = String::from(
        "TOOL PROTOCOL: to call a tool, reply with one line per call and nothing else:\nTOOL: <name> <JSON arguments>\nExample: TOOL: get_around {\"center\": 10, \"window\": 5}\nAvailable tools:\n",
    );
    for s in specs {
        out.push_str(&format!("- {}: {} arguments {}\n", s.name, s.description, s.parameters));
    }
    out.push_str("When you are done with tools, reply with your answer in the requested format.");
    out
}

static TOOL_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?m)^\s*(?:`{1,3})?\s*TOOL:\s*([A-Za-z_][A-Za-z0-9_]*)\s*(.*?)\s*(?:`{1,3})?\s*$")
        .expect("valid regex")
});

/// Tool intents written as `TOOL: name {json}` or `TOOL: name(a, b)` lines.
pub fn parse_text_tool_calls(text: &str, turn: u32) -> Vec<ToolIntent> {
    TOOL_LINE
        .captures_iter(text)
        .enumerate()
        .map(|(i, c)| {
            let name = c[1].to_string();
            let raw = c.get(2).map_or("", |m| m.as_str()).trim();
            let arguments = parse_text_args(raw);
            ToolIntent {
                id: format!("text-{turn}-{i}"),
                name,
                arguments,
            }
        })
        .collect()
}

fn parse_text_args(raw: &str) -> serde_json::Value {
    if raw.is_empty() || raw == "()" {
        return serde_json::Value::Object(Default::default());
    }
    if let Ok(v) = serde_json::from_str::<serde_json::Value>(raw) {
        return v;
    }
    let inner = raw.trim_start_matches('(').trim_end_matches(')');
    if let Ok(v) = serde_json::from_str::<serde_json::Value>(&format!("[{inner}]")) {
        return v;
    }
    serde_json::Value::Array(
        inner
            .split(',')
            .map(|s| serde_json::Value::String(s.trim().trim_matches(['"', '\'']).to_string()))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_protocol_lines() {
        let calls = parse_text_tool_calls(
            "thinking\nTOOL: get_info {}\nTOOL: get_around {\"center\": 3}\nTOOL: get_values(0, 10)",
            1,
        );
        assert_eq!(calls.len(), 3);
        assert_eq!(calls[0].name, "get_info");
        assert_eq!(calls[1].arguments["center"], 3);
        assert_eq!(calls[2].arguments, serde_json::json!([0, 10]));
    }
}
