//! Tool declarations bound to one series, and the dispatcher agents call.

use serde_json::{json, Value};

use crate::calc;
use crate::gateway::ToolSpec;
use crate::model::TimeSeriesRecord;
use crate::series::{
    self, BollingerParams, IndicatorParams, MacdParams, Position, ToolError,
};

pub const LOOKUP_TOOLS: [&str; 8] = [
    "get_info",
    "get_values",
    "get_around",
    "get_features",
    "get_frequency_features",
    "get_channel_values",
    "get_all_channels",
    "get_indicator",
];

pub const CODE_TOOL: &str = "execute_code";

fn position_schema(desc: &str) -> Value {
    json!({"type": ["integer", "string"], "description": desc})
}

fn spec(name: &str, description: &str, properties: Value, required: &[&str]) -> ToolSpec {
    ToolSpec {
        name: name.to_string(),
        description: description.to_string(),
        parameters: json!({"type": "object", "properties": properties, "required": required}),
    }
}

/// The numerical analyst's tool set.
pub fn lookup_specs() -> Vec<ToolSpec> {
    let start = position_schema("first index (or timestamp), inclusive");
    let end = position_schema("last index (or timestamp), inclusive");
    let channel = json!({"type": ["integer", "string"], "description": "channel index or name"});
    vec![
        spec("get_info", "schema, summary statistics and detected feature counts", json!({}), &[]),
        spec(
            "get_values",
            "time-series values by index or timestamp",
            json!({"start": start, "end": end, "channel": channel}),
            &["start", "end"],
        ),
        spec(
            "get_around",
            "time-series values around a point",
            json!({"center": position_schema("center index or timestamp"),
                   "window": {"type": "integer", "description": "samples on each side (default 5)"}}),
            &["center"],
        ),
        spec(
            "get_features",
            "detected events of one type",
            json!({"type": {"type": "string", "enum": ["peak", "valley", "trend", "anomaly"]}}),
            &["type"],
        ),
        spec("get_frequency_features", "spectral analysis: dominant frequencies and periods", json!({}), &[]),
        spec(
            "get_channel_values",
            "values of one channel",
            json!({"ch": channel, "start": start, "end": end}),
            &["ch", "start", "end"],
        ),
        spec(
            "get_all_channels",
            "all channels at once over a range",
            json!({"start": start, "end": end}),
            &["start", "end"],
        ),
        spec(
            "get_indicator",
            "indicator values (MACD, Bollinger Bands) over a range",
            json!({"start": start, "end": end,
                   "name": {"type": "string", "enum": ["MACD", "BOLLINGER"]},
                   "channel": channel}),
            &["start", "end"],
        ),
    ]
}

/// Reviewer and synthesizer tool set: lookups plus the expression calculator.
pub fn judge_specs() -> Vec<ToolSpec> {
    let mut specs = lookup_specs();
    specs.push(spec(
        CODE_TOOL,
        &format!("evaluate a calculation over the series; grammar: {}", calc::GRAMMAR_HELP),
        json!({"code": {"type": "string"}}),
        &["code"],
    ));
    specs
}

/// Arguments given either by name or positionally.
struct Args<'a> {
    value: &'a Value,
    order: &'a [&'a str],
}

impl<'a> Args<'a> {
    fn get(&self, name: &str) -> Option<&'a Value> {
        let v = match self.value {
            Value::Object(map) => map.get(name),
            Value::Array(items) => self.order.iter().position(|n| *n == name).and_then(|i| items.get(i)),
            other if self.order.first() == Some(&name) && !other.is_null() => Some(other),
            _ => None,
        };
        v.filter(|v| !v.is_null())
    }

    fn position(&self, name: &str) -> Result<Option<Position>, ToolError> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::Number(n)) => n
                .as_i64()
                .or_else(|| n.as_f64().filter(|f| f.fract() == 0.0).map(|f| f as i64))
                .map(|i| Some(Position::Index(i)))
                .ok_or_else(|| ToolError::Argument(format!("{name} must be an integer index, got {n}"))),
            Some(Value::String(s)) => Ok(Some(Position::Label(s.clone()))),
            Some(other) => Err(ToolError::Argument(format!("{name} must be an index or timestamp, got {other}"))),
        }
    }

    fn text(&self, name: &str) -> Option<String> {
        self.get(name).map(|v| match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        })
    }

    fn count(&self, name: &str) -> Result<Option<usize>, ToolError> {
        match self.get(name) {
            None => Ok(None),
            Some(v) => {
                let n = v
                    .as_u64()
                    .or_else(|| v.as_str().and_then(|s| s.trim().parse().ok()))
                    .ok_or_else(|| ToolError::Argument(format!("{name} must be a positive integer, got {v}")))?;
                if n == 0 {
                    return Err(ToolError::Argument(format!("{name} must be a positive integer, got 0")));
                }
                Ok(Some(n as usize))
            }
        }
    }

    fn real(&self, name: &str) -> Option<f64> {
        self.get(name).and_then(|v| v.as_f64().or_else(|| v.as_str().and_then(|s| s.trim().parse().ok())))
    }
}

/// Executes one tool call; errors are readable text meant for the agent.
pub fn dispatch(series: &TimeSeriesRecord, name: &str, arguments: &Value) -> Result<String, String> {
    let order: &[&str] = match name {
        "get_values" | "get_all_channels" => &["start", "end", "channel"],
        "get_around" => &["center", "window"],
        "get_features" => &["type"],
        "get_channel_values" => &["ch", "start", "end"],
        "get_indicator" => &["start", "end", "name", "channel"],
        CODE_TOOL => &["code"],
        _ => &[],
    };
    let a = Args { value: arguments, order };
    let tool = |r: Result<String, ToolError>| r.map_err(|e| e.to_string());
    match name {
        "get_info" => Ok(series::get_info(series).render()),
        "get_values" => tool((|| {
            let ch = a.text("channel");
            Ok(series::get_values(series, ch.as_deref(), a.position("start")?.as_ref(), a.position("end")?.as_ref())?
                .render())
        })()),
        "get_around" => tool((|| {
            let center = a
                .position("center")?
                .ok_or_else(|| ToolError::Argument("center is required".into()))?;
            Ok(series::get_around(series, &center, a.count("window")?)?.render())
        })()),
        "get_features" => tool((|| {
            let kind = a
                .text("type")
                .or_else(|| a.text("kind"))
                .ok_or_else(|| ToolError::Argument("type is required: peak, valley, trend or anomaly".into()))?;
            let events = series::get_features(series, &kind)?;
            Ok(series::render_features(series, &events))
        })()),
        "get_frequency_features" => tool(series::get_frequency_features(series).map(|s| s.render())),
        "get_channel_values" => tool((|| {
            let ch = a
                .text("ch")
                .or_else(|| a.text("channel"))
                .ok_or_else(|| ToolError::Argument("ch is required".into()))?;
            Ok(series::get_channel_values(series, &ch, a.position("start")?.as_ref(), a.position("end")?.as_ref())?
                .render())
        })()),
        "get_all_channels" => tool((|| {
            Ok(series::get_all_channels(series, a.position("start")?.as_ref(), a.position("end")?.as_ref())?.render())
        })()),
        "get_indicator" => tool((|| {
            let mut params = IndicatorParams::default();
            if ["fast", "slow", "signal"].iter().any(|k| a.get(k).is_some()) {
                let d = MacdParams::default();
                params.macd = Some(MacdParams {
                    fast: a.count("fast")?.unwrap_or(d.fast),
                    slow: a.count("slow")?.unwrap_or(d.slow),
                    signal: a.count("signal")?.unwrap_or(d.signal),
                });
            }
            if a.get("window").is_some() || a.get("k").is_some() {
                let d = BollingerParams::default();
                params.bollinger = Some(BollingerParams {
                    window: a.count("window")?.unwrap_or(d.window),
                    k: a.real("k").unwrap_or(d.k),
                });
            }
            let name = a.text("name").or_else(|| a.text("indicator"));
            let ch = a.text("channel");
            Ok(series::get_indicator(
                series,
                name.as_deref(),
                ch.as_deref(),
                a.position("start")?.as_ref(),
                a.position("end")?.as_ref(),
                &params,
            )?
            .render())
        })()),
        CODE_TOOL => {
            let code = a.text("code").ok_or_else(|| "code is required".to_string())?;
            calc::run_tool(&code, series).map_err(|e| e.to_string())
        }
        other => Err(format!("unknown tool {other:?}")),
    }
}
