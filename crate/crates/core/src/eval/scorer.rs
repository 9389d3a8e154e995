use std::time::Duration;

use serde_json::{json, Value};

/// Judges an open-ended answer against a reference.
pub trait OpenQaScorer: Send + Sync {
    fn judge(&self, query: &str, reference: &str, prediction: &str) -> Result<bool, String>;
}

/// POSTs `{query, reference, prediction}` and reads back either
/// `{"correct": bool}` or `{"verdict": "entailment" | ...}`.
pub struct HttpScorer {
    url: String,
    client: reqwest::blocking::Client,
}

impl HttpScorer {
    pub fn new(url: &str) -> Result<Self, String> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| e.to_string())?;
        Ok(Self {
            url: url.to_string(),
            client,
        })
    }
}

pub fn decode_verdict(body: &Value) -> Result<bool, String> {
    if let Some(b) = body.get("correct").and_then(Value::as_bool) {
        return Ok(b);
    }
    match body.get("verdict").and_then(Value::as_str) {
        Some(v) => Ok(matches!(
            v.trim().to_ascii_lowercase().as_str(),
            "entailment" | "entailed" | "correct" | "true" | "yes"
        )),
        None => Err(format!("scorer reply has neither `correct` nor `verdict`: {body}")),
    }
}

impl OpenQaScorer for HttpScorer {
    fn judge(&self, query: &str, reference: &str, prediction: &str) -> Result<bool, String> {
        let resp = self
            .client
            .post(&self.url)
            .json(&json!({"query": query, "reference": reference, "prediction": prediction}))
            .send()
            .map_err(|e| format!("scorer request failed: {e}"))?;
        let status = resp.status();
        let body: Value = resp.json().map_err(|e| format!("scorer reply is not JSON: {e}"))?;
        if !status.is_success() {
            return Err(format!("scorer returned {status}: {body}"));
        }
        decode_verdict(&body)
    }
}
