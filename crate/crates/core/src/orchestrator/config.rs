use serde::{Deserialize, Serialize};

use crate::model::Rates;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay_ms: 1000,
        }
    }
}

/// Everything that shapes a run. Snapshotted into each transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Analyst rounds R.
    pub rounds: u32,
    /// Parallel reviewers J.
    pub reviewers: u32,
    pub analyst_budget: u32,
    pub reviewer_budget: u32,
    pub model: String,
    pub temperature: f64,
    pub seed: Option<u64>,
    pub analyst_max_tokens: u32,
    pub judge_max_tokens: u32,
    pub rates: Rates,
    pub retry: RetryPolicy,
    /// Use provider-native function calling; otherwise the `TOOL:` text protocol.
    pub native_tools: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            rounds: 2,
            reviewers: 3,
            analyst_budget: 5,
            reviewer_budget: 3,
            model: "gpt-4.1-mini".to_string(),
            temperature: 0.0,
            seed: Some(2025),
            analyst_max_tokens: 1200,
            judge_max_tokens: 2000,
            rates: Rates::default(),
            retry: RetryPolicy::default(),
            native_tools: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.rounds < 1 {
            return Err("rounds must be >= 1".into());
        }
        if self.reviewers < 1 {
            return Err("reviewers must be >= 1".into());
        }
        if !(self.temperature >= 0.0) {
            return Err("temperature must be >= 0".into());
        }
        Ok(())
    }
}
