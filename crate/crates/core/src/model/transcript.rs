use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::cost::CostLedger;
use super::evidence::{DomainKnowledge, EvidenceReport, Modality};
use super::task::Answer;
use super::vcc::{ReviewerRecord, SynthesizerVerdict};
use super::ModelError;
use crate::orchestrator::RunConfig;

/// One tool invocation made by an agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    /// Agent role tag, e.g. `analyst.NUMERICAL.r1` or `reviewer.2`.
    pub agent: String,
    pub tool: String,
    pub arguments: serde_json::Value,
    pub result: String,
    /// Strictly increasing within one agent turn, starting at 1.
    pub sequence: u32,
    /// False when the call was refused because the budget was spent.
    pub executed: bool,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartRef {
    pub kind: String,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Failed { stage: String, error: String },
}

/// Full record of one instance run, written as one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebateTranscript {
    pub instance_id: String,
    pub method: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knowledge: Option<DomainKnowledge>,
    #[serde(default)]
    pub charts: Vec<ChartRef>,
    #[serde(default)]
    pub rounds: Vec<BTreeMap<Modality, EvidenceReport>>,
    #[serde(default)]
    pub reviewer_records: Vec<ReviewerRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthesizer: Option<SynthesizerVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_answer: Option<Answer>,
    /// Raw text the final answer was extracted from (comparator runs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_answer_raw: Option<String>,
    #[serde(default)]
    pub tool_log: Vec<ToolCall>,
    pub cost: CostLedger,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl DebateTranscript {
    pub fn is_completed(&self) -> bool {
        self.status == RunStatus::Completed
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("transcript serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Decode {
            offset: byte_offset(text, e.line(), e.column()),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    /// Every evidence report in pipeline order.
    pub fn evidence(&self) -> impl Iterator<Item = &EvidenceReport> {
        self.rounds.iter().flat_map(|r| r.values())
    }
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}
