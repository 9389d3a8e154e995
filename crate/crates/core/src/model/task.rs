use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::series::TimeSeriesRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskType {
    Classification,
    Mcqa,
    Regression,
    Forecasting,
    Imputation,
    Anomaly,
    OpenQa,
}

impl TaskType {
    pub fn is_numeric(self) -> bool {
        matches!(
            self,
            TaskType::Regression | TaskType::Forecasting | TaskType::Imputation
        )
    }

    pub fn is_discrete(self) -> bool {
        matches!(
            self,
            TaskType::Classification | TaskType::Mcqa | TaskType::Anomaly
        )
    }
}

/// Whether the queried target lies inside the observed window or beyond it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemporalScope {
    PastPresent,
    Future,
}

impl TemporalScope {
    /// Fallback when a dataset does not label the scope: forecasting looks
    /// ahead, everything else is answerable from the observed window.
    pub fn infer(task_type: TaskType) -> Self {
        match task_type {
            TaskType::Forecasting => TemporalScope::Future,
            _ => TemporalScope::PastPresent,
        }
    }
}

/// The set of admissible answers for a task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnswerSpace {
    Labels { labels: Vec<String> },
    Options { options: Vec<String> },
    Numeric { horizon: usize },
    Boolean,
    FreeText,
}

impl AnswerSpace {
    /// A one-line instruction describing the exact answer format.
    pub fn format_instruction(&self, field: &str) -> String {
        match self {
            AnswerSpace::Labels { labels } => {
                format!("{field} must be exactly one of: {}", labels.join(" | "))
            }
            AnswerSpace::Options { options } => format!(
                "{field} must be exactly one option letter from: {}",
                options.join(" | ")
            ),
            AnswerSpace::Numeric { horizon } => format!(
                "{field} must be a list of exactly {horizon} numbers, e.g. [v1, v2, ...]"
            ),
            AnswerSpace::Boolean => format!("{field} must be exactly one of: True | False"),
            AnswerSpace::FreeText => format!("{field} must be a short free-text answer"),
        }
    }
}

/// A typed answer. The variant is fixed by the owning instance's answer space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Answer {
    Label(String),
    Option(String),
    NumericVector(Vec<f64>),
    Boolean(bool),
    FreeText(String),
}

impl Answer {
    pub fn matches_space(&self, space: &AnswerSpace) -> bool {
        match (self, space) {
            (Answer::Label(l), AnswerSpace::Labels { labels }) => labels.contains(l),
            (Answer::Option(o), AnswerSpace::Options { options }) => options.contains(o),
            (Answer::NumericVector(v), AnswerSpace::Numeric { horizon }) => v.len() == *horizon,
            (Answer::Boolean(_), AnswerSpace::Boolean) => true,
            (Answer::FreeText(_), AnswerSpace::FreeText) => true,
            _ => false,
        }
    }

    /// Discrete key used for label-wise metrics and agreement checks.
    pub fn discrete_key(&self) -> Option<String> {
        match self {
            Answer::Label(s) | Answer::Option(s) => Some(s.to_lowercase()),
            Answer::Boolean(b) => Some(b.to_string()),
            _ => None,
        }
    }
}

impl std::fmt::Display for Answer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Answer::Label(s) | Answer::Option(s) | Answer::FreeText(s) => f.write_str(s),
            Answer::Boolean(b) => write!(f, "{}", if *b { "True" } else { "False" }),
            Answer::NumericVector(v) => {
                let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
                write!(f, "[{}]", parts.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub id: String,
    pub query: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    pub series: TimeSeriesRecord,
    pub task_type: TaskType,
    pub answer_space: AnswerSpace,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<Answer>,
    pub temporal_scope: TemporalScope,
    #[serde(default)]
    pub strata: BTreeMap<String, String>,
}

impl TaskInstance {
    pub fn horizon(&self) -> Option<usize> {
        match self.answer_space {
            AnswerSpace::Numeric { horizon } => Some(horizon),
            _ => None,
        }
    }

    pub fn context_text(&self) -> Option<&str> {
        self.context.as_deref().filter(|c| !c.trim().is_empty())
    }
}

/// Lists every violated invariant of `instance`; an empty list means valid.
pub fn validate_instance(instance: &TaskInstance) -> Vec<String> {
    let mut out = Vec::new();
    if instance.id.trim().is_empty() {
        out.push("instance id must be non-empty".to_string());
    }
    if instance.query.trim().is_empty() {
        out.push("query must be non-empty".to_string());
    }
    out.extend(instance.series.violations());

    let shape_ok = match (&instance.answer_space, instance.task_type) {
        (AnswerSpace::Numeric { .. }, t) => t.is_numeric(),
        (_, t) if t.is_numeric() => false,
        (AnswerSpace::Options { .. }, TaskType::Mcqa | TaskType::OpenQa) => true,
        (AnswerSpace::Options { .. }, _) => false,
        (AnswerSpace::Labels { .. } | AnswerSpace::Boolean, TaskType::Mcqa) => false,
        (AnswerSpace::FreeText, t) => t == TaskType::OpenQa,
        _ => true,
    };
    if !shape_ok {
        out.push(format!(
            "answer_space {:?} is inconsistent with task_type {:?}",
            instance.answer_space, instance.task_type
        ));
    }
    match &instance.answer_space {
        AnswerSpace::Numeric { horizon } if *horizon == 0 => {
            out.push("horizon must be ≥ 1".to_string());
        }
        AnswerSpace::Labels { labels } if labels.is_empty() => {
            out.push("label answer space must list at least one label".to_string());
        }
        AnswerSpace::Options { options } if options.is_empty() => {
            out.push("option answer space must list at least one option".to_string());
        }
        _ => {}
    }
    if let Some(truth) = &instance.ground_truth {
        if !truth.matches_space(&instance.answer_space) {
            out.push(format!("ground_truth {truth} does not fit the answer space"));
        }
    }
    out
}
