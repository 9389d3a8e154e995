//! Prompt templates and the renderers that fill them for each role and stage.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::model::{
    AnswerSpace, EvidenceReport, Modality, ReviewerRecord, TaskInstance, TaskType,
};
use crate::series;

/// Bound on the data summary embedded in reviewer and synthesizer task blocks.
pub const EMBEDDED_SUMMARY_CHARS: usize = 1500;
pub const DEFAULT_ANALYST_BUDGET: u32 = 5;
pub const DEFAULT_JUDGE_BUDGET: u32 = 3;

macro_rules! builtin {
    ($($id:literal),* $(,)?) => {
        &[$(($id, include_str!(concat!("../../assets/prompts/", $id, ".txt")))),*]
    };
}

const BUILTIN: &[(&str, &str)] = builtin![
    "elicitor_system",
    "elicitation",
    "knowledge_inclusion",
    "analyst_system.TEXT",
    "analyst_system.VISUAL",
    "analyst_system.NUMERICAL",
    "analyst_round1",
    "analyst_roundN",
    "temporal_basics",
    "temporal_vcc",
    "evidence_rules",
    "scoring_rubric",
    "review_protocol",
    "reviewer_system",
    "reviewer_turn",
    "decision_protocol",
    "synthesizer_system",
    "synthesizer_turn",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PromptError {
    #[error("template {template}: placeholder {{{name}}} is unbound")]
    Unbound { template: String, name: String },
    #[error("unknown template {0}")]
    UnknownTemplate(String),
    #[error("staging error: {0}")]
    Staging(String),
    #[error("cannot read template {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub system: String,
    pub user: String,
}

#[derive(Debug, Clone)]
pub struct PromptLibrary {
    templates: BTreeMap<String, String>,
}

impl Default for PromptLibrary {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Fills `{name}` markers in one pass; substituted text is never rescanned.
/// Braces that do not enclose an identifier are copied through.
pub fn fill(id: &str, body: &str, bindings: &[(&str, &str)]) -> Result<String, PromptError> {
    let mut out = String::with_capacity(body.len());
    let mut rest = body;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after.find('}');
        let name = close.map(|c| &after[..c]);
        match name {
            Some(n) if is_ident(n) => {
                let value = bindings
                    .iter()
                    .find(|(k, _)| *k == n)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| PromptError::Unbound {
                        template: id.to_string(),
                        name: n.to_string(),
                    })?;
                out.push_str(value);
                rest = &after[n.len() + 1..];
            }
            _ => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Placeholder names appearing in a template body, in order of first use.
pub fn placeholders(body: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut rest = body;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(c) if is_ident(&after[..c]) => {
                let n = after[..c].to_string();
                if !out.contains(&n) {
                    out.push(n);
                }
                rest = &after[c + 1..];
            }
            _ => rest = after,
        }
    }
    out
}

impl PromptLibrary {
    pub fn builtin() -> Self {
        Self {
            templates: BUILTIN
                .iter()
                .map(|(id, body)| (id.to_string(), body.to_string()))
                .collect(),
        }
    }

    /// Built-in templates overridden by any `<id>.txt` found in `dir`.
    pub fn with_overrides(dir: &Path) -> Result<Self, PromptError> {
        let mut lib = Self::builtin();
        for (id, _) in BUILTIN {
            let path = dir.join(format!("{id}.txt"));
            if path.exists() {
                let body = std::fs::read_to_string(&path).map_err(|e| PromptError::Io {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?;
                lib.templates.insert(id.to_string(), body);
            }
        }
        Ok(lib)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    pub fn get(&self, id: &str) -> Result<&str, PromptError> {
        self.templates
            .get(id)
            .map(String::as_str)
            .ok_or_else(|| PromptError::UnknownTemplate(id.to_string()))
    }

    pub fn render(&self, id: &str, bindings: &[(&str, &str)]) -> Result<String, PromptError> {
        fill(id, self.get(id)?, bindings)
    }

    pub fn render_elicitation(&self, query: &str, context: Option<&str>) -> Result<RenderedPrompt, PromptError> {
        if query.trim().is_empty() {
            return Err(PromptError::Unbound {
                template: "elicitation".into(),
                name: "task_description".into(),
            });
        }
        let mut task = query.trim().to_string();
        if let Some(c) = context.map(str::trim).filter(|c| !c.is_empty()) {
            task.push_str("\n\nCONTEXT:\n");
            task.push_str(c);
        }
        Ok(RenderedPrompt {
            system: self.get("elicitor_system")?.to_string(),
            user: self.render("elicitation", &[("task_description", &task)])?,
        })
    }

    fn knowledge_block(&self, knowledge: &str) -> Result<String, PromptError> {
        let k = if knowledge.trim().is_empty() {
            "(no domain knowledge available)"
        } else {
            knowledge.trim()
        };
        self.render("knowledge_inclusion", &[("domain_knowledge", k)])
    }

    /// System and user prompt for one analyst turn. `prior` must hold all
    /// three reports of the previous round when `round >= 2`.
    pub fn render_analyst(
        &self,
        modality: Modality,
        round: u32,
        task: &str,
        knowledge: &str,
        prior: Option<&BTreeMap<Modality, EvidenceReport>>,
        budget: u32,
    ) -> Result<RenderedPrompt, PromptError> {
        if round == 0 {
            return Err(PromptError::Staging("rounds start at 1".into()));
        }
        let temporal = self.get("temporal_basics")?;
        let rules = self.get("evidence_rules")?;
        let profile_id = format!("analyst_system.{modality}");
        let profile = self.render(
            &profile_id,
            &[("temporal_basics", temporal), ("evidence_rules", rules)],
        )?;
        let profile = if modality == Modality::Numerical {
            with_budget(&profile, DEFAULT_ANALYST_BUDGET, budget)
        } else {
            profile
        };
        let system = format!("{profile}\n\n{}", self.knowledge_block(knowledge)?);
        let name = modality.as_str();
        let user = if round == 1 {
            self.render("analyst_round1", &[("task", task), ("modality_name", name)])?
        } else {
            let prior = prior.ok_or_else(|| {
                PromptError::Staging(format!("round {round} needs the previous round's evidence"))
            })?;
            let history = format_round(prior, round - 1)?;
            self.render(
                "analyst_roundN",
                &[("debate_history", &history), ("task", task), ("modality_name", name)],
            )?
        };
        Ok(RenderedPrompt { system, user })
    }

    pub fn render_reviewer(
        &self,
        task: &str,
        knowledge: &str,
        final_round: &BTreeMap<Modality, EvidenceReport>,
        round: u32,
        budget: u32,
    ) -> Result<RenderedPrompt, PromptError> {
        let system = self.render(
            "reviewer_system",
            &[
                ("knowledge_section", &self.knowledge_block(knowledge)?),
                ("TEMPORAL_AWARENESS", self.get("temporal_vcc")?),
                ("JUDGE_EVALUATION_CRITERIA", self.get("scoring_rubric")?),
                ("JUDGE_PROTOCOL", self.get("review_protocol")?),
            ],
        )?;
        let history = format_round(final_round, round)?;
        let user = self.render(
            "reviewer_turn",
            &[("task", task), ("final_debate_history", &history)],
        )?;
        Ok(RenderedPrompt {
            system: with_budget(&system, DEFAULT_JUDGE_BUDGET, budget),
            user,
        })
    }

    /// Embeds the raw response of every reviewer passed in.
    pub fn render_synthesizer(
        &self,
        task: &str,
        knowledge: &str,
        reviewers: &[&ReviewerRecord],
        budget: u32,
    ) -> Result<RenderedPrompt, PromptError> {
        if reviewers.is_empty() {
            return Err(PromptError::Staging("synthesis needs at least one reviewer record".into()));
        }
        let system = self.render(
            "synthesizer_system",
            &[
                ("knowledge_section", &self.knowledge_block(knowledge)?),
                ("TEMPORAL_AWARENESS", self.get("temporal_vcc")?),
                ("SYNTHESIZER_PROTOCOL", self.get("decision_protocol")?),
            ],
        )?;
        let responses = reviewers
            .iter()
            .map(|r| format!("=== Reviewer {} ===\n{}", r.reviewer_id, r.raw_text.trim()))
            .collect::<Vec<_>>()
            .join("\n\n");
        let user = self.render(
            "synthesizer_turn",
            &[("task_description_judge", task), ("all_judge_responses", &responses)],
        )?;
        Ok(RenderedPrompt {
            system: with_budget(&system, DEFAULT_JUDGE_BUDGET, budget),
            user: with_budget(&user, DEFAULT_JUDGE_BUDGET, budget),
        })
    }
}

/// Rewrites the stated call limit when the configured budget differs.
fn with_budget(text: &str, default: u32, budget: u32) -> String {
    if budget == default {
        return text.to_string();
    }
    text.replace(
        &format!("MAX {default} CALLS TOTAL: After {default} calls"),
        &format!("MAX {budget} CALLS TOTAL: After {budget} calls"),
    )
    .replace(
        &format!("max {default} tool calls"),
        &format!("max {budget} tool calls"),
    )
}

/// Reports of one round in the fixed order TEXT, VISUAL, NUMERICAL.
pub fn format_round(reports: &BTreeMap<Modality, EvidenceReport>, round: u32) -> Result<String, PromptError> {
    let mut parts = Vec::new();
    for m in Modality::ALL {
        let r = reports.get(&m).ok_or_else(|| {
            PromptError::Staging(format!("round {round} has no {m} evidence"))
        })?;
        let body = if r.usable {
            r.raw_text.trim().to_string()
        } else {
            "(no usable evidence this round)".to_string()
        };
        parts.push(format!("[{m} ANALYST - ROUND {round}]\n{body}"));
    }
    Ok(parts.join("\n\n"))
}

/// One line describing the answer space, without asking for an answer.
pub fn answer_space_summary(space: &AnswerSpace) -> String {
    match space {
        AnswerSpace::Labels { labels } => format!("Answer is one of the labels: {}", labels.join(", ")),
        AnswerSpace::Options { options } => format!("Answer is one of the options: {}", options.join(" | ")),
        AnswerSpace::Numeric { horizon } => format!("Answer is a list of {horizon} numeric value(s)"),
        AnswerSpace::Boolean => "Answer is yes or no".to_string(),
        AnswerSpace::FreeText => "Answer is a short free-text response".to_string(),
    }
}

/// Task text for an analyst. Only the TEXT analyst sees the context.
pub fn analyst_task(instance: &TaskInstance, modality: Modality) -> String {
    let mut out = instance.query.trim().to_string();
    if modality == Modality::Text {
        if let Some(c) = instance.context_text() {
            out.push_str("\n\nCONTEXT:\n");
            out.push_str(c.trim());
        }
    }
    out.push_str("\n\n");
    out.push_str(&answer_space_summary(&instance.answer_space));
    match modality {
        Modality::Visual => out.push_str("\nCharts attached: time-domain chart and frequency-domain chart."),
        Modality::Numerical => out.push_str("\nUse the lookup tools to inspect the series."),
        Modality::Text => {}
    }
    out
}

/// Task text for reviewers and the synthesizer: query, context, a bounded
/// data summary and the answer-format scaffold for `field`.
pub fn judge_task(instance: &TaskInstance, field: &str) -> String {
    let mut out = instance.query.trim().to_string();
    if let Some(c) = instance.context_text() {
        out.push_str("\n\nCONTEXT:\n");
        out.push_str(c.trim());
    }
    out.push_str("\n\nNUMERICAL DATA SUMMARY:\n");
    out.push_str(&embedded_summary(instance));
    out.push_str("\n\n");
    out.push_str(&instance.answer_space.format_instruction(field));
    out
}

pub fn embedded_summary(instance: &TaskInstance) -> String {
    let text = series::get_info(&instance.series).render();
    if text.len() <= EMBEDDED_SUMMARY_CHARS {
        return text;
    }
    let mut cut = EMBEDDED_SUMMARY_CHARS - 4;
    while !text.is_char_boundary(cut) {
        cut -= 1;
    }
    format!("{} ...", &text[..cut])
}

/// Sent once when an agent's reply cannot be parsed.
pub fn format_repair(required: &str, problem: &str) -> String {
    format!(
        "Your previous reply could not be parsed ({problem}). Reply again using exactly the OUTPUT FORMAT requested above. The {required} line is required."
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComparatorMode {
    ZeroShot,
    Cot,
}

/// Single-turn baseline prompt with the series serialized as text.
pub fn comparator_prompt(instance: &TaskInstance, mode: ComparatorMode, multimodal: bool) -> RenderedPrompt {
    let system = "You are an expert in time-series analysis and reasoning.".to_string();
    let mut user = format!("Task: {}", instance.query.trim());
    if let Some(c) = instance.context_text() {
        user.push_str("\n\nCONTEXT:\n");
        user.push_str(c.trim());
    }
    user.push_str("\n\nTIME SERIES:\n");
    user.push_str(&serialize_series(instance));
    if multimodal {
        user.push_str("\n\nCharts attached: time-domain chart and frequency-domain chart.");
    }
    user.push_str("\n\n");
    match mode {
        ComparatorMode::ZeroShot => user.push_str("Answer directly without explanation.\n"),
        ComparatorMode::Cot => user.push_str("Let's think step by step, then give the answer on the last line.\n"),
    }
    user.push_str(&instance.answer_space.format_instruction("FINAL ANSWER"));
    RenderedPrompt { system, user }
}

fn serialize_series(instance: &TaskInstance) -> String {
    let s = &instance.series;
    (0..s.dim())
        .map(|ch| {
            let vals: Vec<String> = s.channels[ch]
                .iter()
                .map(|v| if v.is_nan() { "missing".into() } else { series::fmt_num(*v) })
                .collect();
            format!("{}: {}", s.channel_name(ch), vals.join(", "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Whether an instance is about the future, stated for logging and scaffolds.
pub fn is_future(instance: &TaskInstance) -> bool {
    instance.task_type == TaskType::Forecasting
        || instance.temporal_scope == crate::model::TemporalScope::Future
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fill_is_single_pass() {
        let out = fill("t", "a {x} b", &[("x", "{y}")]).unwrap();
        assert_eq!(out, "a {y} b");
    }

    #[test]
    fn unbound_is_an_error() {
        let err = fill("t", "a {x}", &[]).unwrap_err();
        assert_eq!(
            err,
            PromptError::Unbound {
                template: "t".into(),
                name: "x".into()
            }
        );
    }

    #[test]
    fn non_identifier_braces_pass_through() {
        assert_eq!(fill("t", "{ a } {}", &[]).unwrap(), "{ a } {}");
    }

    #[test]
    fn every_builtin_has_known_placeholders() {
        let lib = PromptLibrary::builtin();
        for id in lib.ids() {
            for p in placeholders(lib.get(id).unwrap()) {
                assert!(
                    [
                        "temporal_basics", "evidence_rules", "knowledge_section",
                        "TEMPORAL_AWARENESS", "JUDGE_EVALUATION_CRITERIA", "JUDGE_PROTOCOL",
                        "SYNTHESIZER_PROTOCOL", "task_description", "domain_knowledge", "task",
                        "modality_name", "debate_history", "final_debate_history",
                        "task_description_judge", "all_judge_responses",
                    ]
                    .contains(&p.as_str()),
                    "{id}: {p}"
                );
            }
        }
    }

    #[test]
    fn budget_rewrite() {
        let s = "2. MAX 3 CALLS TOTAL: After 3 calls, you MUST";
        assert_eq!(with_budget(s, 3, 3), s);
        assert_eq!(with_budget(s, 3, 2), "2. MAX 2 CALLS TOTAL: After 2 calls, you MUST");
    }
}
