//! Lenient, header-anchored parsers for agent outputs.

mod answer;
mod render;
mod vcc;

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use crate::model::{DomainKnowledge, EvidenceReport, EvidenceTag, Modality, TaggedStatement};

pub use answer::{extract_answer, strip_answer_prefix, AnswerError};
pub use render::{render_evidence, render_reviewer, render_synthesizer};
pub use vcc::{
    parse_reviewer, parse_synthesizer, recompute_reviewer, temporal_violations, unusable_reviewer,
    PERFECT_SCORE_CLAMP,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("no numbered observations or inferences were found")]
    EmptyEvidence,
    #[error("missing {0} line")]
    Missing(&'static str),
    #[error(transparent)]
    Answer(#[from] AnswerError),
}

impl ParseError {
    /// The format reminder a repair turn should quote.
    pub fn required(&self) -> &'static str {
        match self {
            ParseError::EmptyEvidence => {
                "USEFUL OBSERVATIONS: and INFERENCES: sections with numbered items tagged [OBSERVATION] / [INFERENCE]"
            }
            ParseError::Missing("CALIBRATED ANSWER") => "a final line `CALIBRATED ANSWER: <answer>`",
            ParseError::Missing("FINAL ANSWER") => "a final line `FINAL ANSWER: <answer>`",
            ParseError::Missing(_) => "every section of the output format",
            ParseError::Answer(_) => "an answer in the exact required format",
        }
    }
}

type HeaderSet = [(&'static str, &'static [&'static str])];

/// Section bodies keyed by canonical header.
#[derive(Debug, Default)]
pub(crate) struct Sections {
    pub map: BTreeMap<&'static str, String>,
    pub repeated: Vec<&'static str>,
}

impl Sections {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str).filter(|s| !s.trim().is_empty())
    }

    pub fn text(&self, key: &str) -> String {
        self.get(key).map(|s| s.trim().to_string()).unwrap_or_default()
    }

    pub fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }
}

static NUMBERING: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\d+\s*[.)]\s*").expect("valid regex"));

/// Matches `line` against the header aliases: optional markdown emphasis,
/// optional parenthetical, then a colon. Returns the canonical key and the
/// remainder of the line.
fn match_header<'l>(line: &'l str, headers: &HeaderSet, numbered: bool) -> Option<(&'static str, &'l str)> {
    let mut s = line.trim_start().trim_start_matches(['#', '*', '>', '_']).trim_start();
    if numbered {
        if let Some(m) = NUMBERING.find(s) {
            s = s[m.end()..].trim_start_matches(['*', '_']);
        }
    }
    let upper = s.to_ascii_uppercase();
    let mut aliases: Vec<(&'static str, &'static str)> = headers
        .iter()
        .flat_map(|(k, al)| al.iter().map(move |a| (*k, *a)))
        .collect();
    aliases.sort_by_key(|(_, a)| std::cmp::Reverse(a.len()));
    for (key, alias) in aliases {
        if !upper.starts_with(alias) {
            continue;
        }
        let mut after = s[alias.len()..].trim_start_matches(['*', '_']).trim_start();
        if after.starts_with('(') || after.starts_with('[') {
            let close = if after.starts_with('(') { ')' } else { ']' };
            let mut depth = 0usize;
            let mut end = None;
            for (i, c) in after.char_indices() {
                if c == '(' || c == '[' {
                    depth += 1;
                } else if c == ')' || c == ']' {
                    depth = depth.saturating_sub(1);
                    if depth == 0 && c == close {
                        end = Some(i + 1);
                        break;
                    }
                }
            }
            after = end.map_or(after, |e| after[e..].trim_start_matches(['*', '_']).trim_start());
        }
        if let Some(rest) = after.strip_prefix(':') {
            return Some((key, rest.trim_start_matches(['*', '_']).trim()));
        }
    }
    None
}

/// Splits `raw` into header sections. Text before the first header is
/// dropped; a repeated header appends to the first occurrence.
pub(crate) fn split_sections(raw: &str, headers: &HeaderSet, numbered: bool) -> Sections {
    let mut out = Sections::default();
    let mut current: Option<&'static str> = None;
    for line in raw.lines() {
        if let Some((key, rest)) = match_header(line, headers, numbered) {
            if out.map.contains_key(key) {
                out.repeated.push(key);
            }
            let body = out.map.entry(key).or_default();
            if !rest.is_empty() {
                if !body.is_empty() {
                    body.push('\n');
                }
                body.push_str(rest);
            }
            current = Some(key);
        } else if let Some(key) = current {
            let body = out.map.entry(key).or_default();
            if !body.is_empty() {
                body.push('\n');
            }
            body.push_str(line);
        }
    }
    for body in out.map.values_mut() {
        *body = body.trim().to_string();
    }
    out
}

static ANSWER_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)^[\s*#>_-]*(?:(?:final|calibrated)\s+answer|answer|prediction)\s*\**\s*[:=]|^[\s*#>_-]*the\s+(?:final\s+)?answer\s+is\b",
    )
    .expect("valid regex")
});

/// Lines that read like a task answer.
pub(crate) fn answer_like_lines(raw: &str) -> Vec<String> {
    raw.lines()
        .filter(|l| ANSWER_LINE.is_match(l))
        .map(|l| l.trim().to_string())
        .collect()
}

const KNOWLEDGE_HEADERS: &HeaderSet = &[
    ("DOMAIN", &["DOMAIN"]),
    ("KNOWLEDGE", &["KNOWLEDGE", "KNOWLEDGE & KEY SIGNALS", "KNOWLEDGE AND KEY SIGNALS"]),
    ("KEY SIGNALS", &["KEY SIGNALS", "KEY SIGNAL"]),
    ("SUGGESTED APPROACH", &["SUGGESTED APPROACH", "APPROACH"]),
    ("PITFALLS", &["PITFALLS", "PITFALL"]),
    ("MODALITY", &["MODALITY GUIDANCE", "MODALITY", "MODALITIES"]),
];

/// Extracts the six labeled sections, case-insensitive and order-independent.
pub fn parse_knowledge(raw: &str) -> DomainKnowledge {
    let s = split_sections(raw, KNOWLEDGE_HEADERS, true);
    let mut flags = Vec::new();
    let missing: Vec<&str> = KNOWLEDGE_HEADERS
        .iter()
        .map(|(k, _)| *k)
        .filter(|k| !s.has(k))
        .collect();
    if !missing.is_empty() {
        flags.push(format!("missing knowledge sections: {}", missing.join(", ")));
    }
    let answers = answer_like_lines(raw);
    if !answers.is_empty() {
        flags.push(format!("knowledge contains an attempted answer: {}", answers.join(" / ")));
    }
    DomainKnowledge {
        domain: s.text("DOMAIN"),
        knowledge: s.text("KNOWLEDGE"),
        key_signals: s.text("KEY SIGNALS"),
        suggested_approach: s.text("SUGGESTED APPROACH"),
        pitfalls: s.text("PITFALLS"),
        modality_guidance: s.text("MODALITY"),
        raw_text: if raw.trim().is_empty() { "(no output)".to_string() } else { raw.to_string() },
        flags,
    }
}

const EVIDENCE_HEADERS: &HeaderSet = &[
    ("UNDERSTANDING", &["UNDERSTANDING"]),
    ("OTHER PERSPECTIVES", &["OTHER PERSPECTIVES", "OTHER PERSPECTIVE"]),
    ("OBSERVATIONS", &["USEFUL OBSERVATIONS", "OBSERVATIONS", "USEFUL OBSERVATION"]),
    ("INFERENCES", &["INFERENCES", "INFERENCE"]),
    ("LIMITS", &["LIMITS", "LIMITATIONS", "LIMIT"]),
    ("ANSWER", &["FINAL ANSWER", "CALIBRATED ANSWER", "ANSWER"]),
];

static ITEM: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(?:\d+\s*[.):]|[-*•])\s+(.*)$").expect("valid regex"));
static TAG: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\[\s*(OBSERVATION|INFERENCE)S?\s*\]|\(\s*(OBSERVATION|INFERENCE)S?\s*\)").expect("valid regex")
});

fn split_items(body: &str) -> Vec<String> {
    let mut items: Vec<String> = Vec::new();
    for line in body.lines() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(c) = ITEM.captures(line) {
            items.push(c[1].trim().to_string());
        } else if let Some(last) = items.last_mut() {
            last.push(' ');
            last.push_str(t);
        } else {
            items.push(t.to_string());
        }
    }
    items
}

fn tagged(item: &str, section: EvidenceTag) -> TaggedStatement {
    let explicit = TAG.captures(item).map(|c| {
        let tok = c.get(1).or_else(|| c.get(2)).map_or("", |m| m.as_str());
        if tok.eq_ignore_ascii_case("INFERENCE") {
            EvidenceTag::Inference
        } else {
            EvidenceTag::Observation
        }
    });
    let text = TAG.replace_all(item, "").trim().trim_matches('*').trim().to_string();
    TaggedStatement {
        text,
        tag: explicit.unwrap_or(section),
        tag_inferred: explicit.is_none(),
    }
}

/// Parses one analyst report. Items missing a bracket tag take the tag of
/// their section; items tagged for the other section move there. Answer-like
/// lines go to `overflow` and are flagged.
pub fn parse_evidence(raw: &str, modality: Modality, round: u32) -> Result<EvidenceReport, ParseError> {
    let answers = answer_like_lines(raw);
    let kept: Vec<&str> = raw.lines().filter(|l| !ANSWER_LINE.is_match(l)).collect();
    let s = split_sections(&kept.join("\n"), EVIDENCE_HEADERS, false);
    let mut flags = Vec::new();

    let mut observations = Vec::new();
    let mut inferences = Vec::new();
    let mut inferred = 0;
    let mut moved = 0;
    for (key, section) in [("OBSERVATIONS", EvidenceTag::Observation), ("INFERENCES", EvidenceTag::Inference)] {
        for item in split_items(s.get(key).unwrap_or("")) {
            let st = tagged(&item, section);
            if st.text.is_empty() {
                continue;
            }
            inferred += usize::from(st.tag_inferred);
            moved += usize::from(st.tag != section);
            match st.tag {
                EvidenceTag::Observation => observations.push(st),
                EvidenceTag::Inference => inferences.push(st),
            }
        }
    }
    if observations.is_empty() && inferences.is_empty() {
        return Err(ParseError::EmptyEvidence);
    }
    if inferred > 0 {
        flags.push(format!("{inferred} item(s) without a bracket tag; tag inferred from section"));
    }
    if moved > 0 {
        flags.push(format!("{moved} item(s) tagged for the other section were moved"));
    }
    let understanding = s.text("UNDERSTANDING");
    if understanding.is_empty() {
        flags.push("missing UNDERSTANDING".to_string());
    }
    let limits = s.text("LIMITS");
    if limits.is_empty() {
        flags.push("missing LIMITS".to_string());
    }
    let other = s.get("OTHER PERSPECTIVES").map(|t| t.trim().to_string());
    let other_perspectives = match (round, other) {
        (1, Some(_)) => {
            flags.push("OTHER PERSPECTIVES in round 1 ignored".to_string());
            None
        }
        (r, None) if r >= 2 => {
            flags.push("missing OTHER PERSPECTIVES".to_string());
            None
        }
        (_, o) => o,
    };
    let mut overflow = answers;
    if let Some(extra) = s.get("ANSWER") {
        overflow.push(extra.trim().to_string());
    }
    overflow.dedup();
    if !overflow.is_empty() {
        flags.push("final answer given despite instructions; moved to overflow".to_string());
    }
    if !s.repeated.is_empty() {
        flags.push(format!("repeated sections merged: {}", s.repeated.join(", ")));
    }
    Ok(EvidenceReport {
        modality,
        round,
        understanding,
        other_perspectives,
        observations,
        inferences,
        limits,
        overflow,
        raw_text: raw.to_string(),
        usable: true,
        flags,
    })
}
