use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;

use super::answer::{extract_answer, strip_answer_prefix};
use super::{answer_like_lines, split_sections, HeaderSet, ParseError};
use crate::model::{
    agreement_of, normalize_weights, Agreement, Answer, AnswerSpace, ApproachStatus, ClaimVerdict,
    ConflictStatus, DomainConsistency, Modality, Resolution, ReviewerRecord, ReviewerScore,
    ScoreTriple, SynthesizerVerdict, TaskInstance, TaskTypeJudgment, TemporalScope, Verification,
    MAX_CRITERION, MAX_HONESTY, MAX_INFERENCE, MAX_OBSERVATION,
};

/// A perfect synthesizer score for a reviewer is not allowed; it becomes this.
pub const PERFECT_SCORE_CLAMP: u32 = 99;

/// Stated weights within this distance of the normalized ones are display
/// rounding, not a disagreement worth flagging.
const WEIGHT_ROUNDING: f64 = 0.005;

const REVIEWER_HEADERS: &HeaderSet = &[
    ("TASK", &["TASK"]),
    ("TASK TYPE", &["TASK TYPE"]),
    ("SCORES", &["SCORES", "SCORE"]),
    ("WEIGHTS", &["WEIGHTS", "WEIGHT"]),
    ("VERIFICATION", &["VERIFICATION", "CLAIM VERIFICATION"]),
    ("CONFLICTS", &["OUTSTANDING CONFLICTS", "OUTSTANDING CONFLICT", "CONFLICTS", "CONFLICT STATUS"]),
    ("KEY EVIDENCE", &["KEY EVIDENCE"]),
    ("CALIBRATED ANSWER", &["CALIBRATED ANSWER", "FINAL ANSWER"]),
];

const SYNTHESIZER_HEADERS: &HeaderSet = &[
    ("TASK", &["TASK"]),
    ("TASK TYPE", &["TASK TYPE"]),
    ("APPROACH CHECK", &["APPROACH CHECK"]),
    ("REVIEWER SCORES", &["REVIEWER SCORES"]),
    ("ANSWER VERIFICATION", &["ANSWER VERIFICATION"]),
    ("CONFLICT STATUS", &["CONFLICT STATUS"]),
    ("CALIBRATED REASONING", &["CALIBRATED REASONING"]),
    ("FINAL ANSWER", &["FINAL ANSWER", "CALIBRATED ANSWER", "ANSWER"]),
];

fn re(p: &str) -> Regex {
    Regex::new(p).expect("valid regex")
}

static MODALITY: LazyLock<Regex> = LazyLock::new(|| re(r"(?i)\b(TEXT|VISUAL|NUMERICAL)\b"));
static NAMED_COMPONENT: LazyLock<Regex> = LazyLock::new(|| {
    re(r"(?i)\b(observation|obs|inference|inf|honesty|hon)[a-z]*\s*[:=]?\s*(\d+)(?:\s*/\s*(\d+))?")
});
static BARE_COMPONENT: LazyLock<Regex> = LazyLock::new(|| re(r"(\d+)\s*/\s*(50|30|20)\b"));
static STATED_TOTAL: LazyLock<Regex> = LazyLock::new(|| re(r"=\s*\[?\s*(\d+)"));
static PERCENT: LazyLock<Regex> = LazyLock::new(|| re(r"(\d+(?:\.\d+)?)\s*(%)?"));
static VERDICT: LazyLock<Regex> = LazyLock::new(|| {
    re(r"(?i)^\s*(?:[-*•]|\d+[.)])?\s*(.*?)\s*:\s*\**\[?\s*(UNVERIFIED|CONTRADICTED|VERIFIED)\s*\]?\**\s*(?:\+|,|/|&|and)?\s*\[?\s*(?:DOMAIN\s*:?\s*)?(MATCHES|MATCH|VIOLATES|VIOLATE|N-A|N/A|NA)?\s*\]?\s*(?:[-–—:]+\s*(.*))?$")
});
static REVIEWER_ID: LazyLock<Regex> = LazyLock::new(|| re(r"(?i)reviewer\s*#?\s*(\d+)"));
static NAMED_CRITERION: LazyLock<Regex> = LazyLock::new(|| {
    re(r"(?i)\b(task|evidence|verification|conflicts?|calibration)\s*[:=]?\s*(\d+)(?:\s*/\s*20)?")
});
static BARE_CRITERION: LazyLock<Regex> = LazyLock::new(|| re(r"(\d+)\s*/\s*20\b"));

/// The unique token from `table` found in `text`; `None` when absent or ambiguous.
fn one_of<T: Copy + PartialEq>(text: &str, table: &[(&str, T)]) -> Option<T> {
    let mut found: Vec<T> = Vec::new();
    for (pat, v) in table {
        if re(&format!(r"(?i)\b(?:{pat})\b")).is_match(text) && !found.contains(v) {
            found.push(*v);
        }
    }
    (found.len() == 1).then(|| found[0])
}

fn task_type(text: &str) -> Option<TaskTypeJudgment> {
    one_of(
        text,
        &[("FUTURE", TaskTypeJudgment::Future), (r"PAST[\s_-]*PRESENT", TaskTypeJudgment::PastPresent)],
    )
}

fn clamp(v: u32, max: u32, what: &str, flags: &mut Vec<String>) -> u32 {
    if v > max {
        flags.push(format!("{what} {v} clamped to {max}"));
        max
    } else {
        v
    }
}

fn parse_score_line(line: &str, m: Modality, flags: &mut Vec<String>) -> Option<ScoreTriple> {
    let mut parts: BTreeMap<&str, u32> = BTreeMap::new();
    let mut take = |axis: &'static str, v: u32| {
        parts.entry(axis).or_insert(v);
    };
    let axis_by_denominator = |d: &str| match d {
        "50" => Some("inference"),
        "30" => Some("observation"),
        "20" => Some("honesty"),
        _ => None,
    };
    let named: Vec<_> = NAMED_COMPONENT.captures_iter(line).collect();
    if named.is_empty() {
        for c in BARE_COMPONENT.captures_iter(line) {
            if let (Some(axis), Ok(v)) = (axis_by_denominator(&c[2]), c[1].parse()) {
                take(axis, v);
            }
        }
    } else {
        for c in named {
            let by_name = match c[1].to_ascii_lowercase().chars().next() {
                Some('o') => "observation",
                Some('i') => "inference",
                _ => "honesty",
            };
            let axis = c.get(3).and_then(|d| axis_by_denominator(d.as_str())).unwrap_or(by_name);
            if let Ok(v) = c[2].parse() {
                take(axis, v);
            }
        }
    }
    let (Some(&i), Some(&o), Some(&h)) = (parts.get("inference"), parts.get("observation"), parts.get("honesty")) else {
        flags.push(format!("{m} score line incomplete: {}", line.trim()));
        return None;
    };
    let i = clamp(i, MAX_INFERENCE, &format!("{m} inference"), flags);
    let o = clamp(o, MAX_OBSERVATION, &format!("{m} observation"), flags);
    let h = clamp(h, MAX_HONESTY, &format!("{m} honesty"), flags);
    let triple = ScoreTriple::new(i, o, h).expect("components clamped to bounds");
    let tail = line.rfind(')').map_or(line, |p| &line[p..]);
    if let Some(stated) = STATED_TOTAL.captures(tail).and_then(|c| c[1].parse::<u32>().ok()) {
        if stated != triple.total() {
            flags.push(format!("{m} total stated {stated}, recomputed {}", triple.total()));
        }
    }
    Some(triple)
}

fn parse_weights(section: &str) -> BTreeMap<Modality, f64> {
    let mut out = BTreeMap::new();
    for line in section.lines() {
        let Some(m) = MODALITY.captures(line).and_then(|c| Modality::parse(&c[1])) else {
            continue;
        };
        let after = &line[MODALITY.find(line).map_or(0, |x| x.end())..];
        if let Some(c) = PERCENT.captures(after) {
            if let Ok(v) = c[1].parse::<f64>() {
                let w = if c.get(2).is_some() || v > 1.0 { v / 100.0 } else { v };
                out.entry(m).or_insert(w);
            }
        }
    }
    out
}

fn parse_verdicts(section: &str, flags: &mut Vec<String>) -> Vec<ClaimVerdict> {
    let mut out = Vec::new();
    for line in section.lines() {
        let Some(c) = VERDICT.captures(line) else { continue };
        let claim = c[1].trim().trim_matches(['[', ']', '*']).trim().to_string();
        if claim.is_empty() {
            flags.push(format!("verdict without a claim: {}", line.trim()));
            continue;
        }
        let verification = match c[2].to_ascii_uppercase().as_str() {
            "VERIFIED" => Verification::Verified,
            "UNVERIFIED" => Verification::Unverified,
            _ => Verification::Contradicted,
        };
        let domain_consistency = match c.get(3) {
            Some(d) => DomainConsistency::parse(d.as_str()).unwrap_or(DomainConsistency::Na),
            None => {
                flags.push(format!("verdict without a domain label, N-A assumed: {claim}"));
                DomainConsistency::Na
            }
        };
        out.push(ClaimVerdict {
            claim_text: claim,
            verification,
            domain_consistency,
            explanation: c.get(4).map_or("", |e| e.as_str()).trim().to_string(),
        });
    }
    out
}

/// Flags verification against data on a task whose target lies beyond the window.
pub fn temporal_violations(record: &ReviewerRecord, scope: TemporalScope) -> Option<String> {
    if scope != TemporalScope::Future {
        return None;
    }
    let n = record
        .verdicts
        .iter()
        .filter(|v| v.verification == Verification::Verified)
        .count();
    (n > 0).then(|| format!("temporal-verification violation: {n} claim(s) marked VERIFIED on a FUTURE task"))
}

fn answer_text(section: &str, space: &AnswerSpace) -> String {
    match space {
        AnswerSpace::Numeric { .. } => section.split_whitespace().collect::<Vec<_>>().join(" "),
        _ => section.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("").to_string(),
    }
}

/// Parses a reviewer record and applies the score, weight and temporal rules.
pub fn parse_reviewer(raw: &str, reviewer_id: usize, instance: &TaskInstance) -> Result<ReviewerRecord, ParseError> {
    let s = split_sections(raw, REVIEWER_HEADERS, false);
    let mut flags = Vec::new();
    let answer_section = s.get("CALIBRATED ANSWER").ok_or(ParseError::Missing("CALIBRATED ANSWER"))?;
    let calibrated_answer_raw = answer_text(answer_section, &instance.answer_space);
    let calibrated_answer = extract_answer(&calibrated_answer_raw, instance)?;

    let mut scores = BTreeMap::new();
    let score_src = s.get("SCORES").unwrap_or("");
    for line in score_src.lines() {
        let Some(m) = MODALITY.captures(line).and_then(|c| Modality::parse(&c[1])) else {
            continue;
        };
        if scores.contains_key(&m) {
            continue;
        }
        if let Some(t) = parse_score_line(line, m, &mut flags) {
            scores.insert(m, t);
        }
    }
    let missing: Vec<&str> = Modality::ALL
        .iter()
        .filter(|m| !scores.contains_key(m))
        .map(|m| m.as_str())
        .collect();
    if !missing.is_empty() {
        flags.push(format!("no score for: {}", missing.join(", ")));
    }

    let weights = normalize_weights(&scores);
    let stated = parse_weights(s.get("WEIGHTS").unwrap_or(""));
    if stated.is_empty() {
        if !scores.is_empty() {
            flags.push("weights absent; computed from scores".to_string());
        }
    } else {
        let off = weights
            .iter()
            .any(|(m, w)| stated.get(m).is_none_or(|x| (x - w).abs() > WEIGHT_ROUNDING));
        if off {
            let shown: Vec<String> = stated.iter().map(|(m, w)| format!("{m}={w:.3}")).collect();
            flags.push(format!("stated weights ({}) replaced by normalized scores", shown.join(", ")));
        }
    }

    let verdicts = parse_verdicts(s.get("VERIFICATION").unwrap_or(""), &mut flags);
    let conflict = one_of(
        s.get("CONFLICTS").unwrap_or(""),
        &[
            (r"NO[\s_-]?CONFLICTS?", ConflictStatus::NoConflict),
            ("DETECTED|UNRESOLVED", ConflictStatus::Detected),
            ("RESOLVED", ConflictStatus::Resolved),
        ],
    )
    .unwrap_or_else(|| {
        flags.push("conflict status missing or ambiguous; DETECTED assumed".to_string());
        ConflictStatus::Detected
    });
    let task_type_judgment = task_type(s.get("TASK TYPE").unwrap_or(""));
    if task_type_judgment.is_none() {
        flags.push("task type missing or ambiguous".to_string());
    }
    if !s.repeated.is_empty() {
        flags.push(format!("repeated sections merged: {}", s.repeated.join(", ")));
    }
    let mut record = ReviewerRecord {
        reviewer_id,
        task_restatement: s.text("TASK"),
        task_type_judgment,
        scores,
        weights,
        verdicts,
        conflict,
        key_evidence: s.text("KEY EVIDENCE"),
        calibrated_answer,
        calibrated_answer_raw,
        raw_text: raw.to_string(),
        usable: true,
        flags,
    };
    if let Some(f) = temporal_violations(&record, instance.temporal_scope) {
        record.flags.push(f);
    }
    Ok(record)
}

/// Re-applies the weight rule; a parsed record is a fixed point.
pub fn recompute_reviewer(record: &ReviewerRecord) -> ReviewerRecord {
    let mut r = record.clone();
    r.weights = normalize_weights(&r.scores);
    r
}

fn parse_reviewer_score(line: &str, flags: &mut Vec<String>) -> Option<(usize, ReviewerScore)> {
    let id: usize = REVIEWER_ID.captures(line)?[1].parse().ok()?;
    let after = &line[REVIEWER_ID.find(line)?.end()..];
    let mut named: BTreeMap<usize, u32> = BTreeMap::new();
    for c in NAMED_CRITERION.captures_iter(after) {
        let k = match c[1].to_ascii_lowercase().as_str() {
            "task" => 0,
            "evidence" => 1,
            "verification" => 2,
            "calibration" => 4,
            _ => 3,
        };
        if let Ok(v) = c[2].parse() {
            named.entry(k).or_insert(v);
        }
    }
    let values: Vec<u32> = if named.len() == 5 {
        named.into_values().collect()
    } else {
        BARE_CRITERION
            .captures_iter(after)
            .filter_map(|c| c[1].parse().ok())
            .take(5)
            .collect()
    };
    if values.len() < 5 {
        flags.push(format!("reviewer {id} score line incomplete: {}", line.trim()));
        return None;
    }
    let mut c = [0u32; 5];
    for (k, v) in values.into_iter().enumerate() {
        c[k] = clamp(v, MAX_CRITERION, &format!("reviewer {id} {}", ReviewerScore::CRITERIA[k]), flags);
    }
    let mut total: u32 = c.iter().sum();
    if total == 100 {
        c[4] -= 1;
        total = PERFECT_SCORE_CLAMP;
        flags.push(format!("reviewer {id} scored 100; clamped to {PERFECT_SCORE_CLAMP}"));
    }
    let tail = line.rfind(')').map_or(line, |p| &line[p..]);
    if let Some(stated) = STATED_TOTAL.captures(tail).and_then(|x| x[1].parse::<u32>().ok()) {
        if stated != total && !(stated == 100 && total == PERFECT_SCORE_CLAMP) {
            flags.push(format!("reviewer {id} total stated {stated}, recomputed {total}"));
        }
    }
    Some((id, ReviewerScore::new(c).expect("criteria clamped to bounds")))
}

fn line_after<'a>(section: &'a str, label: &str) -> Option<&'a str> {
    let pat = re(&format!(r"(?i)^[\s*•-]*{label}\s*\**\s*:"));
    section.lines().find_map(|l| pat.find(l).map(|m| &l[m.end()..]))
}

/// Parses the synthesizer verdict; Γ is recomputed from the usable
/// reviewer answers when they are comparable.
pub fn parse_synthesizer(
    raw: &str,
    instance: &TaskInstance,
    reviewers: &[&ReviewerRecord],
) -> Result<SynthesizerVerdict, ParseError> {
    let s = split_sections(raw, SYNTHESIZER_HEADERS, false);
    let mut flags = Vec::new();
    let final_section = s.get("FINAL ANSWER").ok_or(ParseError::Missing("FINAL ANSWER"))?;
    let final_answer_raw = answer_text(final_section, &instance.answer_space);
    let final_answer = extract_answer(&final_answer_raw, instance)?;

    let approach_src = s.get("APPROACH CHECK").unwrap_or("");
    let approach_status = line_after(approach_src, "Status")
        .and_then(|l| one_of(l, &[("CORRECT", ApproachStatus::Correct), ("MISMATCH", ApproachStatus::Mismatch)]))
        .unwrap_or_else(|| {
            flags.push("approach status missing or ambiguous; CORRECT assumed".to_string());
            ApproachStatus::Correct
        });

    let mut reviewer_scores = BTreeMap::new();
    for line in s.get("REVIEWER SCORES").unwrap_or("").lines() {
        if let Some((id, score)) = parse_reviewer_score(line, &mut flags) {
            reviewer_scores.entry(id).or_insert(score);
        }
    }
    if reviewer_scores.is_empty() {
        flags.push("no reviewer scores".to_string());
    }

    let conflict_src = s.get("CONFLICT STATUS").unwrap_or("");
    let stated_agreement = line_after(conflict_src, "Reviewer Agreement").and_then(|l| {
        one_of(
            l,
            &[
                ("UNANIMOUS", Agreement::Unanimous),
                ("SPLIT", Agreement::Split),
                (r"ALL[\s_-]?DIFFERENT", Agreement::AllDifferent),
            ],
        )
    });
    let answers: Vec<Answer> = reviewers
        .iter()
        .filter(|r| r.usable)
        .map(|r| r.calibrated_answer.clone())
        .collect();
    let comparable = !answers.is_empty() && !answers.iter().any(|a| matches!(a, Answer::FreeText(_)));
    let agreement = if comparable {
        let computed = agreement_of(&answers);
        match stated_agreement {
            Some(a) if a == computed => {}
            Some(a) => flags.push(format!("agreement stated {a:?}, recomputed {computed:?} from reviewer answers")),
            None => flags.push(format!("agreement missing; recomputed {computed:?}")),
        }
        computed
    } else {
        stated_agreement.unwrap_or_else(|| {
            flags.push("agreement missing; SPLIT assumed".to_string());
            Agreement::Split
        })
    };

    let resolution = line_after(conflict_src, "Resolution")
        .and_then(|l| {
            one_of(
                l,
                &[
                    (r"VERIFIED[\s_-]?RESOLUTION", Resolution::VerifiedResolution),
                    ("UNRESOLVED", Resolution::Unresolved),
                    (r"NO[\s_-]?CONFLICT", Resolution::NoConflict),
                    (r"APPROACH[\s_-]?ERROR", Resolution::ApproachError),
                ],
            )
        })
        .unwrap_or_else(|| {
            let r = if agreement == Agreement::Unanimous { Resolution::NoConflict } else { Resolution::Unresolved };
            flags.push(format!("resolution missing or ambiguous; {r:?} assumed"));
            r
        });

    let task_type_judgment = task_type(s.get("TASK TYPE").unwrap_or(""));
    if task_type_judgment.is_none() {
        flags.push("task type missing or ambiguous".to_string());
    }
    Ok(SynthesizerVerdict {
        task_restatement: s.text("TASK"),
        task_type_judgment,
        approach_status,
        reviewer_scores,
        agreement,
        resolution,
        final_answer,
        final_answer_raw,
        raw_text: raw.to_string(),
        flags,
    })
}

/// Slot filler for a reviewer whose output could not be parsed.
pub fn unusable_reviewer(reviewer_id: usize, raw: &str, reason: &str) -> ReviewerRecord {
    ReviewerRecord {
        reviewer_id,
        task_restatement: String::new(),
        task_type_judgment: None,
        scores: BTreeMap::new(),
        weights: BTreeMap::new(),
        verdicts: Vec::new(),
        conflict: ConflictStatus::Detected,
        key_evidence: String::new(),
        calibrated_answer: Answer::FreeText(String::new()),
        calibrated_answer_raw: answer_like_lines(raw)
            .last()
            .map(|l| strip_answer_prefix(l))
            .unwrap_or_default(),
        raw_text: if raw.trim().is_empty() { "(no output)".to_string() } else { raw.to_string() },
        usable: false,
        flags: vec![format!("unusable: {reason}")],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{TaskType, TimeSeriesRecord};

    fn instance(scope: TemporalScope) -> TaskInstance {
        TaskInstance {
            id: "i".into(),
            query: "q".into(),
            context: None,
            series: TimeSeriesRecord::univariate("s", vec![1.0, 2.0]),
            task_type: TaskType::Classification,
            answer_space: AnswerSpace::Labels { labels: vec!["A".into(), "B".into()] },
            ground_truth: None,
            temporal_scope: scope,
            strata: Default::default(),
        }
    }

    const REVIEW: &str = "TASK: pick a label\nTASK TYPE: PAST-PRESENT\n\nSCORES:\n- TEXT: (Observation: 20/30, Inference: 40/50, Honesty: 20/20) = 80\n- VISUAL: (Observation: 10/30, Inference: 20/50, Honesty: 10/20) = 40\n- NUMERICAL: (Observation: 20/30, Inference: 40/50, Honesty: 20/20) = 80\n\nWEIGHTS:\n- TEXT: 40%\n- VISUAL: 20%\n- NUMERICAL: 40%\n\nVERIFICATION (check against lookup tools, code executor, charts, text in task, domain knowledge (above)):\n- [Mean is 3.2]: [VERIFIED] + [DOMAIN: MATCHES] - recomputed\n- Upward trend: CONTRADICTED + DOMAIN: N-A - slope negative\n\nOUTSTANDING CONFLICTS: RESOLVED - trend claim contradicted\nKEY EVIDENCE: mean\nCALIBRATED ANSWER: B";

    #[test]
    fn reviewer_conformant() {
        let r = parse_reviewer(REVIEW, 1, &instance(TemporalScope::PastPresent)).unwrap();
        assert_eq!(r.scores[&Modality::Text], ScoreTriple::new(40, 20, 20).unwrap());
        assert_eq!(r.weights[&Modality::Visual], 0.2);
        assert_eq!(r.verdicts.len(), 2);
        assert_eq!(r.verdicts[0].claim_text, "Mean is 3.2");
        assert_eq!(r.verdicts[1].verification, Verification::Contradicted);
        assert_eq!(r.verdicts[1].domain_consistency, DomainConsistency::Na);
        assert_eq!(r.conflict, ConflictStatus::Resolved);
        assert_eq!(r.calibrated_answer, Answer::Label("B".into()));
        assert!(r.flags.is_empty(), "{:?}", r.flags);
        assert_eq!(recompute_reviewer(&r), r);
    }

    #[test]
    fn reviewer_recomputes_total_and_flags_future_verification() {
        let raw = REVIEW.replace(
            "(Observation: 20/30, Inference: 40/50, Honesty: 20/20) = 80\n- VISUAL",
            "(Inference: 40/50, Observation: 20/30, Honesty: 15/20) = 80\n- VISUAL",
        );
        let r = parse_reviewer(&raw, 0, &instance(TemporalScope::Future)).unwrap();
        assert_eq!(r.scores[&Modality::Text].total(), 75);
        assert!(r.flags.iter().any(|f| f.contains("recomputed 75")));
        assert!(r.flags.iter().any(|f| f.starts_with("temporal-verification violation")));
    }

    #[test]
    fn reviewer_without_answer_fails() {
        let raw = REVIEW.replace("CALIBRATED ANSWER: B", "");
        assert_eq!(
            parse_reviewer(&raw, 0, &instance(TemporalScope::PastPresent)),
            Err(ParseError::Missing("CALIBRATED ANSWER"))
        );
    }

    #[test]
    fn synthesizer_clamps_and_recomputes_agreement() {
        let inst = instance(TemporalScope::PastPresent);
        let a = parse_reviewer(REVIEW.replace("ANSWER: B", "ANSWER: A").as_str(), 0, &inst).unwrap();
        let b = parse_reviewer(REVIEW, 2, &inst).unwrap();
        let raw = "TASK: t\nTASK TYPE: PAST-PRESENT\nAPPROACH CHECK:\n- SUGGESTED: x\n- USED: y\n- Status: CORRECT\n\nREVIEWER SCORES:\n- Reviewer 0: (Task: 20/20, Evidence: 20/20, Verification: 20/20, Conflicts: 20/20, Calibration: 20/20) = 100\n- Reviewer 1: (Task: 15/20, Evidence: 15/20, Verification: 15/20, Conflicts: 15/20, Calibration: 15/20) = 75\n\nCONFLICT STATUS:\n- Reviewer Agreement: UNANIMOUS\n- Resolution: VERIFIED_RESOLUTION\n\nFINAL ANSWER: A";
        let v = parse_synthesizer(raw, &inst, &[&a, &a, &b]).unwrap();
        assert_eq!(v.reviewer_scores[&0].total(), 99);
        assert_eq!(v.reviewer_scores[&1].total(), 75);
        assert_eq!(v.agreement, Agreement::Split);
        assert_eq!(v.resolution, Resolution::VerifiedResolution);
        assert_eq!(v.final_answer, Answer::Label("A".into()));
        assert_eq!(v.flags.len(), 2, "{:?}", v.flags);
    }
}
