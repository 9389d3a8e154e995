//! Verification-conflict-calibration labels and the arithmetic rules that
//! tie them together (score bounds, rejection, weights, answer agreement).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::evidence::Modality;
use super::task::Answer;
use super::ModelError;

/// Analysts whose total score falls below this are rejected (weight 0).
pub const REJECTION_THRESHOLD: u32 = 40;

pub const MAX_INFERENCE: u32 = 50;
pub const MAX_OBSERVATION: u32 = 30;
pub const MAX_HONESTY: u32 = 20;
pub const MAX_CRITERION: u32 = 20;

/// Relative elementwise tolerance under which two numeric answers agree.
pub const NUMERIC_AGREEMENT_RTOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verification {
    Verified,
    Unverified,
    Contradicted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainConsistency {
    #[serde(rename = "MATCHES")]
    Matches,
    #[serde(rename = "VIOLATES")]
    Violates,
    #[serde(rename = "NA", alias = "N/A", alias = "N-A")]
    Na,
}

impl DomainConsistency {
    pub fn parse(token: &str) -> Option<Self> {
        match token.trim().to_ascii_uppercase().as_str() {
            "MATCHES" | "MATCH" => Some(Self::Matches),
            "VIOLATES" | "VIOLATE" => Some(Self::Violates),
            "NA" | "N/A" | "N-A" => Some(Self::Na),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimVerdict {
    pub claim_text: String,
    pub verification: Verification,
    pub domain_consistency: DomainConsistency,
    pub explanation: String,
}

/// Per-analyst score: inference (0-50), observation (0-30), honesty (0-20).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawScoreTriple")]
pub struct ScoreTriple {
    inference: u32,
    observation: u32,
    honesty: u32,
    total: u32,
}

#[derive(Deserialize)]
struct RawScoreTriple {
    inference: u32,
    observation: u32,
    honesty: u32,
    total: u32,
}

impl TryFrom<RawScoreTriple> for ScoreTriple {
    type Error = ModelError;

    fn try_from(raw: RawScoreTriple) -> Result<Self, Self::Error> {
        let triple = ScoreTriple::new(raw.inference, raw.observation, raw.honesty)?;
        if triple.total != raw.total {
            return Err(ModelError::ScoreTotal {
                stated: raw.total,
                computed: triple.total,
            });
        }
        Ok(triple)
    }
}

impl ScoreTriple {
    pub fn new(inference: u32, observation: u32, honesty: u32) -> Result<Self, ModelError> {
        check_bound("inference", inference, MAX_INFERENCE)?;
        check_bound("observation", observation, MAX_OBSERVATION)?;
        check_bound("honesty", honesty, MAX_HONESTY)?;
        Ok(Self {
            inference,
            observation,
            honesty,
            total: inference + observation + honesty,
        })
    }

    pub fn inference(&self) -> u32 {
        self.inference
    }
    pub fn observation(&self) -> u32 {
        self.observation
    }
    pub fn honesty(&self) -> u32 {
        self.honesty
    }
    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn is_rejected(&self) -> bool {
        self.total < REJECTION_THRESHOLD
    }
}

fn check_bound(axis: &'static str, value: u32, max: u32) -> Result<(), ModelError> {
    if value > max {
        Err(ModelError::ScoreOutOfRange { axis, value, max })
    } else {
        Ok(())
    }
}

/// Weight = score / sum(scores) over analysts that survive the rejection rule.
/// Rejected analysts get weight 0; with no survivors every weight is 0.
pub fn normalize_weights(scores: &BTreeMap<Modality, ScoreTriple>) -> BTreeMap<Modality, f64> {
    let survivor_sum: u32 = scores
        .values()
        .filter(|s| !s.is_rejected())
        .map(ScoreTriple::total)
        .sum();
    scores
        .iter()
        .map(|(m, s)| {
            let w = if s.is_rejected() || survivor_sum == 0 {
                0.0
            } else {
                f64::from(s.total()) / f64::from(survivor_sum)
            };
            (*m, w)
        })
        .collect()
}

/// True when `weights` already satisfy the rejection rule and sum to one over
/// the survivors (within 1e-6).
pub fn weights_consistent(
    scores: &BTreeMap<Modality, ScoreTriple>,
    weights: &BTreeMap<Modality, f64>,
) -> bool {
    if scores.keys().ne(weights.keys()) {
        return false;
    }
    let mut sum = 0.0;
    let mut survivors = 0;
    for (m, s) in scores {
        let w = weights[m];
        if !(0.0..=1.0 + 1e-9).contains(&w) {
            return false;
        }
        if s.is_rejected() {
            if w != 0.0 {
                return false;
            }
        } else {
            survivors += 1;
            sum += w;
        }
    }
    survivors == 0 || (sum - 1.0).abs() <= 1e-6
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TaskTypeJudgment {
    Future,
    PastPresent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ConflictStatus {
    NoConflict,
    Detected,
    Resolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewerRecord {
    pub reviewer_id: usize,
    pub task_restatement: String,
    #[serde(default)]
    pub task_type_judgment: Option<TaskTypeJudgment>,
    pub scores: BTreeMap<Modality, ScoreTriple>,
    pub weights: BTreeMap<Modality, f64>,
    pub verdicts: Vec<ClaimVerdict>,
    pub conflict: ConflictStatus,
    pub key_evidence: String,
    pub calibrated_answer: Answer,
    /// The answer line as the reviewer wrote it.
    pub calibrated_answer_raw: String,
    pub raw_text: String,
    pub usable: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ApproachStatus {
    Correct,
    Mismatch,
}

/// Γ: do the reviewers converge on one answer?
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Agreement {
    Unanimous,
    Split,
    AllDifferent,
}

/// Λ: how disagreement was settled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Resolution {
    VerifiedResolution,
    Unresolved,
    NoConflict,
    ApproachError,
}

/// Synthesizer's rubric for one reviewer: five criteria of 0-20 each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawReviewerScore")]
pub struct ReviewerScore {
    criteria: [u32; 5],
    total: u32,
}

#[derive(Deserialize)]
struct RawReviewerScore {
    criteria: [u32; 5],
    total: u32,
}

impl TryFrom<RawReviewerScore> for ReviewerScore {
    type Error = ModelError;

    fn try_from(raw: RawReviewerScore) -> Result<Self, Self::Error> {
        let score = ReviewerScore::new(raw.criteria)?;
        if score.total != raw.total {
            return Err(ModelError::ScoreTotal {
                stated: raw.total,
                computed: score.total,
            });
        }
        Ok(score)
    }
}

impl ReviewerScore {
    pub const CRITERIA: [&'static str; 5] =
        ["Task", "Evidence", "Verification", "Conflicts", "Calibration"];

    pub fn new(criteria: [u32; 5]) -> Result<Self, ModelError> {
        for (name, v) in Self::CRITERIA.iter().zip(criteria) {
            check_bound(name, v, MAX_CRITERION)?;
        }
        Ok(Self {
            criteria,
            total: criteria.iter().sum(),
        })
    }

    pub fn criteria(&self) -> [u32; 5] {
        self.criteria
    }

    pub fn total(&self) -> u32 {
        self.total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesizerVerdict {
    pub task_restatement: String,
    #[serde(default)]
    pub task_type_judgment: Option<TaskTypeJudgment>,
    pub approach_status: ApproachStatus,
    pub reviewer_scores: BTreeMap<usize, ReviewerScore>,
    pub agreement: Agreement,
    pub resolution: Resolution,
    pub final_answer: Answer,
    pub final_answer_raw: String,
    pub raw_text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

/// Equivalence used for agreement: discrete answers compare case-insensitively,
/// numeric vectors agree elementwise within a relative tolerance of 1e-3.
pub fn answers_agree(a: &Answer, b: &Answer) -> bool {
    match (a, b) {
        (Answer::NumericVector(x), Answer::NumericVector(y)) => {
            x.len() == y.len()
                && x.iter().zip(y).all(|(p, q)| {
                    let scale = p.abs().max(q.abs());
                    (p - q).abs() <= NUMERIC_AGREEMENT_RTOL * scale
                })
        }
        (Answer::FreeText(x), Answer::FreeText(y)) => {
            x.trim().eq_ignore_ascii_case(y.trim())
        }
        _ => match (a.discrete_key(), b.discrete_key()) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        },
    }
}

/// Γ from the reviewers' answers: all equal, some equal, or pairwise distinct.
pub fn agreement_of(answers: &[Answer]) -> Agreement {
    let mut any_equal = false;
    let mut all_equal = true;
    for i in 0..answers.len() {
        for j in i + 1..answers.len() {
            if answers_agree(&answers[i], &answers[j]) {
                any_equal = true;
            } else {
                all_equal = false;
            }
        }
    }
    if all_equal {
        Agreement::Unanimous
    } else if any_equal {
        Agreement::Split
    } else {
        Agreement::AllDifferent
    }
}
