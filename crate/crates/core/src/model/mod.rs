//! Domain types shared by every stage of a run.

mod cost;
mod evidence;
mod series;
mod task;
mod transcript;
mod vcc;

use thiserror::Error;

pub use cost::{CostLedger, Rates, SharedLedger, Usage};
pub use evidence::{DomainKnowledge, EvidenceReport, EvidenceTag, Modality, TaggedStatement};
pub use series::{TimeSeriesRecord, Timestamp};
pub use task::{validate_instance, Answer, AnswerSpace, TaskInstance, TaskType, TemporalScope};
pub use transcript::{ChartRef, DebateTranscript, RunStatus, ToolCall};
pub use vcc::{
    agreement_of, answers_agree, normalize_weights, weights_consistent, Agreement,
    ApproachStatus, ClaimVerdict, ConflictStatus, DomainConsistency, ReviewerRecord,
    ReviewerScore, Resolution, ScoreTriple, SynthesizerVerdict, TaskTypeJudgment, Verification,
    MAX_CRITERION, MAX_HONESTY, MAX_INFERENCE, MAX_OBSERVATION, NUMERIC_AGREEMENT_RTOL,
    REJECTION_THRESHOLD,
};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{axis} score {value} is outside [0, {max}]")]
    ScoreOutOfRange {
        axis: &'static str,
        value: u32,
        max: u32,
    },
    #[error("stated total {stated} does not equal component sum {computed}")]
    ScoreTotal { stated: u32, computed: u32 },
    #[error("transcript decode error at byte offset {offset} (line {line}, column {column}): {message}")]
    Decode {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
}
