use serde::{Deserialize, Serialize};

/// The three evidence channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Modality {
    Text,
    Visual,
    Numerical,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Text, Modality::Visual, Modality::Numerical];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Text => "TEXT",
            Modality::Visual => "VISUAL",
            Modality::Numerical => "NUMERICAL",
        }
    }

    pub fn parse(token: &str) -> Option<Self> {
        match token.trim().to_ascii_uppercase().as_str() {
            "TEXT" => Some(Modality::Text),
            "VISUAL" => Some(Modality::Visual),
            "NUMERICAL" => Some(Modality::Numerical),
            _ => None,
        }
    }
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EvidenceTag {
    Observation,
    Inference,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedStatement {
    pub text: String,
    pub tag: EvidenceTag,
    /// The agent omitted the bracket tag and it was inferred from the section.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub tag_inferred: bool,
}

/// One analyst's structured output for one debate round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceReport {
    pub modality: Modality,
    pub round: u32,
    pub understanding: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub other_perspectives: Option<String>,
    pub observations: Vec<TaggedStatement>,
    pub inferences: Vec<TaggedStatement>,
    pub limits: String,
    /// Material that does not belong in evidence (e.g. a final answer the
    /// analyst was told not to give).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overflow: Vec<String>,
    pub raw_text: String,
    pub usable: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl EvidenceReport {
    /// Slot filler for an analyst whose output could not be parsed.
    pub fn unusable(modality: Modality, round: u32, raw: &str, reason: &str) -> Self {
        let raw_text = if raw.trim().is_empty() {
            "(no output)".to_string()
        } else {
            raw.to_string()
        };
        Self {
            modality,
            round,
            understanding: String::new(),
            other_perspectives: None,
            observations: Vec::new(),
            inferences: Vec::new(),
            limits: String::new(),
            overflow: Vec::new(),
            raw_text,
            usable: false,
            flags: vec![format!("unusable: {reason}")],
        }
    }
}

/// Elicited domain priors shared by every agent.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DomainKnowledge {
    pub domain: String,
    pub knowledge: String,
    pub key_signals: String,
    pub suggested_approach: String,
    pub pitfalls: String,
    pub modality_guidance: String,
    pub raw_text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}
