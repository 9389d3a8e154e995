//! Canonical template renderings of parsed records.

use std::fmt::Write;

use crate::model::{
    Agreement, ApproachStatus, ConflictStatus, DomainConsistency, EvidenceReport, EvidenceTag,
    Modality, Resolution, ReviewerRecord, ReviewerScore, SynthesizerVerdict, TaskTypeJudgment,
    Verification,
};

fn tag(t: EvidenceTag) -> &'static str {
    match t {
        EvidenceTag::Observation => "[OBSERVATION]",
        EvidenceTag::Inference => "[INFERENCE]",
    }
}

fn task_type(t: Option<TaskTypeJudgment>) -> &'static str {
    match t {
        Some(TaskTypeJudgment::Future) => "FUTURE",
        Some(TaskTypeJudgment::PastPresent) => "PAST-PRESENT",
        None => "",
    }
}

pub fn render_evidence(e: &EvidenceReport) -> String {
    let mut out = format!("UNDERSTANDING: {}\n\n", e.understanding);
    if let Some(o) = &e.other_perspectives {
        let _ = write!(out, "OTHER PERSPECTIVES: {o}\n\n");
    }
    out.push_str("USEFUL OBSERVATIONS:\n");
    for (i, s) in e.observations.iter().enumerate() {
        let _ = writeln!(out, "{}. {} {}", i + 1, s.text, tag(s.tag));
    }
    out.push_str("\nINFERENCES:\n");
    for (i, s) in e.inferences.iter().enumerate() {
        let _ = writeln!(out, "{}. {} {}", i + 1, s.text, tag(s.tag));
    }
    let _ = writeln!(out, "\nLIMITS: {}", e.limits);
    out
}

pub fn render_reviewer(r: &ReviewerRecord) -> String {
    let mut out = format!(
        "TASK: {}\nTASK TYPE: {}\n\nSCORES:\n",
        r.task_restatement,
        task_type(r.task_type_judgment)
    );
    for m in Modality::ALL {
        if let Some(s) = r.scores.get(&m) {
            let _ = writeln!(
                out,
                "- {m}: (Observation: {}/30, Inference: {}/50, Honesty: {}/20) = {}",
                s.observation(),
                s.inference(),
                s.honesty(),
                s.total()
            );
        }
    }
    out.push_str("\nWEIGHTS:\n");
    for (m, w) in &r.weights {
        let _ = writeln!(out, "- {m}: {}%", w * 100.0);
    }
    out.push_str("\nVERIFICATION:\n");
    for v in &r.verdicts {
        let ver = match v.verification {
            Verification::Verified => "VERIFIED",
            Verification::Unverified => "UNVERIFIED",
            Verification::Contradicted => "CONTRADICTED",
        };
        let dom = match v.domain_consistency {
            DomainConsistency::Matches => "MATCHES",
            DomainConsistency::Violates => "VIOLATES",
            DomainConsistency::Na => "N-A",
        };
        let _ = writeln!(out, "- {}: {ver} + DOMAIN: {dom} - {}", v.claim_text, v.explanation);
    }
    let conflict = match r.conflict {
        ConflictStatus::NoConflict => "NO_CONFLICT",
        ConflictStatus::Detected => "DETECTED",
        ConflictStatus::Resolved => "RESOLVED",
    };
    let _ = write!(
        out,
        "\nOUTSTANDING CONFLICTS: {conflict}\nKEY EVIDENCE: {}\nCALIBRATED ANSWER: {}\n",
        r.key_evidence, r.calibrated_answer
    );
    out
}

pub fn render_synthesizer(v: &SynthesizerVerdict) -> String {
    let status = match v.approach_status {
        ApproachStatus::Correct => "CORRECT",
        ApproachStatus::Mismatch => "MISMATCH",
    };
    let mut out = format!(
        "TASK: {}\nTASK TYPE: {}\n\nAPPROACH CHECK:\n- Status: {status}\n\nREVIEWER SCORES:\n",
        v.task_restatement,
        task_type(v.task_type_judgment)
    );
    for (id, s) in &v.reviewer_scores {
        let parts: Vec<String> = ReviewerScore::CRITERIA
            .iter()
            .zip(s.criteria())
            .map(|(n, c)| format!("{n}: {c}/20"))
            .collect();
        let _ = writeln!(out, "- Reviewer {id}: ({}) = {}", parts.join(", "), s.total());
    }
    let agreement = match v.agreement {
        Agreement::Unanimous => "UNANIMOUS",
        Agreement::Split => "SPLIT",
        Agreement::AllDifferent => "ALL_DIFFERENT",
    };
    let resolution = match v.resolution {
        Resolution::VerifiedResolution => "VERIFIED_RESOLUTION",
        Resolution::Unresolved => "UNRESOLVED",
        Resolution::NoConflict => "NO_CONFLICT",
        Resolution::ApproachError => "APPROACH_ERROR",
    };
    let _ = write!(
        out,
        "\nCONFLICT STATUS:\n- Reviewer Agreement: {agreement}\n- Resolution: {resolution}\n\nFINAL ANSWER: {}\n",
        v.final_answer
    );
    out
}
