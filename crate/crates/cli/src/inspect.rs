//! Human-readable view of a stored transcript.

use std::fmt::Write;

use tsdebate_core::model::{
    ClaimVerdict, DebateTranscript, DomainConsistency, EvidenceReport, Modality, RunStatus,
    Verification,
};

fn claim_line(reviewer: usize, v: &ClaimVerdict) -> String {
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
    format!("reviewer {reviewer}: [{ver}] [DOMAIN: {dom}] {} - {}", v.claim_text, v.explanation)
}

pub fn claims(t: &DebateTranscript) -> String {
    let mut out = String::new();
    for r in &t.reviewer_records {
        for v in &r.verdicts {
            out.push_str(&claim_line(r.reviewer_id, v));
            out.push('\n');
        }
    }
    out
}

fn evidence(out: &mut String, e: &EvidenceReport) {
    let _ = writeln!(out, "  [{}]{}", e.modality, if e.usable { "" } else { " (unusable)" });
    if !e.understanding.is_empty() {
        let _ = writeln!(out, "    understanding: {}", e.understanding);
    }
    if let Some(o) = &e.other_perspectives {
        let _ = writeln!(out, "    other perspectives: {o}");
    }
    for s in &e.observations {
        let _ = writeln!(out, "    obs: {}", s.text);
    }
    for s in &e.inferences {
        let _ = writeln!(out, "    inf: {}", s.text);
    }
    if !e.limits.is_empty() {
        let _ = writeln!(out, "    limits: {}", e.limits);
    }
    for f in &e.flags {
        let _ = writeln!(out, "    flag: {f}");
    }
}

/// Every stage in pipeline order; stages a failed run never reached are
/// omitted and the failure is printed last.
pub fn render(t: &DebateTranscript) -> String {
    let mut out = format!("instance {}  method {}\n", t.instance_id, t.method);
    if let Some(k) = &t.knowledge {
        out.push_str("\n== knowledge ==\n");
        for (name, body) in [
            ("domain", &k.domain),
            ("knowledge", &k.knowledge),
            ("key signals", &k.key_signals),
            ("approach", &k.suggested_approach),
            ("pitfalls", &k.pitfalls),
            ("modality guidance", &k.modality_guidance),
        ] {
            if !body.is_empty() {
                let _ = writeln!(out, "{name}: {body}");
            }
        }
        for f in &k.flags {
            let _ = writeln!(out, "flag: {f}");
        }
    }
    for (i, round) in t.rounds.iter().enumerate() {
        let _ = writeln!(out, "\n== round {} ==", i + 1);
        for m in Modality::ALL {
            if let Some(e) = round.get(&m) {
                evidence(&mut out, e);
            }
        }
    }
    if !t.reviewer_records.is_empty() {
        out.push_str("\n== reviewers ==\n");
    }
    for r in &t.reviewer_records {
        let _ = writeln!(
            out,
            "reviewer {}{}: answer {}",
            r.reviewer_id,
            if r.usable { "" } else { " (unusable)" },
            r.calibrated_answer
        );
        for (m, s) in &r.scores {
            let w = r.weights.get(m).copied().unwrap_or(0.0);
            let _ = writeln!(out, "  {m}: score {} weight {w:.3}", s.total());
        }
        for v in &r.verdicts {
            let _ = writeln!(out, "  {}", claim_line(r.reviewer_id, v));
        }
        let _ = writeln!(out, "  conflict: {:?}", r.conflict);
        for f in &r.flags {
            let _ = writeln!(out, "  flag: {f}");
        }
    }
    if let Some(v) = &t.synthesizer {
        out.push_str("\n== synthesizer ==\n");
        let _ = writeln!(out, "approach: {:?}", v.approach_status);
        for (id, s) in &v.reviewer_scores {
            let _ = writeln!(out, "reviewer {id} score {}", s.total());
        }
        let _ = writeln!(out, "agreement: {:?}  resolution: {:?}", v.agreement, v.resolution);
        for f in &v.flags {
            let _ = writeln!(out, "flag: {f}");
        }
    }
    if let Some(a) = &t.final_answer {
        let _ = writeln!(out, "\nFINAL ANSWER: {a}");
    } else if let Some(raw) = &t.final_answer_raw {
        let _ = writeln!(out, "\nFINAL ANSWER (unmapped): {raw}");
    }
    if !t.tool_log.is_empty() {
        out.push_str("\n== tool log ==\n");
        for c in &t.tool_log {
            let result: String = c.result.chars().take(80).collect();
            let _ = writeln!(
                out,
                "{} #{} {}({}){} -> {}",
                c.agent,
                c.sequence,
                c.tool,
                c.arguments,
                if c.executed { "" } else { " [refused]" },
                result.replace('\n', " ")
            );
        }
    }
    let _ = writeln!(
        out,
        "\n== cost ==\ninput {} output {} tokens, ${:.4}, {:.1}s",
        t.cost.input_tokens, t.cost.output_tokens, t.cost.estimated_cost, t.cost.wall_time_s
    );
    for f in &t.flags {
        let _ = writeln!(out, "flag: {f}");
    }
    if let RunStatus::Failed { stage, error } = &t.status {
        let _ = writeln!(out, "\nFAILED at stage {stage}: {error}");
    }
    out
}
