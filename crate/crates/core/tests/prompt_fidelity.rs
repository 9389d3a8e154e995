mod common;

use std::collections::BTreeMap;
use std::path::PathBuf;

use common::*;
use tsdebate_core::gateway::ScriptedBackend;
use tsdebate_core::model::{EvidenceReport, Modality};
use tsdebate_core::prompts::{self, PromptLibrary};

fn fixture(id: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/prompts").join(format!("{id}.txt"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Lines of a template that contain no placeholder.
fn static_lines(id: &str) -> Vec<String> {
    fixture(id)
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.contains('{'))
        .map(str::to_string)
        .collect()
}

fn assert_contains_all(rendered: &str, ids: &[&str]) {
    for id in ids {
        for line in static_lines(id) {
            assert!(rendered.contains(&line), "{id}: line missing from rendered prompt:\n{line}");
        }
    }
}

#[test]
fn builtin_templates_match_fixtures() {
    let lib = PromptLibrary::builtin();
    let ids: Vec<&str> = lib.ids().collect();
    assert_eq!(ids.len(), 18);
    for id in ids {
        assert_eq!(lib.get(id).unwrap(), fixture(id), "{id} drifted");
    }
}

fn round_one() -> BTreeMap<Modality, EvidenceReport> {
    let t = orchestrator(ScriptedBackend::default()).run_instance(&classification(), None).transcript;
    t.rounds[0].clone()
}

#[test]
fn every_role_renders_its_templates_verbatim() {
    let lib = PromptLibrary::builtin();
    let inst = classification();

    let p = lib.render_elicitation(&inst.query, inst.context_text()).unwrap();
    assert_contains_all(&format!("{}\n{}", p.system, p.user), &["elicitor_system", "elicitation"]);
    assert!(p.user.contains(inst.context.as_deref().unwrap()));

    for m in Modality::ALL {
        let task = prompts::analyst_task(&inst, m);
        let p = lib.render_analyst(m, 1, &task, "priors", None, 5).unwrap();
        let all = format!("{}\n{}", p.system, p.user);
        let profile = format!("analyst_system.{m}");
        assert_contains_all(&all, &[&profile, "temporal_basics", "evidence_rules", "knowledge_inclusion", "analyst_round1"]);
        assert!(p.user.contains(m.as_str()));
    }

    let prior = round_one();
    let task = prompts::analyst_task(&inst, Modality::Text);
    let p = lib.render_analyst(Modality::Text, 2, &task, "priors", Some(&prior), 5).unwrap();
    assert_contains_all(&p.user, &["analyst_roundN"]);

    let task = prompts::judge_task(&inst, "CALIBRATED ANSWER");
    let p = lib.render_reviewer(&task, "priors", &prior, 1, 3).unwrap();
    assert_contains_all(
        &format!("{}\n{}", p.system, p.user),
        &["reviewer_system", "temporal_vcc", "scoring_rubric", "review_protocol", "reviewer_turn"],
    );
}

#[test]
fn synthesizer_prompt_embeds_every_reviewer() {
    let t = orchestrator(ScriptedBackend::default()).run_instance(&classification(), None).transcript;
    let records: Vec<_> = t.reviewer_records.iter().collect();
    let lib = PromptLibrary::builtin();
    let task = prompts::judge_task(&classification(), "FINAL ANSWER");
    let p = lib.render_synthesizer(&task, "priors", &records, 3).unwrap();
    assert_contains_all(
        &format!("{}\n{}", p.system, p.user),
        &["synthesizer_system", "temporal_vcc", "decision_protocol", "synthesizer_turn"],
    );
    for r in &records {
        assert!(p.user.contains(r.raw_text.trim()));
    }
}

#[test]
fn elicitation_without_context_has_no_context_block() {
    let p = PromptLibrary::builtin().render_elicitation("Which way?", None).unwrap();
    assert!(!p.user.contains("CONTEXT:"));
}

#[test]
fn stated_call_limits_follow_the_budget() {
    let lib = PromptLibrary::builtin();
    let inst = classification();
    let task = prompts::analyst_task(&inst, Modality::Numerical);
    let p = lib.render_analyst(Modality::Numerical, 1, &task, "", None, 5).unwrap();
    assert!(p.system.contains("MAX 5 CALLS TOTAL"));
    let p = lib.render_analyst(Modality::Numerical, 1, &task, "", None, 4).unwrap();
    assert!(p.system.contains("MAX 4 CALLS TOTAL"));
    assert!(!p.system.contains("MAX 5 CALLS TOTAL"));

    let prior = round_one();
    let task = prompts::judge_task(&inst, "CALIBRATED ANSWER");
    let p = lib.render_reviewer(&task, "", &prior, 1, 3).unwrap();
    assert!(p.system.contains("MAX 3 CALLS TOTAL"));
}

#[test]
fn reviewer_task_embeds_a_bounded_data_summary() {
    let mut inst = classification();
    inst.series = tsdebate_core::model::TimeSeriesRecord::multivariate(
        "wide",
        (0..40).map(|c| wave(64, 8.0 + c as f64, 0.01)).collect(),
    );
    let summary = prompts::embedded_summary(&inst);
    assert!(summary.chars().count() <= prompts::EMBEDDED_SUMMARY_CHARS);
    assert!(prompts::judge_task(&inst, "CALIBRATED ANSWER").contains(&summary));
}
