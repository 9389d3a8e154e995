mod common;

use common::*;
use serde_json::json;
use tsdebate_core::gateway::{capture_path, ChatRequest, ScriptStep, ScriptedBackend};
use tsdebate_core::model::{Agreement, Answer, Modality, Resolution, RunStatus};
use tsdebate_core::orchestrator::RunConfig;
use tsdebate_core::prompts::ComparatorMode;
use tsdebate_core::tools::LOOKUP_TOOLS;

#[test]
fn full_pipeline_has_complete_structure() {
    let orch = orchestrator(ScriptedBackend::default());
    for inst in [classification(), forecasting(), mcqa()] {
        let out = orch.run_instance(&inst, None);
        let t = &out.transcript;
        assert_eq!(t.status, RunStatus::Completed, "{}: {:?}", inst.id, t.status);
        assert!(t.knowledge.is_some());
        assert_eq!(t.rounds.len(), 2);
        assert!(t.rounds.iter().all(|r| r.len() == 3));
        assert_eq!(t.reviewer_records.len(), 3);
        assert!(t.synthesizer.is_some());
        let answer = t.final_answer.as_ref().expect("final answer");
        assert!(answer.matches_space(&inst.answer_space));
        assert_eq!(t.charts.len(), 2);
        for r in &t.reviewer_records {
            let sum: f64 = r.weights.values().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
        assert!(t.cost.input_tokens > 0);
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = orchestrator(ScriptedBackend::default()).run_instance(&classification(), None);
    let b = orchestrator(ScriptedBackend::default()).run_instance(&classification(), None);
    assert_eq!(a.transcript.to_json(), b.transcript.to_json());
    assert_eq!(a.transcript.cost.wall_time_s, 0.0);
}

#[test]
fn config_overrides_shape_the_transcript() {
    let cfg = RunConfig {
        rounds: 3,
        reviewers: 2,
        ..config()
    };
    let t = orchestrator_with(ScriptedBackend::default(), cfg).run_instance(&mcqa(), None).transcript;
    assert!(t.is_completed());
    assert_eq!(t.rounds.len(), 3);
    assert_eq!(t.reviewer_records.len(), 2);
    assert_eq!(t.config.rounds, 3);
    assert_eq!(t.config.reviewers, 2);
}

fn captured(dir: &std::path::Path, agent: &str) -> ChatRequest {
    let path = capture_path(dir, agent, 0, "request");
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&text).expect("capture decodes")
}

#[test]
fn round_one_requests_are_modality_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let t = orchestrator(ScriptedBackend::default())
        .run_instance(&classification(), Some(dir.path()))
        .transcript;
    assert!(t.is_completed());

    let text = captured(dir.path(), "analyst.TEXT.r1");
    assert_eq!(text.image_count(), 0);
    assert!(text.tools.is_empty());

    let visual = captured(dir.path(), "analyst.VISUAL.r1");
    assert_eq!(visual.image_count(), 2);
    assert!(visual.tools.is_empty());

    let numerical = captured(dir.path(), "analyst.NUMERICAL.r1");
    assert_eq!(numerical.image_count(), 0);
    let names: Vec<&str> = numerical.tools.iter().map(|t| t.name.as_str()).collect();
    assert_eq!(names, LOOKUP_TOOLS.to_vec());

    // Round 2 sees every round-1 report.
    let r2 = captured(dir.path(), "analyst.VISUAL.r2");
    let user = r2.messages[1].joined_text();
    for m in Modality::ALL {
        let report = &t.rounds[0][&m];
        assert!(user.contains(report.understanding.as_str()), "{m} missing from round 2");
    }
}

#[test]
fn comparator_and_debate_share_chart_bytes() {
    let inst = classification();
    let orch = orchestrator(ScriptedBackend::default());
    let debate = orch.run_instance(&inst, None);
    let cmp = orch.run_comparator(&inst, ComparatorMode::Cot, true, None);
    assert_eq!(debate.charts.len(), 2);
    assert_eq!(cmp.charts.len(), 2);
    for (a, b) in debate.charts.iter().zip(&cmp.charts) {
        assert_eq!(a.png, b.png);
    }
    assert_eq!(cmp.transcript.method, "cot_mm");
    assert!(cmp.transcript.final_answer.is_some());
}

#[test]
fn comparator_attaches_images_only_when_multimodal() {
    let dir = tempfile::tempdir().unwrap();
    let orch = orchestrator(ScriptedBackend::default());
    let inst = classification();
    orch.run_comparator(&inst, ComparatorMode::ZeroShot, false, Some(dir.path()));
    orch.run_comparator(&inst, ComparatorMode::Cot, true, Some(dir.path()));
    assert_eq!(captured(dir.path(), "comparator.zero_shot").image_count(), 0);
    assert_eq!(captured(dir.path(), "comparator.cot_mm").image_count(), 2);
}

#[test]
fn unmapped_comparator_answer_is_flagged() {
    let backend = ScriptedBackend::new(scripts(&[("comparator.*", vec![reply("FINAL ANSWER: sideways")])]));
    let t = orchestrator(backend)
        .run_comparator(&classification(), ComparatorMode::ZeroShot, false, None)
        .transcript;
    assert!(t.final_answer.is_none());
    assert!(!t.flags.is_empty());
}

fn spam(name: &str, args: serde_json::Value, n: usize) -> Vec<ScriptStep> {
    (0..n).map(|_| tool(name, args.clone())).collect()
}

#[test]
fn budgets_cap_executed_calls_per_turn() {
    let backend = ScriptedBackend::new(scripts(&[
        ("analyst.NUMERICAL.*", spam("get_info", json!({}), 10)),
        ("reviewer.*", spam("execute_code", json!({"code": "mean(series(0))"}), 10)),
        ("synthesizer", spam("get_info", json!({}), 10)),
    ]));
    let t = orchestrator(backend).run_instance(&classification(), None).transcript;
    assert!(t.is_completed(), "{:?}", t.status);
    assert!(t.final_answer.is_some());

    let executed = |agent: &str| t.tool_log.iter().filter(|c| c.agent == agent && c.executed).count();
    let refused = |agent: &str| t.tool_log.iter().filter(|c| c.agent == agent && !c.executed).count();
    assert_eq!(executed("analyst.NUMERICAL.r1"), 5);
    assert_eq!(executed("analyst.NUMERICAL.r2"), 5);
    assert!(refused("analyst.NUMERICAL.r1") >= 1);
    for j in 0..3 {
        assert_eq!(executed(&format!("reviewer.{j}")), 3);
        assert!(refused(&format!("reviewer.{j}")) >= 1);
    }
    assert_eq!(executed("synthesizer"), 3);
    assert!(refused("synthesizer") >= 1);
    let refusal = t.tool_log.iter().find(|c| !c.executed).unwrap();
    assert!(refusal.result.to_lowercase().contains("budget"), "{}", refusal.result);
}

#[test]
fn reviewer_stage_failure_keeps_completed_stages() {
    let fail = ScriptStep::Fail {
        fail: "injected".into(),
    };
    let backend = ScriptedBackend::new(scripts(&[("reviewer.*", vec![fail])]));
    let t = orchestrator(backend).run_instance(&classification(), None).transcript;
    match &t.status {
        RunStatus::Failed { stage, error } => {
            assert_eq!(stage, "reviewers");
            assert!(error.contains("no usable reviewers"), "{error}");
        }
        s => panic!("expected failure, got {s:?}"),
    }
    assert!(t.knowledge.is_some());
    assert_eq!(t.rounds.len(), 2);
    assert_eq!(t.reviewer_records.len(), 3);
    assert!(t.reviewer_records.iter().all(|r| !r.usable));
    assert!(t.synthesizer.is_none());
    let back = tsdebate_core::model::DebateTranscript::from_json(&t.to_json()).unwrap();
    assert_eq!(back, t);
}

#[test]
fn elicitation_failure_aborts_run() {
    let backend = ScriptedBackend::new(scripts(&[("elicitor", vec![ScriptStep::Fail { fail: "down".into() }])]));
    let t = orchestrator(backend).run_instance(&classification(), None).transcript;
    assert!(matches!(&t.status, RunStatus::Failed { stage, .. } if stage == "elicit"));
    assert!(t.rounds.is_empty());
}

#[test]
fn one_failed_analyst_degrades_to_placeholder() {
    let backend = ScriptedBackend::new(scripts(&[("analyst.TEXT.r1", vec![ScriptStep::Fail { fail: "x".into() }])]));
    let t = orchestrator(backend).run_instance(&classification(), None).transcript;
    assert!(t.is_completed());
    let text = &t.rounds[0][&Modality::Text];
    assert!(!text.usable);
    assert!(t.rounds[1][&Modality::Text].usable);
}

#[test]
fn malformed_analyst_reply_gets_one_repair_turn() {
    let backend = ScriptedBackend::new(scripts(&[("analyst.TEXT.r1", vec![reply("I think it goes up.")])]));
    let dir = tempfile::tempdir().unwrap();
    let t = orchestrator(backend)
        .run_instance(&classification(), Some(dir.path()))
        .transcript;
    assert!(t.is_completed());
    assert!(t.rounds[0][&Modality::Text].usable);
    let repair = std::fs::read_to_string(capture_path(dir.path(), "analyst.TEXT.r1", 1, "request")).unwrap();
    assert!(repair.contains("I think it goes up."));
}

fn review(answer: &str) -> String {
    format!(
        "TASK: compare peaks\nTASK TYPE: PAST-PRESENT\n\nSCORES:\n\
- TEXT: (Observation: 20/30, Inference: 30/50, Honesty: 15/20) = 65\n\
- VISUAL: (Observation: 20/30, Inference: 30/50, Honesty: 15/20) = 65\n\
- NUMERICAL: (Observation: 20/30, Inference: 30/50, Honesty: 15/20) = 65\n\n\
WEIGHTS:\n- TEXT: 33.3%\n- VISUAL: 33.3%\n- NUMERICAL: 33.3%\n\n\
VERIFICATION:\n- ch1 peaks higher: VERIFIED + DOMAIN: N-A - max checked\n\n\
OUTSTANDING CONFLICTS: NO_CONFLICT\nKEY EVIDENCE: max values\nCALIBRATED ANSWER: {answer}\n"
    )
}

fn verdict(status: &str, agreement: &str, resolution: &str, answer: &str) -> String {
    format!(
        "TASK: compare peaks\nTASK TYPE: PAST-PRESENT\n\nAPPROACH CHECK:\n- Status: {status}\n\n\
REVIEWER SCORES:\n\
- Reviewer 0: (Evidence: 16/20, Verification: 16/20, Consistency: 16/20, Calibration: 16/20, Reasoning: 16/20) = 80\n\
- Reviewer 1: (Evidence: 16/20, Verification: 16/20, Consistency: 16/20, Calibration: 16/20, Reasoning: 16/20) = 80\n\
- Reviewer 2: (Evidence: 16/20, Verification: 16/20, Consistency: 16/20, Calibration: 16/20, Reasoning: 16/20) = 80\n\n\
CONFLICT STATUS:\n- Reviewer Agreement: {agreement}\n- Resolution: {resolution}\n\nFINAL ANSWER: {answer}\n"
    )
}

fn with_reviews(answers: [&str; 3], synth: Option<String>) -> ScriptedBackend {
    let mut s = scripts(&[
        ("reviewer.0", vec![reply(&review(answers[0]))]),
        ("reviewer.1", vec![reply(&review(answers[1]))]),
        ("reviewer.2", vec![reply(&review(answers[2]))]),
    ]);
    if let Some(v) = synth {
        s.insert(
            "synthesizer".into(),
            vec![tool("get_channel_values", json!({"channel": 1})), reply(&v)],
        );
    }
    ScriptedBackend::new(s)
}

#[test]
fn unanimous_reviewers_yield_shared_answer() {
    let t = orchestrator(with_reviews(["B", "B", "B"], None)).run_instance(&mcqa(), None).transcript;
    assert!(t.is_completed(), "{:?}", t.status);
    let v = t.synthesizer.as_ref().unwrap();
    assert_eq!(v.agreement, Agreement::Unanimous);
    assert_eq!(t.final_answer, Some(Answer::Option("B".into())));
}

#[test]
fn split_resolved_by_verification() {
    let synth = verdict("CORRECT", "SPLIT", "VERIFIED_RESOLUTION", "B");
    let t = orchestrator(with_reviews(["A", "B", "B"], Some(synth)))
        .run_instance(&mcqa(), None)
        .transcript;
    assert!(t.is_completed(), "{:?}", t.status);
    let v = t.synthesizer.as_ref().unwrap();
    assert_eq!(v.agreement, Agreement::Split);
    assert_eq!(v.resolution, Resolution::VerifiedResolution);
    assert!(t.tool_log.iter().any(|c| c.agent == "synthesizer" && c.executed));
}

#[test]
fn approach_error_overrides_all_reviewers() {
    let synth = verdict("MISMATCH", "UNANIMOUS", "APPROACH_ERROR", "B");
    let t = orchestrator(with_reviews(["A", "A", "A"], Some(synth)))
        .run_instance(&mcqa(), None)
        .transcript;
    assert!(t.is_completed(), "{:?}", t.status);
    let v = t.synthesizer.as_ref().unwrap();
    assert_eq!(v.resolution, Resolution::ApproachError);
    let fin = t.final_answer.as_ref().unwrap();
    assert!(t.reviewer_records.iter().all(|r| &r.calibrated_answer != fin));
    assert_eq!(fin, &Answer::Option("B".into()));
}

#[test]
fn verified_claims_on_future_tasks_are_flagged() {
    let review = "TASK: forecast\nTASK TYPE: FUTURE\n\nSCORES:\n- TEXT: (Observation: 20/30, Inference: 30/50, Honesty: 15/20) = 65\n- VISUAL: (Observation: 20/30, Inference: 30/50, Honesty: 15/20) = 65\n- NUMERICAL: (Observation: 20/30, Inference: 30/50, Honesty: 15/20) = 65\n\nWEIGHTS:\n- TEXT: 33.3%\n- VISUAL: 33.3%\n- NUMERICAL: 33.3%\n\nVERIFICATION:\n- the series keeps oscillating: VERIFIED + DOMAIN: MATCHES - checked\n\nOUTSTANDING CONFLICTS: NO_CONFLICT\nKEY EVIDENCE: period 12\nCALIBRATED ANSWER: [10, 11, 12]\n";
    let backend = ScriptedBackend::new(scripts(&[("reviewer.0", vec![reply(review)])]));
    let t = orchestrator(backend).run_instance(&forecasting(), None).transcript;
    assert!(t.is_completed(), "{:?}", t.status);
    let r0 = &t.reviewer_records[0];
    assert!(r0.flags.iter().any(|f| f.contains("temporal-verification violation")), "{:?}", r0.flags);
}
