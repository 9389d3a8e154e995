use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn tsdebate(args: &[&str]) -> Out {
    let o = Command::new(env!("CARGO_BIN_EXE_tsdebate"))
        .args(args)
        .env_remove("TSDEBATE_API_KEY")
        .output()
        .expect("spawn tsdebate");
    Out {
        code: o.status.code().expect("exit code"),
        stdout: String::from_utf8_lossy(&o.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn run_mock(out: &Path, extra: &[&str]) -> (Out, PathBuf) {
    let inst = fixture("instance.json");
    let mut args = vec!["--backend", "mock", "--out", s(out)];
    args.extend_from_slice(extra);
    args.extend(["run", s(&inst)]);
    let r = tsdebate(&args);
    (r, out.join("adhoc/tsdebate/run1/cls-trend"))
}

#[test]
fn run_writes_transcript_and_charts() {
    let tmp = tempfile::tempdir().unwrap();
    let (r, dir) = run_mock(tmp.path(), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("final answer: "));
    assert!(r.stdout.contains("agreement: "));
    assert!(r.stdout.contains("cost: $"));
    assert!(dir.join("transcript.json").is_file());
    assert!(dir.join("cls-trend.time.png").is_file());
    assert!(dir.join("cls-trend.freq.png").is_file());
    let t = read_json(&dir.join("transcript.json"));
    assert_eq!(t["status"]["state"], "completed");
}

#[test]
fn http_backend_without_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = fixture("instance.json");
    let r = tsdebate(&["--backend", "http", "--out", s(tmp.path()), "run", s(&inst)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("TSDEBATE_API_KEY"), "{}", r.stderr);
}

#[test]
fn flags_reach_the_transcript_config_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let (r, dir) = run_mock(tmp.path(), &["--rounds", "3", "--reviewers", "2"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let t = read_json(&dir.join("transcript.json"));
    assert_eq!(t["config"]["rounds"], 3);
    assert_eq!(t["config"]["reviewers"], 2);
    assert_eq!(t["rounds"].as_array().unwrap().len(), 3);
    assert_eq!(t["reviewer_records"].as_array().unwrap().len(), 2);
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("tsdebate.toml");
    fs::write(&cfg, "[backend]\nkind = \"mock\"\n\n[debate]\nrounds = 4\nreviewers = 5\n\n[bench]\nruns = 7\n").unwrap();
    let r = tsdebate(&["--config", s(&cfg), "--reviewers", "2", "config"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: toml::Value = toml::from_str(&r.stdout).unwrap();
    assert_eq!(v["backend"]["kind"].as_str(), Some("mock"));
    assert_eq!(v["debate"]["rounds"].as_integer(), Some(4));
    assert_eq!(v["debate"]["reviewers"].as_integer(), Some(2));
    assert_eq!(v["bench"]["runs"].as_integer(), Some(7));
    assert_eq!(v["budgets"]["analyst"].as_integer(), Some(5));
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "[debate]\nrownds = 4\n").unwrap();
    let r = tsdebate(&["--config", s(&cfg), "config"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("rownds"), "{}", r.stderr);
}

#[test]
fn inspect_prints_sections_in_pipeline_order() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, dir) = run_mock(tmp.path(), &[]);
    let path = dir.join("transcript.json");
    let before = fs::read(&path).unwrap();
    let r = tsdebate(&["inspect", s(&path)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let order = [
        "== knowledge ==",
        "== round 1 ==",
        "== round 2 ==",
        "== reviewers ==",
        "== synthesizer ==",
        "FINAL ANSWER:",
        "== tool log ==",
        "== cost ==",
    ];
    let pos: Vec<usize> = order
        .iter()
        .map(|h| r.stdout.find(h).unwrap_or_else(|| panic!("missing {h}:\n{}", r.stdout)))
        .collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]), "{pos:?}");
    assert!(r.stdout.contains("[VERIFIED]") || r.stdout.contains("[UNVERIFIED]") || r.stdout.contains("[CONTRADICTED]"));
    assert_eq!(fs::read(&path).unwrap(), before, "inspect must not modify the transcript");
}

#[test]
fn inspect_claims_only() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, dir) = run_mock(tmp.path(), &[]);
    let r = tsdebate(&["inspect", "--claims-only", s(&dir.join("transcript.json"))]);
    assert_eq!(r.code, 0);
    let lines: Vec<&str> = r.stdout.lines().collect();
    assert!(!lines.is_empty());
    for l in lines {
        assert!(l.starts_with("reviewer ") && l.contains("[DOMAIN: "), "{l}");
    }
}

#[test]
fn failed_run_exits_3_and_inspect_shows_the_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let script = tmp.path().join("script.json");
    fs::write(&script, r#"{"synthesizer": [{"fail": "context length exceeded"}]}"#).unwrap();
    let (r, dir) = run_mock(tmp.path(), &["--script", s(&script)]);
    assert_eq!(r.code, 3, "{}", r.stderr);
    assert!(r.stderr.contains("synthesizer"), "{}", r.stderr);
    let path = dir.join("transcript.json");
    assert!(path.is_file(), "failure transcript must be written");
    let v = tsdebate(&["inspect", s(&path)]);
    assert_eq!(v.code, 0);
    assert!(v.stdout.contains("== reviewers =="));
    assert!(!v.stdout.contains("== synthesizer =="));
    assert!(v.stdout.contains("FAILED at stage synthesizer"), "{}", v.stdout);
}

#[test]
fn corrupt_transcript_reports_offset() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("transcript.json");
    fs::write(&p, "{\"instance_id\": \"x\",\n  \"method\": tsdebate}").unwrap();
    let r = tsdebate(&["inspect", s(&p)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("byte offset 34 (line 2, column 14)"), "{}", r.stderr);
}

#[test]
fn bench_three_runs_reports_rows_and_mean_std() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = fixture("six/manifest.toml");
    let r = tsdebate(&["--backend", "mock", "--out", s(tmp.path()), "--runs", "3", "bench", s(&manifest)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    for row in ["run1 ", "run2 ", "run3 ", "mean±std "] {
        assert!(r.stdout.lines().any(|l| l.starts_with(row)), "missing {row}:\n{}", r.stdout);
    }
    let dir = tmp.path().join("six/tsdebate");
    let report = read_json(&dir.join("report.json"));
    assert_eq!(report["runs"].as_array().unwrap().len(), 3);
    assert!(report["std"].is_object());
    for (k, run) in report["runs"].as_array().unwrap().iter().enumerate() {
        assert_eq!(run["seed"], 2026 + k as u64);
        assert_eq!(run["n"], 6);
    }
    for f in ["report.txt", "cost.json", "cost.txt", "run1/scores.jsonl"] {
        assert!(dir.join(f).is_file(), "{f}");
    }
    assert!(dir.join("run2/mcqa-peak/transcript.json").is_file());
}

#[test]
fn bench_caps_at_available_instances() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = fixture("full41/manifest.toml");
    let r = tsdebate(&[
        "--backend", "mock", "--out", s(tmp.path()), "--runs", "1", "--cap", "100", "--parallel", "4",
        "bench", s(&manifest), "--method", "zero_shot",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report = read_json(&tmp.path().join("emg/zero_shot/report.json"));
    assert_eq!(report["runs"][0]["n"], 41);
}

#[test]
fn cot_mm_runs_comparator_with_charts() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = fixture("instance.json");
    let r = tsdebate(&[
        "--backend", "mock", "--out", s(tmp.path()), "--capture", "run", "--method", "cot_mm", s(&inst),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let dir = tmp.path().join("adhoc/cot_mm/run1/cls-trend");
    let t = read_json(&dir.join("transcript.json"));
    assert_eq!(t["method"], "cot_mm");
    assert_eq!(t["charts"].as_array().unwrap().len(), 2);
    assert!(t["rounds"].as_array().unwrap().is_empty());
    let req = fs::read_to_string(dir.join("captures/comparator.cot_mm.t0.request.json")).unwrap();
    assert_eq!(req.matches("data:image/png;base64,").count(), 2);
}

#[test]
fn invalid_instance_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("bad.json");
    fs::write(&p, r#"{"id": "x", "query": "q", "task_type": "classification"}"#).unwrap();
    let r = tsdebate(&["--backend", "mock", "--out", s(tmp.path()), "run", s(&p)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("field"), "{}", r.stderr);
}
