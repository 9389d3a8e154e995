use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::cost::{cost_report, render_cost_table, CostRow};
use super::metrics::{aggregate, run_metrics, score_instance, InstanceScore, MetricReport};
use super::sample::sample;
use super::scorer::OpenQaScorer;
use super::{DatasetManifest, EvalError};
use crate::model::{DebateTranscript, TaskInstance};
use crate::orchestrator::{InstanceOutcome, Orchestrator};
use crate::prompts::ComparatorMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    TsDebate,
    ZeroShot,
    Cot,
    ZeroShotMm,
    CotMm,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::TsDebate,
        Method::ZeroShot,
        Method::Cot,
        Method::ZeroShotMm,
        Method::CotMm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::TsDebate => "tsdebate",
            Method::ZeroShot => "zero_shot",
            Method::Cot => "cot",
            Method::ZeroShotMm => "zero_shot_mm",
            Method::CotMm => "cot_mm",
        }
    }

    pub fn run(self, orch: &Orchestrator, instance: &TaskInstance, capture_dir: Option<&Path>) -> InstanceOutcome {
        let (mode, mm) = match self {
            Method::TsDebate => return orch.run_instance(instance, capture_dir),
            Method::ZeroShot => (ComparatorMode::ZeroShot, false),
            Method::Cot => (ComparatorMode::Cot, false),
            Method::ZeroShotMm => (ComparatorMode::ZeroShot, true),
            Method::CotMm => (ComparatorMode::Cot, true),
        };
        orch.run_comparator(instance, mode, mm, capture_dir)
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Method::ALL.iter().map(|m| m.as_str()).collect();
                format!("unknown method `{s}` (expected one of {})", names.join(", "))
            })
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub method: Method,
    pub runs: u32,
    pub cap: usize,
    pub parallel: usize,
    /// Root of the `<dataset>/<method>/run<id>/<instance_id>/` tree.
    pub out_dir: PathBuf,
    pub capture: bool,
}

#[derive(Debug)]
pub struct BenchOutcome {
    pub report: MetricReport,
    pub costs: Vec<CostRow>,
    /// `<out>/<dataset>/<method>`.
    pub method_dir: PathBuf,
    pub transcripts: Vec<PathBuf>,
}

/// File-system safe form of an id.
pub fn safe_name(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), EvalError> {
    let io = |e: std::io::Error| EvalError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, bytes).map_err(io)
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Writes the transcript and chart files for one instance; returns the
/// transcript path.
pub fn write_outcome(dir: &Path, outcome: &InstanceOutcome) -> Result<PathBuf, EvalError> {
    let t = &outcome.transcript;
    let path = dir.join("transcript.json");
    write(&path, t.to_json())?;
    for c in &outcome.charts {
        write(&dir.join(c.file_name(&t.instance_id)), &c.png)?;
    }
    Ok(path)
}

/// Samples, runs and scores `runs` times, then writes per-run scores and
/// the aggregated report and cost table under the method directory.
pub fn run_bench(
    orch: &Orchestrator,
    manifest: &DatasetManifest,
    instances: &[TaskInstance],
    opts: &BenchOptions,
    scorer: Option<&dyn OpenQaScorer>,
) -> Result<BenchOutcome, EvalError> {
    if opts.runs == 0 {
        return Err(EvalError::Invalid("runs must be >= 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.parallel.max(1))
        .build()
        .map_err(|e| EvalError::Invalid(e.to_string()))?;
    let method_dir = opts
        .out_dir
        .join(safe_name(&manifest.name))
        .join(opts.method.as_str());

    let mut per_run = Vec::new();
    let mut transcripts: Vec<DebateTranscript> = Vec::new();
    let mut paths = Vec::new();
    for run_id in 1..=opts.runs {
        let s = sample(instances, run_id, opts.cap, &manifest.strata_keys)?;
        let run_dir = method_dir.join(format!("run{run_id}"));
        let results: Vec<Result<(InstanceScore, DebateTranscript, PathBuf), EvalError>> = pool.install(|| {
            s.instances
                .par_iter()
                .map(|inst| {
                    let dir = run_dir.join(safe_name(&inst.id));
                    let captures = opts.capture.then(|| dir.join("captures"));
                    let outcome = opts.method.run(orch, inst, captures.as_deref());
                    let path = write_outcome(&dir, &outcome)?;
                    let t = outcome.transcript;
                    let mut score = score_instance(inst, t.final_answer.as_ref(), scorer);
                    score.run_failed = !t.is_completed();
                    Ok((score, t, path))
                })
                .collect()
        });
        let mut scores = Vec::new();
        let mut run_ts = Vec::new();
        for r in results {
            let (score, t, path) = r?;
            scores.push(score);
            run_ts.push(t);
            paths.push(path);
        }
        let mut m = run_metrics(run_id, s.seed, &scores);
        m.input_tokens = run_ts.iter().map(|t| t.cost.input_tokens).sum();
        m.output_tokens = run_ts.iter().map(|t| t.cost.output_tokens).sum();
        m.cost_usd = run_ts.iter().map(|t| t.cost.estimated_cost).sum();
        let lines: String = scores
            .iter()
            .map(|s| serde_json::to_string(s).expect("score") + "\n")
            .collect();
        write(&run_dir.join("scores.jsonl"), lines)?;
        per_run.push(m);
        transcripts.extend(run_ts);
    }

    let report = aggregate(&manifest.name, opts.method.as_str(), per_run);
    let costs = cost_report(&transcripts);
    write(&method_dir.join("report.json"), json(&report))?;
    write(&method_dir.join("report.txt"), report.render())?;
    write(&method_dir.join("cost.json"), json(&costs))?;
    write(&method_dir.join("cost.txt"), render_cost_table(&costs))?;
    Ok(BenchOutcome {
        report,
        costs,
        method_dir,
        transcripts: paths,
    })
}
