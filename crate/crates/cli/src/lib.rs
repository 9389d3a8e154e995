//! Command-line front end: `run`, `bench`, `inspect` and `config`.

pub mod config;
pub mod inspect;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::Value;

use config::{BackendKind, Overrides, Settings};
use tsdebate_core::eval::{self, BenchOptions, HttpScorer, Method, OpenQaScorer};
use tsdebate_core::gateway::{ChatBackend, Gateway, HttpBackend, HttpConfig, ScriptedBackend, API_KEY_ENV, DEFAULT_ENDPOINT};
use tsdebate_core::model::{validate_instance, DebateTranscript, TaskInstance, TaskType, TemporalScope};
use tsdebate_core::orchestrator::Orchestrator;
use tsdebate_core::prompts::PromptLibrary;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUN: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tsdebate", version, about = "Multi-agent debate over time-series tasks")]
pub struct Cli {
    #[command(flatten)]
    pub flags: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one instance and write its transcript.
    Run {
        /// JSON instance file (a single object, or the first line of a JSONL file).
        instance: PathBuf,
        #[arg(long, default_value = "tsdebate")]
        method: Method,
        /// Dataset name used in the output path.
        #[arg(long, default_value = "adhoc")]
        dataset: String,
    },
    /// Sample, run and score a dataset.
    Bench {
        /// Dataset manifest (TOML).
        manifest: PathBuf,
        #[arg(long, default_value = "tsdebate")]
        method: Method,
    },
    /// Print a stored transcript.
    Inspect {
        transcript: PathBuf,
        /// Only the reviewers' claim verdicts.
        #[arg(long)]
        claims_only: bool,
    },
    /// Print the effective configuration as TOML.
    Config,
}

/// Config problems exit 2; run failures exit 3.
enum Failure {
    Config(anyhow::Error),
    Run(anyhow::Error),
}

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

fn run_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Run(e.into())
}

/// Parses `args` and executes the command, writing to `out` and `err`.
pub fn main_with(args: impl IntoIterator<Item = OsString>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(Failure::Config(e)) => {
            let _ = writeln!(err, "config error: {e:#}");
            EXIT_CONFIG
        }
        Err(Failure::Run(e)) => {
            let _ = writeln!(err, "run failed: {e:#}");
            EXIT_RUN
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    match &cli.command {
        Command::Inspect { transcript, claims_only } => cmd_inspect(transcript, *claims_only, out),
        Command::Config => {
            let s = Settings::resolve(&cli.flags).map_err(config_err)?;
            let text = toml::to_string(&s.to_file_config()).map_err(config_err)?;
            out.write_all(text.as_bytes()).map_err(run_err)?;
            Ok(EXIT_OK)
        }
        Command::Run { instance, method, dataset } => {
            let s = Settings::resolve(&cli.flags).map_err(config_err)?;
            cmd_run(&s, instance, *method, dataset, out)
        }
        Command::Bench { manifest, method } => {
            let s = Settings::resolve(&cli.flags).map_err(config_err)?;
            cmd_bench(&s, manifest, *method, out)
        }
    }
}

pub fn build_backend(s: &Settings) -> Result<Arc<dyn ChatBackend>> {
    Ok(match s.backend {
        BackendKind::Mock => match &s.script {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Arc::new(ScriptedBackend::from_json(&text).map_err(anyhow::Error::msg)?)
            }
            None => Arc::new(ScriptedBackend::default()),
        },
        BackendKind::Http => {
            let key = std::env::var(API_KEY_ENV).unwrap_or_default();
            if key.trim().is_empty() {
                return Err(anyhow!("the http backend needs an API key in {API_KEY_ENV}"));
            }
            Arc::new(HttpBackend::new(HttpConfig {
                endpoint: s.endpoint.clone().unwrap_or_else(|| DEFAULT_ENDPOINT.to_string()),
                api_key: key,
                timeout: Duration::from_secs(s.timeout_s),
                send_seed: true,
            })?)
        }
    })
}

pub fn build_orchestrator(s: &Settings) -> Result<Orchestrator> {
    let backend = build_backend(s)?;
    let prompts = match &s.templates_dir {
        Some(dir) => PromptLibrary::with_overrides(dir)?,
        None => PromptLibrary::builtin(),
    };
    let gateway = Gateway::new(backend, s.run.retry.clone());
    Ok(Orchestrator::new(gateway, prompts, s.run.clone()))
}

/// Reads one instance. `temporal_scope` may be omitted and is then inferred
/// from the task type; `ground_truth` is optional here.
pub fn load_instance(path: &Path) -> Result<TaskInstance> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let trimmed = text.trim_start();
    let mut de = serde_json::Deserializer::from_str(trimmed);
    let mut raw: Value = serde::Deserialize::deserialize(&mut de).with_context(|| format!("{}: invalid JSON", path.display()))?;
    if let Some(obj) = raw.as_object_mut() {
        if !obj.contains_key("temporal_scope") {
            let tt: Option<TaskType> = obj.get("task_type").and_then(|v| serde_json::from_value(v.clone()).ok());
            if let Some(tt) = tt {
                obj.insert("temporal_scope".into(), serde_json::to_value(TemporalScope::infer(tt))?);
            }
        }
    }
    let inst: TaskInstance = serde_path_to_error::deserialize(&raw)
        .map_err(|e| anyhow!("{}: field `{}`: {}", path.display(), e.path(), e.inner()))?;
    let problems = validate_instance(&inst);
    if !problems.is_empty() {
        return Err(anyhow!("{}: {}", path.display(), problems.join("; ")));
    }
    Ok(inst)
}

fn cmd_run(s: &Settings, instance: &Path, method: Method, dataset: &str, out: &mut dyn Write) -> Result<i32, Failure> {
    let inst = load_instance(instance).map_err(config_err)?;
    let orch = build_orchestrator(s).map_err(config_err)?;
    let dir = s
        .out_dir
        .join(eval::safe_name(dataset))
        .join(method.as_str())
        .join("run1")
        .join(eval::safe_name(&inst.id));
    let captures = s.capture.then(|| dir.join("captures"));
    let outcome = method.run(&orch, &inst, captures.as_deref());
    let path = eval::write_outcome(&dir, &outcome).map_err(run_err)?;
    let t = &outcome.transcript;
    let w = |out: &mut dyn Write, line: String| writeln!(out, "{line}").map_err(run_err);
    match &t.final_answer {
        Some(a) => w(out, format!("final answer: {a}"))?,
        None => w(out, "final answer: (none)".into())?,
    }
    if let Some(v) = &t.synthesizer {
        w(out, format!("agreement: {:?}  resolution: {:?}", v.agreement, v.resolution))?;
    }
    w(
        out,
        format!(
            "cost: ${:.4} ({} in / {} out tokens, {:.1}s)",
            t.cost.estimated_cost, t.cost.input_tokens, t.cost.output_tokens, t.cost.wall_time_s
        ),
    )?;
    w(out, format!("transcript: {}", path.display()))?;
    if let tsdebate_core::model::RunStatus::Failed { stage, error } = &t.status {
        return Err(run_err(anyhow!("stage {stage}: {error} (transcript written to {})", path.display())));
    }
    Ok(EXIT_OK)
}

fn cmd_bench(s: &Settings, manifest: &Path, method: Method, out: &mut dyn Write) -> Result<i32, Failure> {
    let m = eval::load_manifest(manifest).map_err(config_err)?;
    let instances = eval::load_dataset(&m).map_err(config_err)?;
    let orch = build_orchestrator(s).map_err(config_err)?;
    let scorer = match &s.scorer_url {
        Some(url) => Some(HttpScorer::new(url).map_err(|e| config_err(anyhow!(e)))?),
        None => None,
    };
    let opts = BenchOptions {
        method,
        runs: s.runs,
        cap: s.cap,
        parallel: s.parallel,
        out_dir: s.out_dir.clone(),
        capture: s.capture,
    };
    let res = eval::run_bench(&orch, &m, &instances, &opts, scorer.as_ref().map(|x| x as &dyn OpenQaScorer))
        .map_err(run_err)?;
    out.write_all(res.report.render().as_bytes()).map_err(run_err)?;
    out.write_all(eval::render_cost_table(&res.costs).as_bytes()).map_err(run_err)?;
    writeln!(out, "reports: {}", res.method_dir.display()).map_err(run_err)?;
    let failed: usize = res.report.runs.iter().map(|r| r.run_failures).sum();
    if failed > 0 {
        writeln!(out, "{failed} instance run(s) failed; see their transcripts").map_err(run_err)?;
    }
    Ok(EXIT_OK)
}

fn cmd_inspect(path: &Path, claims_only: bool, out: &mut dyn Write) -> Result<i32, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(config_err)?;
    let t = DebateTranscript::from_json(&text)
        .map_err(|e| config_err(anyhow!("{}: cannot decode transcript: {e}", path.display())))?;
    let view = if claims_only { inspect::claims(&t) } else { inspect::render(&t) };
    out.write_all(view.as_bytes()).map_err(run_err)?;
    Ok(EXIT_OK)
}
