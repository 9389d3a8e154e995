//! Layered settings: command-line flags over the TOML file over defaults.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use tsdebate_core::model::Rates;
use tsdebate_core::orchestrator::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Mock,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendSection {
    pub kind: Option<BackendKind>,
    pub model: Option<String>,
    pub endpoint: Option<String>,
    pub native_tools: Option<bool>,
    /// Scripted replies for the mock backend.
    pub script: Option<PathBuf>,
    pub timeout_s: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DebateSection {
    pub rounds: Option<u32>,
    pub reviewers: Option<u32>,
    pub seed: Option<u64>,
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetSection {
    pub analyst: Option<u32>,
    pub reviewer: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathSection {
    pub out_dir: Option<PathBuf>,
    pub templates_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub runs: Option<u32>,
    pub cap: Option<usize>,
    pub parallel: Option<usize>,
    pub scorer_url: Option<String>,
}

/// The on-disk config document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub backend: BackendSection,
    pub rates: Option<Rates>,
    pub debate: DebateSection,
    pub budgets: BudgetSection,
    pub paths: PathSection,
    pub bench: BenchSection,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: FileConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        // Relative paths in the file are relative to the file.
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(v) = p.as_mut() {
                if v.is_relative() {
                    *v = base.join(&*v);
                }
            }
        };
        let mut cfg = cfg;
        rebase(&mut cfg.backend.script);
        rebase(&mut cfg.paths.out_dir);
        rebase(&mut cfg.paths.templates_dir);
        Ok(cfg)
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub backend: BackendKind,
    pub endpoint: Option<String>,
    pub script: Option<PathBuf>,
    pub timeout_s: u64,
    pub run: RunConfig,
    pub out_dir: PathBuf,
    pub templates_dir: Option<PathBuf>,
    pub capture: bool,
    pub runs: u32,
    pub cap: usize,
    pub parallel: usize,
    pub scorer_url: Option<String>,
}

/// Values given on the command line; `None` means "not given".
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendKind>,
    #[arg(long, global = true)]
    pub endpoint: Option<String>,
    /// JSON script for the mock backend.
    #[arg(long, global = true)]
    pub script: Option<PathBuf>,
    #[arg(long, global = true)]
    pub rounds: Option<u32>,
    #[arg(long, global = true)]
    pub reviewers: Option<u32>,
    #[arg(long, global = true)]
    pub analyst_budget: Option<u32>,
    #[arg(long, global = true)]
    pub reviewer_budget: Option<u32>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub cap: Option<usize>,
    #[arg(long, global = true)]
    pub runs: Option<u32>,
    #[arg(long, global = true)]
    pub parallel: Option<usize>,
    /// Write request/response captures next to each transcript.
    #[arg(long, global = true)]
    pub capture: bool,
    #[arg(long, global = true)]
    pub templates_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub scorer_url: Option<String>,
    /// Root directory for run outputs.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl Settings {
    pub fn resolve(flags: &Overrides) -> Result<Self> {
        let file = match &flags.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        Self::layer(&file, flags)
    }

    pub fn layer(file: &FileConfig, flags: &Overrides) -> Result<Self> {
        let d = RunConfig::default();
        let run = RunConfig {
            rounds: flags.rounds.or(file.debate.rounds).unwrap_or(d.rounds),
            reviewers: flags.reviewers.or(file.debate.reviewers).unwrap_or(d.reviewers),
            analyst_budget: flags.analyst_budget.or(file.budgets.analyst).unwrap_or(d.analyst_budget),
            reviewer_budget: flags.reviewer_budget.or(file.budgets.reviewer).unwrap_or(d.reviewer_budget),
            model: flags.model.clone().or(file.backend.model.clone()).unwrap_or(d.model.clone()),
            temperature: file.debate.temperature.unwrap_or(d.temperature),
            seed: flags.seed.or(file.debate.seed).or(d.seed),
            rates: file.rates.unwrap_or(d.rates),
            native_tools: file.backend.native_tools.unwrap_or(d.native_tools),
            ..d
        };
        run.validate().map_err(anyhow::Error::msg)?;
        let s = Settings {
            backend: flags.backend.or(file.backend.kind).unwrap_or(BackendKind::Http),
            endpoint: flags.endpoint.clone().or(file.backend.endpoint.clone()),
            script: flags.script.clone().or(file.backend.script.clone()),
            timeout_s: file.backend.timeout_s.unwrap_or(180),
            run,
            out_dir: flags.out.clone().or(file.paths.out_dir.clone()).unwrap_or_else(|| "runs".into()),
            templates_dir: flags.templates_dir.clone().or(file.paths.templates_dir.clone()),
            capture: flags.capture,
            runs: flags.runs.or(file.bench.runs).unwrap_or(3),
            cap: flags.cap.or(file.bench.cap).unwrap_or(100),
            parallel: flags.parallel.or(file.bench.parallel).unwrap_or(1),
            scorer_url: flags.scorer_url.clone().or(file.bench.scorer_url.clone()),
        };
        if s.runs == 0 {
            anyhow::bail!("runs must be >= 1");
        }
        if s.cap == 0 {
            anyhow::bail!("cap must be >= 1");
        }
        if s.parallel == 0 {
            anyhow::bail!("parallel must be >= 1");
        }
        Ok(s)
    }

    /// The effective settings as a config document.
    pub fn to_file_config(&self) -> FileConfig {
        FileConfig {
            backend: BackendSection {
                kind: Some(self.backend),
                model: Some(self.run.model.clone()),
                endpoint: self.endpoint.clone(),
                native_tools: Some(self.run.native_tools),
                script: self.script.clone(),
                timeout_s: Some(self.timeout_s),
            },
            rates: Some(self.run.rates),
            debate: DebateSection {
                rounds: Some(self.run.rounds),
                reviewers: Some(self.run.reviewers),
                seed: self.run.seed,
                temperature: Some(self.run.temperature),
            },
            budgets: BudgetSection {
                analyst: Some(self.run.analyst_budget),
                reviewer: Some(self.run.reviewer_budget),
            },
            paths: PathSection {
                out_dir: Some(self.out_dir.clone()),
                templates_dir: self.templates_dir.clone(),
            },
            bench: BenchSection {
                runs: Some(self.runs),
                cap: Some(self.cap),
                parallel: Some(self.parallel),
                scorer_url: self.scorer_url.clone(),
            },
        }
    }
}
