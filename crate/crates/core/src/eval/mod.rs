//! Benchmark plumbing: dataset loading, seeded stratified sampling, scoring,
//! aggregation across runs, and per-method cost tables.

mod bench;
mod cost;
mod dataset;
mod metrics;
mod sample;
mod scorer;

use std::path::PathBuf;

use thiserror::Error;

pub use bench::{run_bench, safe_name, write_outcome, BenchOptions, BenchOutcome, Method};
pub use cost::{cost_report, render_cost_table, CostRow};
pub use dataset::{load_dataset, load_manifest, DatasetManifest, ManifestDefaults};
pub use metrics::{
    aggregate, run_metrics, score_instance, MetricReport, MetricValues, RunMetrics, ScoreOutcome,
    InstanceScore,
};
pub use sample::{allocate, sample, sampling_seed, Sample, BASE_SEED};
pub use scorer::{HttpScorer, OpenQaScorer};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: invalid manifest: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("{path}:{line}: field `{field}`: {message}")]
    Instance {
        path: PathBuf,
        line: usize,
        field: String,
        message: String,
    },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("{0}")]
    Invalid(String),
}
