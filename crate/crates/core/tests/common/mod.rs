#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use tsdebate_core::gateway::{Gateway, ScriptStep, ScriptedBackend};
use tsdebate_core::model::{
    Answer, AnswerSpace, TaskInstance, TaskType, TemporalScope, TimeSeriesRecord,
};
use tsdebate_core::orchestrator::{Orchestrator, RetryPolicy, RunConfig};
use tsdebate_core::prompts::PromptLibrary;

pub fn wave(n: usize, period: f64, trend: f64) -> Vec<f64> {
    (0..n)
        .map(|t| {
            let t = t as f64;
            10.0 + trend * t + 3.0 * (2.0 * std::f64::consts::PI * t / period).sin()
        })
        .collect()
}

pub fn classification() -> TaskInstance {
    TaskInstance {
        id: "cls-1".into(),
        query: "Is the trend of this sensor reading increasing or decreasing?".into(),
        context: Some("Hourly temperature from a greenhouse.".into()),
        series: TimeSeriesRecord::univariate("s1", wave(64, 16.0, 0.2)),
        task_type: TaskType::Classification,
        answer_space: AnswerSpace::Labels {
            labels: vec!["increasing".into(), "decreasing".into()],
        },
        ground_truth: Some(Answer::Label("increasing".into())),
        temporal_scope: TemporalScope::PastPresent,
        strata: BTreeMap::new(),
    }
}

pub fn forecasting() -> TaskInstance {
    TaskInstance {
        id: "fc-1".into(),
        query: "Forecast the next 3 values of the series.".into(),
        context: None,
        series: TimeSeriesRecord::univariate("s2", wave(48, 12.0, 0.0)),
        task_type: TaskType::Forecasting,
        answer_space: AnswerSpace::Numeric { horizon: 3 },
        ground_truth: Some(Answer::NumericVector(vec![10.0, 11.5, 12.6])),
        temporal_scope: TemporalScope::Future,
        strata: BTreeMap::new(),
    }
}

pub fn mcqa() -> TaskInstance {
    TaskInstance {
        id: "mc-1".into(),
        query: "Which channel has the larger peak? (A) ch0 (B) ch1".into(),
        context: Some("Two accelerometer axes.".into()),
        series: TimeSeriesRecord::multivariate("s3", vec![wave(40, 10.0, 0.0), wave(40, 8.0, 0.1)]),
        task_type: TaskType::Mcqa,
        answer_space: AnswerSpace::Options {
            options: vec!["A".into(), "B".into()],
        },
        ground_truth: Some(Answer::Option("B".into())),
        temporal_scope: TemporalScope::PastPresent,
        strata: BTreeMap::new(),
    }
}

pub fn config() -> RunConfig {
    RunConfig {
        retry: RetryPolicy {
            attempts: 2,
            base_delay_ms: 0,
        },
        ..RunConfig::default()
    }
}

pub fn orchestrator_with(backend: ScriptedBackend, config: RunConfig) -> Orchestrator {
    let gw = Gateway::new(Arc::new(backend), config.retry.clone()).with_sleeper(|_| {});
    Orchestrator::new(gw, PromptLibrary::builtin(), config)
}

pub fn orchestrator(backend: ScriptedBackend) -> Orchestrator {
    orchestrator_with(backend, config())
}

pub fn scripts(entries: &[(&str, Vec<ScriptStep>)]) -> BTreeMap<String, Vec<ScriptStep>> {
    entries
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

pub fn tool(name: &str, args: serde_json::Value) -> ScriptStep {
    ScriptStep::Tool {
        tool: name.into(),
        args,
    }
}

pub fn reply(text: &str) -> ScriptStep {
    ScriptStep::Reply {
        reply: text.into(),
        usage: None,
    }
}
