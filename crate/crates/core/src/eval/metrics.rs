use std::collections::BTreeSet;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::scorer::OpenQaScorer;
use crate::model::{Answer, TaskInstance, TaskType};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreOutcome {
    /// Label, option or boolean task. `predicted` is None when the answer
    /// was missing or did not map into the answer space.
    Discrete {
        truth: String,
        predicted: Option<String>,
        correct: bool,
    },
    /// Element-wise errors. Percentage errors are in percent and omit
    /// zero-truth elements.
    Numeric {
        abs_errors: Vec<f64>,
        sq_errors: Vec<f64>,
        pct_errors: Vec<f64>,
        zero_truth_skipped: usize,
    },
    /// Numeric answer missing or of the wrong shape; kept out of the error
    /// metrics and counted as a format failure.
    Excluded { reason: String },
    /// External scorer verdict for open-ended answers.
    Verdict { correct: bool },
    Unscored { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceScore {
    pub instance_id: String,
    pub task_type: TaskType,
    #[serde(default)]
    pub run_failed: bool,
    pub outcome: ScoreOutcome,
}

pub fn score_instance(instance: &TaskInstance, answer: Option<&Answer>, scorer: Option<&dyn OpenQaScorer>) -> InstanceScore {
    let outcome = match &instance.ground_truth {
        None => ScoreOutcome::Unscored {
            reason: "no ground truth".into(),
        },
        Some(truth) => score_against(instance, truth, answer, scorer),
    };
    InstanceScore {
        instance_id: instance.id.clone(),
        task_type: instance.task_type,
        run_failed: false,
        outcome,
    }
}

fn score_against(instance: &TaskInstance, truth: &Answer, answer: Option<&Answer>, scorer: Option<&dyn OpenQaScorer>) -> ScoreOutcome {
    let answer = answer.filter(|a| a.matches_space(&instance.answer_space));
    match truth {
        Answer::NumericVector(t) => match answer {
            Some(Answer::NumericVector(p)) if p.len() == t.len() => {
                let mut out = ScoreOutcome::Numeric {
                    abs_errors: Vec::with_capacity(t.len()),
                    sq_errors: Vec::with_capacity(t.len()),
                    pct_errors: Vec::new(),
                    zero_truth_skipped: 0,
                };
                if let ScoreOutcome::Numeric {
                    abs_errors,
                    sq_errors,
                    pct_errors,
                    zero_truth_skipped,
                } = &mut out
                {
                    for (&y, &yhat) in t.iter().zip(p) {
                        let e = (yhat - y).abs();
                        abs_errors.push(e);
                        sq_errors.push(e * e);
                        if y == 0.0 {
                            *zero_truth_skipped += 1;
                        } else {
                            pct_errors.push(100.0 * e / y.abs());
                        }
                    }
                }
                out
            }
            _ => ScoreOutcome::Excluded {
                reason: match answer {
                    None => "answer missing or unmapped".into(),
                    Some(a) => format!("answer {a} has the wrong shape"),
                },
            },
        },
        Answer::FreeText(reference) => match (scorer, answer) {
            (None, _) => ScoreOutcome::Unscored {
                reason: "no open-answer scorer configured".into(),
            },
            (Some(_), None) => ScoreOutcome::Verdict { correct: false },
            (Some(s), Some(a)) => match s.judge(&instance.query, reference, &a.to_string()) {
                Ok(correct) => ScoreOutcome::Verdict { correct },
                Err(e) => ScoreOutcome::Unscored { reason: e },
            },
        },
        _ => {
            let truth = truth.discrete_key().unwrap_or_default();
            let predicted = answer.and_then(Answer::discrete_key);
            ScoreOutcome::Discrete {
                correct: predicted.as_deref() == Some(truth.as_str()),
                truth,
                predicted,
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricValues {
    pub accuracy: Option<f64>,
    pub weighted_f1: Option<f64>,
    pub mae: Option<f64>,
    pub mse: Option<f64>,
    /// Percent.
    pub mape: Option<f64>,
}

impl MetricValues {
    const NAMES: [&'static str; 5] = ["accuracy", "weighted_f1", "mae", "mse", "mape"];

    fn get(&self) -> [Option<f64>; 5] {
        [self.accuracy, self.weighted_f1, self.mae, self.mse, self.mape]
    }

    fn from_array(v: [Option<f64>; 5]) -> Self {
        Self {
            accuracy: v[0],
            weighted_f1: v[1],
            mae: v[2],
            mse: v[3],
            mape: v[4],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub run_id: u32,
    pub seed: u64,
    pub n: usize,
    pub run_failures: usize,
    pub format_failures: usize,
    pub unscored: usize,
    pub mape_zero_skipped: usize,
    pub values: MetricValues,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub cost_usd: f64,
}

impl RunMetrics {
    pub fn format_failure_rate(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.format_failures as f64 / self.n as f64
        }
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Support-weighted mean of per-class F1 over the classes present in the truth.
pub fn weighted_f1(pairs: &[(String, Option<String>)]) -> Option<f64> {
    if pairs.is_empty() {
        return None;
    }
    let classes: BTreeSet<&str> = pairs.iter().map(|(t, _)| t.as_str()).collect();
    let mut sum = 0.0;
    for c in classes {
        let (mut tp, mut fp, mut fneg, mut support) = (0usize, 0usize, 0usize, 0usize);
        for (t, p) in pairs {
            let is_t = t == c;
            let is_p = p.as_deref() == Some(c);
            support += is_t as usize;
            match (is_t, is_p) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fneg += 1,
                _ => {}
            }
        }
        let denom = 2 * tp + fp + fneg;
        let f1 = if denom == 0 { 0.0 } else { 2.0 * tp as f64 / denom as f64 };
        sum += support as f64 * f1;
    }
    Some(sum / pairs.len() as f64)
}

/// Metrics for one run. Element errors are pooled across instances.
pub fn run_metrics(run_id: u32, seed: u64, scores: &[InstanceScore]) -> RunMetrics {
    let mut m = RunMetrics {
        run_id,
        seed,
        n: scores.len(),
        ..Default::default()
    };
    let mut hits = Vec::new();
    let mut pairs = Vec::new();
    let (mut abs, mut sq, mut pct) = (Vec::new(), Vec::new(), Vec::new());
    for s in scores {
        m.run_failures += s.run_failed as usize;
        match &s.outcome {
            ScoreOutcome::Discrete { truth, predicted, correct } => {
                hits.push(*correct as u8 as f64);
                pairs.push((truth.clone(), predicted.clone()));
            }
            ScoreOutcome::Verdict { correct } => hits.push(*correct as u8 as f64),
            ScoreOutcome::Numeric {
                abs_errors,
                sq_errors,
                pct_errors,
                zero_truth_skipped,
            } => {
                abs.extend_from_slice(abs_errors);
                sq.extend_from_slice(sq_errors);
                pct.extend_from_slice(pct_errors);
                m.mape_zero_skipped += zero_truth_skipped;
            }
            ScoreOutcome::Excluded { .. } => m.format_failures += 1,
            ScoreOutcome::Unscored { .. } => m.unscored += 1,
        }
    }
    m.values = MetricValues {
        accuracy: mean(&hits),
        weighted_f1: weighted_f1(&pairs),
        mae: mean(&abs),
        mse: mean(&sq),
        mape: mean(&pct),
    };
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub dataset: String,
    pub method: String,
    pub runs: Vec<RunMetrics>,
    pub mean: MetricValues,
    /// Sample standard deviation; present only with two or more runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<MetricValues>,
}

fn sample_std(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let mu = mean(xs)?;
    let var = xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    Some(var.sqrt())
}

pub fn aggregate(dataset: &str, method: &str, runs: Vec<RunMetrics>) -> MetricReport {
    let mut means = [None; 5];
    let mut stds = [None; 5];
    for k in 0..5 {
        let xs: Vec<f64> = runs.iter().filter_map(|r| r.values.get()[k]).collect();
        means[k] = mean(&xs);
        stds[k] = sample_std(&xs);
    }
    MetricReport {
        dataset: dataset.to_string(),
        method: method.to_string(),
        std: (runs.len() >= 2).then(|| MetricValues::from_array(stds)),
        mean: MetricValues::from_array(means),
        runs,
    }
}

impl MetricReport {
    /// Columns with at least one value, then counts and cost.
    pub fn render(&self) -> String {
        let active: Vec<usize> = (0..5)
            .filter(|&k| self.runs.iter().any(|r| r.values.get()[k].is_some()))
            .collect();
        let mut out = format!("dataset: {}  method: {}\n", self.dataset, self.method);
        let mut header = format!("{:<10}", "run");
        for &k in &active {
            let _ = write!(header, "{:>20}", MetricValues::NAMES[k]);
        }
        let _ = write!(header, "{:>6}{:>9}{:>9}{:>11}", "n", "failed", "fmt_err", "cost_usd");
        out.push_str(&header);
        out.push('\n');
        for r in &self.runs {
            let _ = write!(out, "{:<10}", format!("run{}", r.run_id));
            for &k in &active {
                let cell = r.values.get()[k].map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
                let _ = write!(out, "{cell:>20}");
            }
            let _ = writeln!(
                out,
                "{:>6}{:>9}{:>9}{:>11.4}",
                r.n, r.run_failures, r.format_failures, r.cost_usd
            );
        }
        let _ = write!(out, "{:<10}", "mean±std");
        for &k in &active {
            let m = self.mean.get()[k];
            let s = self.std.as_ref().and_then(|s| s.get()[k]);
            let cell = match (m, s) {
                (Some(m), Some(s)) => format!("{m:.4}±{s:.4}"),
                (Some(m), None) => format!("{m:.4}"),
                _ => "-".into(),
            };
            let _ = write!(out, "{cell:>20}");
        }
        out.push('\n');
        let skipped: usize = self.runs.iter().map(|r| r.mape_zero_skipped).sum();
        if skipped > 0 {
            let _ = writeln!(out, "mape skipped {skipped} zero-truth element(s)");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;
    use crate::model::{AnswerSpace, TemporalScope, TimeSeriesRecord};

    fn numeric(truth: Vec<f64>) -> TaskInstance {
        TaskInstance {
            id: "n".into(),
            query: "q".into(),
            context: None,
            series: TimeSeriesRecord::univariate("s", vec![1.0, 2.0]),
            task_type: TaskType::Forecasting,
            answer_space: AnswerSpace::Numeric { horizon: truth.len() },
            ground_truth: Some(Answer::NumericVector(truth)),
            temporal_scope: TemporalScope::Future,
            strata: BTreeMap::new(),
        }
    }

    fn labels(truth: &str) -> TaskInstance {
        TaskInstance {
            id: truth.into(),
            task_type: TaskType::Classification,
            answer_space: AnswerSpace::Labels {
                labels: vec!["A".into(), "B".into()],
            },
            ground_truth: Some(Answer::Label(truth.into())),
            temporal_scope: TemporalScope::PastPresent,
            ..numeric(vec![0.0])
        }
    }

    #[test]
    fn identity_has_zero_error() {
        let i = numeric(vec![1.0, 2.0, 3.0]);
        let s = score_instance(&i, Some(&Answer::NumericVector(vec![1.0, 2.0, 3.0])), None);
        let m = run_metrics(1, 2026, &[s]);
        assert_eq!(m.values.mae, Some(0.0));
        assert_eq!(m.values.mse, Some(0.0));
    }

    #[test]
    fn hand_computed_mae_and_mape() {
        let i = numeric(vec![100.0, 200.0]);
        let s = score_instance(&i, Some(&Answer::NumericVector(vec![110.0, 180.0])), None);
        let m = run_metrics(1, 2026, &[s]);
        assert_eq!(m.values.mae, Some(15.0));
        assert!((m.values.mape.unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn zero_truth_is_skipped_for_mape() {
        let i = numeric(vec![0.0, 50.0]);
        let s = score_instance(&i, Some(&Answer::NumericVector(vec![1.0, 55.0])), None);
        let m = run_metrics(1, 2026, &[s]);
        assert_eq!(m.mape_zero_skipped, 1);
        assert!((m.values.mape.unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn unmapped_numeric_is_excluded() {
        let i = numeric(vec![1.0, 2.0]);
        let s = score_instance(&i, Some(&Answer::NumericVector(vec![1.0])), None);
        let m = run_metrics(1, 2026, &[s]);
        assert_eq!(m.format_failures, 1);
        assert_eq!(m.values.mae, None);
    }

    #[test]
    fn accuracy_half() {
        let a = score_instance(&labels("A"), Some(&Answer::Label("A".into())), None);
        let b = score_instance(&labels("A"), Some(&Answer::Label("B".into())), None);
        assert_eq!(run_metrics(1, 2026, &[a, b]).values.accuracy, Some(0.5));
    }

    #[test]
    fn missing_label_answer_counts_as_wrong() {
        let s = score_instance(&labels("A"), None, None);
        assert!(matches!(s.outcome, ScoreOutcome::Discrete { correct: false, .. }));
    }

    #[test]
    fn one_class_weighted_f1_is_that_class() {
        let pairs = vec![
            ("a".to_string(), Some("a".to_string())),
            ("a".to_string(), Some("b".to_string())),
        ];
        // tp 1, fn 1, fp 0 → 2/3
        assert!((weighted_f1(&pairs).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn std_needs_two_runs() {
        let run = |id, acc| RunMetrics {
            run_id: id,
            values: MetricValues {
                accuracy: Some(acc),
                ..Default::default()
            },
            ..Default::default()
        };
        let one = aggregate("d", "m", vec![run(1, 0.4)]);
        assert!(one.std.is_none());
        let two = aggregate("d", "m", vec![run(1, 0.4), run(2, 0.6)]);
        assert!((two.mean.accuracy.unwrap() - 0.5).abs() < 1e-12);
        assert!((two.std.unwrap().accuracy.unwrap() - 0.141_421_356_237_309_5).abs() < 1e-9);
    }
}
