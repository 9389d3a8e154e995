//! Missing-aware descriptive statistics. Every consumer (lookup tools, the
//! calculation verifier, indicators) goes through these so results agree.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub missing: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
    /// Population standard deviation.
    pub std: Option<f64>,
}

/// Single pass (Welford) over the non-missing values.
pub fn summarize(values: &[f64]) -> Summary {
    let mut count = 0usize;
    let mut missing = 0usize;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &x in values {
        if x.is_nan() {
            missing += 1;
            continue;
        }
        count += 1;
        let delta = x - mean;
        mean += delta / count as f64;
        m2 += delta * (x - mean);
        min = min.min(x);
        max = max.max(x);
    }
    if count == 0 {
        return Summary {
            count,
            missing,
            min: None,
            max: None,
            mean: None,
            std: None,
        };
    }
    Summary {
        count,
        missing,
        min: Some(min),
        max: Some(max),
        mean: Some(mean),
        std: Some((m2.max(0.0) / count as f64).sqrt()),
    }
}

pub fn mean(values: &[f64]) -> Option<f64> {
    summarize(values).mean
}

pub fn std(values: &[f64]) -> Option<f64> {
    summarize(values).std
}

pub fn min(values: &[f64]) -> Option<f64> {
    summarize(values).min
}

pub fn max(values: &[f64]) -> Option<f64> {
    summarize(values).max
}

/// Sum of the non-missing values (0 for an empty or all-missing slice).
pub fn sum(values: &[f64]) -> f64 {
    values.iter().filter(|v| !v.is_nan()).sum()
}

/// Median of the non-missing values.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Least-squares slope of `values` against their index, skipping missing cells.
pub fn ls_slope(values: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_nan())
        .map(|(i, v)| (i as f64, *v))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}
