//! Event detection: prominence-filtered extrema, rolling z-score anomalies and
//! piecewise-linear trend segments.

use serde::{Deserialize, Serialize};

use super::stats;

/// Extrema must rise at least this fraction of the channel range above their base.
pub const PROMINENCE_FRACTION: f64 = 0.05;
pub const ANOMALY_WINDOW: usize = 25;
pub const ANOMALY_Z: f64 = 3.0;
pub const MAX_TREND_SEGMENTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Peak,
    Valley,
    Trend,
    Anomaly,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 4] = [
        FeatureKind::Peak,
        FeatureKind::Valley,
        FeatureKind::Trend,
        FeatureKind::Anomaly,
    ];

    pub fn parse(token: &str) -> Option<Self> {
        match token.trim().trim_matches(['\'', '"']).to_ascii_lowercase().as_str() {
            "peak" | "peaks" => Some(FeatureKind::Peak),
            "valley" | "valleys" | "trough" | "troughs" => Some(FeatureKind::Valley),
            "trend" | "trends" => Some(FeatureKind::Trend),
            "anomaly" | "anomalies" => Some(FeatureKind::Anomaly),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Peak => "peak",
            FeatureKind::Valley => "valley",
            FeatureKind::Trend => "trend",
            FeatureKind::Anomaly => "anomaly",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEvent {
    pub kind: FeatureKind,
    pub channel: usize,
    pub position: usize,
    pub value: f64,
    /// Prominence for extrema, |z| for anomalies, signed slope for trends.
    pub magnitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<(usize, usize)>,
}

pub fn detect(values: &[f64], channel: usize, kind: FeatureKind) -> Vec<FeatureEvent> {
    match kind {
        FeatureKind::Peak => extrema(values, channel, false),
        FeatureKind::Valley => extrema(values, channel, true),
        FeatureKind::Anomaly => anomalies(values, channel),
        FeatureKind::Trend => trends(values, channel),
    }
}

fn extrema(values: &[f64], channel: usize, valleys: bool) -> Vec<FeatureEvent> {
    let x: Vec<f64> = if valleys {
        values.iter().map(|v| -v).collect()
    } else {
        values.to_vec()
    };
    let summary = stats::summarize(&x);
    let (Some(lo), Some(hi)) = (summary.min, summary.max) else {
        return Vec::new();
    };
    let range = hi - lo;
    if range <= 0.0 {
        return Vec::new();
    }
    let threshold = PROMINENCE_FRACTION * range;
    let mut out = Vec::new();
    for i in 1..x.len().saturating_sub(1) {
        let (l, c, r) = (x[i - 1], x[i], x[i + 1]);
        if c.is_nan() || l.is_nan() || r.is_nan() || !(c > l && c > r) {
            continue;
        }
        let p = prominence(&x, i);
        if p >= threshold {
            out.push(FeatureEvent {
                kind: if valleys {
                    FeatureKind::Valley
                } else {
                    FeatureKind::Peak
                },
                channel,
                position: i,
                value: values[i],
                magnitude: p,
                span: None,
            });
        }
    }
    out
}

/// Height of `x[i]` above the higher of the two lowest points reached before
/// meeting a strictly higher value (or the border) on each side.
pub fn prominence(x: &[f64], i: usize) -> f64 {
    let h = x[i];
    let mut left_min = h;
    for j in (0..i).rev() {
        if x[j].is_nan() {
            continue;
        }
        if x[j] > h {
            break;
        }
        left_min = left_min.min(x[j]);
    }
    let mut right_min = h;
    for &v in &x[i + 1..] {
        if v.is_nan() {
            continue;
        }
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

fn anomalies(values: &[f64], channel: usize) -> Vec<FeatureEvent> {
    let t = values.len();
    if t == 0 {
        return Vec::new();
    }
    let w = ANOMALY_WINDOW.min(t);
    let mut out = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        let start = i.saturating_sub(w / 2).min(t - w);
        let s = stats::summarize(&values[start..start + w]);
        let (Some(mean), Some(sd)) = (s.mean, s.std) else {
            continue;
        };
        if sd <= 0.0 {
            continue;
        }
        let z = (v - mean) / sd;
        if z.abs() > ANOMALY_Z {
            out.push(FeatureEvent {
                kind: FeatureKind::Anomaly,
                channel,
                position: i,
                value: v,
                magnitude: z.abs(),
                span: None,
            });
        }
    }
    out
}

fn trends(values: &[f64], channel: usize) -> Vec<FeatureEvent> {
    trend_segments(values)
        .into_iter()
        .filter_map(|(start, end)| {
            let slope = stats::ls_slope(&values[start..=end])?;
            Some(FeatureEvent {
                kind: FeatureKind::Trend,
                channel,
                position: start,
                value: values[start],
                magnitude: slope,
                span: Some((start, end)),
            })
        })
        .collect()
}

/// Binary segmentation on the mean of first differences, at most
/// [`MAX_TREND_SEGMENTS`] pieces. Returns inclusive index spans over `values`;
/// neighbouring spans share their boundary index.
pub fn trend_segments(values: &[f64]) -> Vec<(usize, usize)> {
    let t = values.len();
    if t < 2 {
        return Vec::new();
    }
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let finite: Vec<f64> = diffs.iter().copied().filter(|d| d.is_finite()).collect();
    if finite.is_empty() {
        return vec![(0, t - 1)];
    }
    let med = stats::median(&finite).unwrap_or(0.0);
    let abs_dev: Vec<f64> = finite.iter().map(|d| (d - med).abs()).collect();
    let sigma = 1.4826 * stats::median(&abs_dev).unwrap_or(0.0);
    let n = diffs.len() as f64;
    let penalty = 2.0 * sigma * sigma * n.ln().max(1.0);
    let scale: f64 = finite.iter().map(|d| d * d).sum::<f64>().max(f64::MIN_POSITIVE);

    let mut segments = vec![(0usize, diffs.len() - 1)];
    while segments.len() < MAX_TREND_SEGMENTS {
        let mut best: Option<(usize, usize, f64)> = None;
        for (idx, &(a, b)) in segments.iter().enumerate() {
            if let Some((split, gain)) = best_split(&diffs, a, b) {
                if best.is_none_or(|(_, _, g)| gain > g) {
                    best = Some((idx, split, gain));
                }
            }
        }
        match best {
            Some((idx, split, gain)) if gain > penalty && gain > 1e-9 * scale => {
                let (a, b) = segments[idx];
                segments[idx] = (a, split);
                segments.insert(idx + 1, (split + 1, b));
            }
            _ => break,
        }
    }
    segments.into_iter().map(|(a, b)| (a, b + 1)).collect()
}

fn sse(d: &[f64]) -> f64 {
    let s = stats::summarize(d);
    match (s.mean, s.std) {
        (Some(_), Some(sd)) => sd * sd * s.count as f64,
        _ => 0.0,
    }
}

fn best_split(d: &[f64], a: usize, b: usize) -> Option<(usize, f64)> {
    let len = b + 1 - a;
    if len < 4 {
        return None;
    }
    let whole = sse(&d[a..=b]);
    (a + 1..b - 1)
        .map(|s| (s, whole - sse(&d[a..=s]) - sse(&d[s + 1..=b])))
        .fold(None, |acc: Option<(usize, f64)>, cand| match acc {
            Some(best) if best.1 >= cand.1 => Some(best),
            _ => Some(cand),
        })
}
