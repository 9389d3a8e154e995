//! Lookup, feature and spectral views over a loaded series.
//!
//! Every operation is a pure function of the record and its arguments. Failures
//! are [`ToolError`]s whose `Display` text is what the calling agent sees.

pub mod features;
pub mod granularity;
pub mod indicators;
pub mod spectral;
pub mod stats;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::TimeSeriesRecord;
pub use features::{FeatureEvent, FeatureKind};
pub use granularity::Granularity;
pub use indicators::{BollingerParams, IndicatorKind, MacdParams};
pub use spectral::{ChannelSpectrum, SpectralPeak, SpectralSummary, MIN_SPECTRAL_LENGTH};

pub const DEFAULT_WINDOW: usize = 5;
/// Upper bound on rendered tool output.
pub const MAX_RESULT_CHARS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ToolError {
    #[error("range error: {0}")]
    Range(String),
    #[error("channel error: {requested:?} is not a channel; valid channels are {}", list_channels(.names))]
    Channel {
        requested: String,
        names: Vec<String>,
    },
    #[error("unknown {what} {token:?}; expected one of: {}", .options.join(", "))]
    UnknownOption {
        what: &'static str,
        token: String,
        options: Vec<&'static str>,
    },
    #[error("series too short for spectral analysis: T={len}, need at least {MIN_SPECTRAL_LENGTH} samples")]
    TooShort { len: usize },
    #[error("{name} needs at least {need} samples (warm-up); series has T={len}")]
    WarmUp {
        name: &'static str,
        need: usize,
        len: usize,
    },
    #[error("argument error: {0}")]
    Argument(String),
}

fn list_channels(names: &[String]) -> String {
    names
        .iter()
        .enumerate()
        .map(|(i, n)| format!("{i}={n}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// An index into the time axis given either as an integer or as a timestamp label.
#[derive(Debug, Clone, PartialEq)]
pub enum Position {
    Index(i64),
    Label(String),
}

impl From<usize> for Position {
    fn from(i: usize) -> Self {
        Position::Index(i as i64)
    }
}

impl Position {
    fn resolve(&self, series: &TimeSeriesRecord, what: &str) -> Result<usize, ToolError> {
        let t = series.len();
        let idx = match self {
            Position::Index(i) => *i,
            Position::Label(s) => match s.trim().parse::<i64>() {
                Ok(i) => i,
                Err(_) => {
                    return series.index_of_timestamp(s).ok_or_else(|| {
                        ToolError::Range(format!(
                            "{what} {s:?} is neither an index nor a timestamp of this series; valid indices are 0..={}",
                            t.saturating_sub(1)
                        ))
                    })
                }
            },
        };
        if idx < 0 || idx as usize >= t {
            return Err(ToolError::Range(format!(
                "{what}={idx} is outside the valid index range 0..={}",
                t.saturating_sub(1)
            )));
        }
        Ok(idx as usize)
    }
}

fn resolve_range(
    series: &TimeSeriesRecord,
    start: Option<&Position>,
    end: Option<&Position>,
) -> Result<(usize, usize), ToolError> {
    let s = match start {
        Some(p) => p.resolve(series, "start")?,
        None => 0,
    };
    let e = match end {
        Some(p) => p.resolve(series, "end")?,
        None => series.len().saturating_sub(1),
    };
    if s > e {
        return Err(ToolError::Range(format!(
            "start={s} is after end={e}; need 0 <= start <= end <= {}",
            series.len().saturating_sub(1)
        )));
    }
    Ok((s, e))
}

fn resolve_channel(series: &TimeSeriesRecord, key: &str) -> Result<usize, ToolError> {
    series.resolve_channel(key).ok_or_else(|| ToolError::Channel {
        requested: key.trim().to_string(),
        names: (0..series.dim()).map(|i| series.channel_name(i)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub name: String,
    pub count: usize,
    pub missing: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub first: Option<f64>,
    pub last: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesInfo {
    pub length: usize,
    pub dim: usize,
    pub channel_names: Vec<String>,
    pub stats: Vec<ChannelStats>,
    pub granularity: Option<String>,
    pub start_timestamp: Option<String>,
    pub end_timestamp: Option<String>,
    /// Events per kind, summed over channels.
    pub feature_counts: BTreeMap<FeatureKind, usize>,
}

pub fn get_info(series: &TimeSeriesRecord) -> SeriesInfo {
    let mut feature_counts: BTreeMap<FeatureKind, usize> =
        FeatureKind::ALL.iter().map(|k| (*k, 0)).collect();
    let stats = series
        .channels
        .iter()
        .enumerate()
        .map(|(ch, values)| {
            for kind in FeatureKind::ALL {
                *feature_counts.entry(kind).or_default() += features::detect(values, ch, kind).len();
            }
            let s = stats::summarize(values);
            ChannelStats {
                name: series.channel_name(ch),
                count: s.count,
                missing: s.missing,
                min: s.min,
                max: s.max,
                mean: s.mean,
                std: s.std,
                first: values.iter().copied().find(|v| !v.is_nan()),
                last: values.iter().rev().copied().find(|v| !v.is_nan()),
            }
        })
        .collect();
    let t = series.len();
    SeriesInfo {
        length: t,
        dim: series.dim(),
        channel_names: (0..series.dim()).map(|i| series.channel_name(i)).collect(),
        stats,
        granularity: series.granularity.clone(),
        start_timestamp: series.timestamp(0).map(ToString::to_string),
        end_timestamp: t
            .checked_sub(1)
            .and_then(|i| series.timestamp(i))
            .map(ToString::to_string),
        feature_counts,
    }
}

/// Rows of values over a contiguous index range; `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueSlice {
    pub channels: Vec<usize>,
    pub names: Vec<String>,
    pub rows: Vec<SliceRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceRow {
    pub index: usize,
    pub timestamp: Option<String>,
    pub values: Vec<Option<f64>>,
}

impl ValueSlice {
    fn build(series: &TimeSeriesRecord, channels: Vec<usize>, start: usize, end: usize) -> Self {
        let rows = (start..=end)
            .map(|t| SliceRow {
                index: t,
                timestamp: series.timestamp(t).map(ToString::to_string),
                values: channels
                    .iter()
                    .map(|&c| Some(series.channels[c][t]).filter(|v| !v.is_nan()))
                    .collect(),
            })
            .collect();
        Self {
            names: channels.iter().map(|&c| series.channel_name(c)).collect(),
            channels,
            rows,
        }
    }

    /// Values of the `k`-th requested channel, missing as `NaN`.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.values[k].unwrap_or(f64::NAN))
            .collect()
    }

    pub fn render(&self) -> String {
        let has_ts = self.rows.iter().any(|r| r.timestamp.is_some());
        let mut header = String::from("index");
        if has_ts {
            header.push_str(",timestamp");
        }
        for n in &self.names {
            header.push(',');
            header.push_str(n);
        }
        let lines = self.rows.iter().map(|r| {
            let mut line = r.index.to_string();
            if has_ts {
                line.push(',');
                line.push_str(r.timestamp.as_deref().unwrap_or(""));
            }
            for v in &r.values {
                line.push(',');
                line.push_str(&fmt_opt(*v, "missing"));
            }
            line
        });
        bound_lines(&header, lines.collect())
    }
}

pub fn get_values(
    series: &TimeSeriesRecord,
    channel: Option<&str>,
    start: Option<&Position>,
    end: Option<&Position>,
) -> Result<ValueSlice, ToolError> {
    let (s, e) = resolve_range(series, start, end)?;
    let channels = match channel {
        Some(key) => vec![resolve_channel(series, key)?],
        None => (0..series.dim()).collect(),
    };
    Ok(ValueSlice::build(series, channels, s, e))
}

pub fn get_around(
    series: &TimeSeriesRecord,
    center: &Position,
    window: Option<usize>,
) -> Result<ValueSlice, ToolError> {
    let c = center.resolve(series, "center")?;
    let w = window.unwrap_or(DEFAULT_WINDOW);
    let s = c.saturating_sub(w);
    let e = (c + w).min(series.len() - 1);
    Ok(ValueSlice::build(series, (0..series.dim()).collect(), s, e))
}

pub fn get_channel_values(
    series: &TimeSeriesRecord,
    channel: &str,
    start: Option<&Position>,
    end: Option<&Position>,
) -> Result<ValueSlice, ToolError> {
    get_values(series, Some(channel), start, end)
}

pub fn get_all_channels(
    series: &TimeSeriesRecord,
    start: Option<&Position>,
    end: Option<&Position>,
) -> Result<ValueSlice, ToolError> {
    get_values(series, None, start, end)
}

/// Events of one kind across all channels, ordered by position then channel.
pub fn get_features(series: &TimeSeriesRecord, kind: &str) -> Result<Vec<FeatureEvent>, ToolError> {
    let kind = FeatureKind::parse(kind).ok_or_else(|| ToolError::UnknownOption {
        what: "feature type",
        token: kind.to_string(),
        options: FeatureKind::ALL.iter().map(|k| k.as_str()).collect(),
    })?;
    let mut events: Vec<FeatureEvent> = series
        .channels
        .iter()
        .enumerate()
        .flat_map(|(ch, v)| features::detect(v, ch, kind))
        .collect();
    events.sort_by_key(|e| (e.position, e.channel));
    Ok(events)
}

pub fn render_features(series: &TimeSeriesRecord, events: &[FeatureEvent]) -> String {
    if events.is_empty() {
        return "no events detected".to_string();
    }
    let header = "kind,channel,position,timestamp,value,magnitude,span";
    let lines = events
        .iter()
        .map(|e| {
            format!(
                "{},{},{},{},{},{},{}",
                e.kind.as_str(),
                series.channel_name(e.channel),
                e.position,
                series
                    .timestamp(e.position)
                    .map(ToString::to_string)
                    .unwrap_or_default(),
                fmt_num(e.value),
                fmt_num(e.magnitude),
                e.span.map(|(a, b)| format!("{a}-{b}")).unwrap_or_default()
            )
        })
        .collect();
    bound_lines(header, lines)
}

pub fn get_frequency_features(series: &TimeSeriesRecord) -> Result<SpectralSummary, ToolError> {
    if series.len() < MIN_SPECTRAL_LENGTH {
        return Err(ToolError::TooShort { len: series.len() });
    }
    let gran = series.granularity.as_deref().and_then(Granularity::parse);
    Ok(SpectralSummary {
        channels: series
            .channels
            .iter()
            .enumerate()
            .map(|(ch, v)| spectral::summarize_channel(v, ch, series.channel_name(ch), gran.as_ref()))
            .collect(),
    })
}

impl SpectralSummary {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.channels {
            let _ = write!(out, "channel {}", c.name);
            if let Some(err) = &c.error {
                let _ = writeln!(out, ": error: {err}");
                continue;
            }
            let _ = writeln!(out, " (total power {}):", fmt_num(c.total_power));
            if c.peaks.is_empty() {
                out.push_str("  no spectral peaks\n");
            }
            for p in &c.peaks {
                let _ = write!(
                    out,
                    "  #{} frequency={} cycles/sample period={} samples",
                    p.rank,
                    fmt_num(p.frequency),
                    p.period
                );
                if let Some(native) = &p.period_native {
                    let _ = write!(out, " (~{native})");
                }
                let _ = writeln!(out, " power={}", fmt_num(p.power));
            }
        }
        bound_text(out.trim_end())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IndicatorParams {
    pub macd: Option<MacdParams>,
    pub bollinger: Option<BollingerParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorTable {
    pub channel: usize,
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<(usize, Vec<Option<f64>>)>,
    pub notes: Vec<String>,
}

impl IndicatorTable {
    pub fn render(&self) -> String {
        let mut header = format!("channel {}\nindex", self.name);
        for c in &self.columns {
            header.push(',');
            header.push_str(c);
        }
        for n in &self.notes {
            header.insert_str(0, &format!("note: {n}\n"));
        }
        let lines = self
            .rows
            .iter()
            .map(|(i, vals)| {
                let mut line = i.to_string();
                for v in vals {
                    line.push(',');
                    line.push_str(&fmt_opt(*v, "n/a"));
                }
                line
            })
            .collect();
        bound_lines(&header, lines)
    }
}

/// MACD and/or Bollinger columns for `channel` (default 0) over a range.
/// With `name` omitted both are computed; one that lacks warm-up is skipped
/// with a note unless it was requested explicitly.
pub fn get_indicator(
    series: &TimeSeriesRecord,
    name: Option<&str>,
    channel: Option<&str>,
    start: Option<&Position>,
    end: Option<&Position>,
    params: &IndicatorParams,
) -> Result<IndicatorTable, ToolError> {
    let kinds: Vec<IndicatorKind> = match name {
        Some(n) => vec![IndicatorKind::parse(n).ok_or_else(|| ToolError::UnknownOption {
            what: "indicator",
            token: n.to_string(),
            options: vec!["MACD", "BOLLINGER"],
        })?],
        None => vec![IndicatorKind::Macd, IndicatorKind::Bollinger],
    };
    let ch = match channel {
        Some(key) => resolve_channel(series, key)?,
        None => 0,
    };
    let (s, e) = resolve_range(series, start, end)?;
    let values = &series.channels[ch];
    let t = values.len();
    let macd_p = params.macd.unwrap_or_default();
    let boll_p = params.bollinger.unwrap_or_default();

    let mut columns: Vec<String> = Vec::new();
    let mut cols: Vec<Vec<Option<f64>>> = Vec::new();
    let mut notes = Vec::new();
    for kind in &kinds {
        let need = match kind {
            IndicatorKind::Macd => macd_p.warm_up(),
            IndicatorKind::Bollinger => boll_p.window,
        };
        if t < need {
            let err = ToolError::WarmUp {
                name: kind.as_str(),
                need,
                len: t,
            };
            if name.is_some() {
                return Err(err);
            }
            notes.push(err.to_string());
            continue;
        }
        match kind {
            IndicatorKind::Macd => {
                let rows = indicators::macd(values, macd_p);
                columns.extend(["macd", "signal", "histogram"].map(String::from));
                cols.push(rows.iter().map(|r| r.macd).collect());
                cols.push(rows.iter().map(|r| r.signal).collect());
                cols.push(rows.iter().map(|r| r.histogram).collect());
            }
            IndicatorKind::Bollinger => {
                let rows = indicators::bollinger(values, boll_p);
                columns.extend(["bb_middle", "bb_upper", "bb_lower"].map(String::from));
                cols.push(rows.iter().map(|r| r.middle).collect());
                cols.push(rows.iter().map(|r| r.upper).collect());
                cols.push(rows.iter().map(|r| r.lower).collect());
            }
        }
    }
    if cols.is_empty() {
        return Err(ToolError::WarmUp {
            name: "indicators",
            need: macd_p.warm_up().min(boll_p.window),
            len: t,
        });
    }
    let rows = (s..=e)
        .map(|i| (i, cols.iter().map(|c| c[i]).collect()))
        .collect();
    Ok(IndicatorTable {
        channel: ch,
        name: series.channel_name(ch),
        columns,
        rows,
        notes,
    })
}

impl SeriesInfo {
    pub fn render(&self) -> String {
        let mut out = format!("length T={}, channels d={}", self.length, self.dim);
        if let Some(g) = &self.granularity {
            let _ = write!(out, ", granularity {g}");
        }
        if let (Some(a), Some(b)) = (&self.start_timestamp, &self.end_timestamp) {
            let _ = write!(out, ", time {a} .. {b}");
        }
        out.push('\n');
        for s in &self.stats {
            let _ = writeln!(
                out,
                "{}: min={} max={} mean={} std={} first={} last={} missing={}",
                s.name,
                fmt_opt(s.min, "n/a"),
                fmt_opt(s.max, "n/a"),
                fmt_opt(s.mean, "n/a"),
                fmt_opt(s.std, "n/a"),
                fmt_opt(s.first, "n/a"),
                fmt_opt(s.last, "n/a"),
                s.missing
            );
        }
        let counts: Vec<String> = self
            .feature_counts
            .iter()
            .map(|(k, n)| format!("{}={n}", k.as_str()))
            .collect();
        let _ = write!(out, "detected features: {}", counts.join(" "));
        bound_text(&out)
    }
}

/// Shortest round-trip formatting, with up to 6 decimals for long fractions.
pub fn fmt_num(v: f64) -> String {
    let s = format!("{v}");
    if s.len() > 12 && v.is_finite() && v.abs() < 1e15 {
        let r = format!("{v:.6}");
        let r = r.trim_end_matches('0').trim_end_matches('.');
        if r == "-0" {
            return "0".to_string();
        }
        return r.to_string();
    }
    s
}

fn fmt_opt(v: Option<f64>, none: &str) -> String {
    v.map(fmt_num).unwrap_or_else(|| none.to_string())
}

/// Keeps the header and as many head/tail lines as fit, with an elision marker.
pub fn bound_lines(header: &str, lines: Vec<String>) -> String {
    let full_len = header.len() + lines.iter().map(|l| l.len() + 1).sum::<usize>();
    if full_len + 1 <= MAX_RESULT_CHARS {
        let mut out = header.to_string();
        for l in &lines {
            out.push('\n');
            out.push_str(l);
        }
        return out;
    }
    let budget = MAX_RESULT_CHARS.saturating_sub(header.len() + 60);
    let half = budget / 2;
    let mut head = Vec::new();
    let mut used = 0;
    for l in &lines {
        if used + l.len() + 1 > half {
            break;
        }
        used += l.len() + 1;
        head.push(l.as_str());
    }
    let mut tail = Vec::new();
    used = 0;
    for l in lines[head.len()..].iter().rev() {
        if used + l.len() + 1 > half {
            break;
        }
        used += l.len() + 1;
        tail.push(l.as_str());
    }
    tail.reverse();
    let elided = lines.len() - head.len() - tail.len();
    let mut out = header.to_string();
    for l in head {
        out.push('\n');
        out.push_str(l);
    }
    let _ = write!(out, "\n... [{elided} rows elided] ...");
    for l in tail {
        out.push('\n');
        out.push_str(l);
    }
    bound_text(&out)
}

/// Hard cap for free-form tool text.
pub fn bound_text(text: &str) -> String {
    if text.len() <= MAX_RESULT_CHARS {
        return text.to_string();
    }
    let marker = "\n... [truncated] ...\n";
    let keep = (MAX_RESULT_CHARS - marker.len()) / 2;
    let mut head_end = keep;
    while !text.is_char_boundary(head_end) {
        head_end -= 1;
    }
    let mut tail_start = text.len() - keep;
    while !text.is_char_boundary(tail_start) {
        tail_start += 1;
    }
    format!("{}{marker}{}", &text[..head_end], &text[tail_start..])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(i: i64) -> Position {
        Position::Index(i)
    }

    #[test]
    fn info_basics() {
        let s = TimeSeriesRecord::univariate("a", vec![1.0, f64::NAN, 3.0]);
        let info = get_info(&s);
        assert_eq!(info.length, 3);
        assert_eq!(info.stats[0].mean, Some(2.0));
        assert_eq!(info.stats[0].missing, 1);
        assert_eq!(get_info(&s).render(), info.render());
    }

    #[test]
    fn values_slice_and_errors() {
        let s = TimeSeriesRecord::univariate("a", vec![10.0, 20.0, 30.0, 40.0]);
        let v = get_values(&s, None, Some(&idx(1)), Some(&idx(2))).unwrap();
        assert_eq!(v.column(0), vec![20.0, 30.0]);
        let err = get_values(&s, None, Some(&idx(3)), Some(&idx(1))).unwrap_err();
        assert!(matches!(err, ToolError::Range(_)));
        let err = get_values(&s, None, Some(&idx(0)), Some(&idx(9))).unwrap_err();
        assert!(err.to_string().contains("0..=3"));
    }

    #[test]
    fn around_clamps() {
        let s = TimeSeriesRecord::univariate("a", (0..10).map(f64::from).collect());
        let v = get_around(&s, &idx(0), Some(3)).unwrap();
        assert_eq!(v.rows.first().unwrap().index, 0);
        assert_eq!(v.rows.last().unwrap().index, 3);
        let v = get_around(&s, &idx(5), Some(2)).unwrap();
        assert_eq!((v.rows[0].index, v.rows.last().unwrap().index), (3, 7));
        let v = get_around(&s, &idx(5), None).unwrap();
        assert_eq!((v.rows[0].index, v.rows.last().unwrap().index), (0, 9));
    }

    #[test]
    fn channel_lookup() {
        let mut s = TimeSeriesRecord::multivariate("m", vec![vec![1.0], vec![2.0], vec![3.0]]);
        s.channel_names = vec!["open".into(), "high".into(), "low".into()];
        let v = get_channel_values(&s, "1", Some(&idx(0)), Some(&idx(0))).unwrap();
        assert_eq!(v.column(0), vec![2.0]);
        let v = get_channel_values(&s, "Low", None, None).unwrap();
        assert_eq!(v.column(0), vec![3.0]);
        let msg = get_channel_values(&s, "5", None, None).unwrap_err().to_string();
        assert!(msg.contains("open") && msg.contains("high") && msg.contains("low"));
    }

    #[test]
    fn unknown_feature_kind_lists_options() {
        let s = TimeSeriesRecord::univariate("a", vec![1.0, 2.0]);
        let msg = get_features(&s, "spike").unwrap_err().to_string();
        assert!(msg.contains("peak") && msg.contains("anomaly"));
    }

    #[test]
    fn too_short_for_spectrum() {
        let s = TimeSeriesRecord::univariate("a", vec![1.0; 7]);
        let msg = get_frequency_features(&s).unwrap_err().to_string();
        assert!(msg.contains("too short for spectral analysis"));
    }

    #[test]
    fn long_slices_are_bounded() {
        let s = TimeSeriesRecord::univariate("a", (0..5000).map(|i| i as f64 * 0.37).collect());
        let text = get_values(&s, None, None, None).unwrap().render();
        assert!(text.len() <= MAX_RESULT_CHARS);
        assert!(text.contains("rows elided"));
        assert!(text.contains("\n0,0\n"));
        assert!(text.ends_with(&format!("4999,{}", fmt_num(4999.0 * 0.37))));
    }

    #[test]
    fn indicator_warm_up_message() {
        let s = TimeSeriesRecord::univariate("a", vec![1.0; 22]);
        let msg = get_indicator(&s, Some("MACD"), None, None, None, &IndicatorParams::default())
            .unwrap_err()
            .to_string();
        assert!(msg.contains("26"));
        // Bollinger alone still works when both are requested implicitly.
        let t = get_indicator(&s, None, None, None, None, &IndicatorParams::default()).unwrap();
        assert_eq!(t.columns, vec!["bb_middle", "bb_upper", "bb_lower"]);
        assert_eq!(t.notes.len(), 1);
    }
}
