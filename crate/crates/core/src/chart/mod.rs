//! Deterministic PNG rendering of the time-domain and frequency-domain charts.

mod canvas;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{ChartRef, TimeSeriesRecord};
use crate::series::{self, spectral, FeatureKind, ToolError};
use canvas::{Canvas, Rgb};

pub const PANEL_WIDTH: u32 = 1200;
pub const PANEL_HEIGHT: u32 = 400;
/// Above this many points a channel is drawn from min-max buckets.
pub const DOWNSAMPLE_THRESHOLD: usize = 2000;
/// Peaks are labelled only when their power exceeds this multiple of the median.
pub const PEAK_LABEL_FACTOR: f64 = 4.0;

const MARGIN_LEFT: i32 = 90;
const MARGIN_RIGHT: i32 = 30;
const MARGIN_TOP: i32 = 36;
const MARGIN_BOTTOM: i32 = 48;

const WHITE: Rgb = [255, 255, 255];
const BLACK: Rgb = [0, 0, 0];
const GRID: Rgb = [225, 225, 225];
const LINE: Rgb = [31, 119, 180];
const PEAK: Rgb = [214, 39, 40];
const VALLEY: Rgb = [44, 160, 44];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartKind {
    Time,
    Frequency,
}

impl ChartKind {
    pub fn suffix(self) -> &'static str {
        match self {
            ChartKind::Time => "time",
            ChartKind::Frequency => "freq",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub channel: usize,
    pub position: usize,
    pub kind: FeatureKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakLabel {
    pub channel: usize,
    pub frequency: f64,
    pub period: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartArtifact {
    pub kind: ChartKind,
    pub png: Vec<u8>,
    pub width: u32,
    pub height: u32,
    pub panels: usize,
    /// Hex sha256 of `png`.
    pub digest: String,
    pub caption: Option<String>,
    pub markers: Vec<Marker>,
    pub peak_labels: Vec<PeakLabel>,
}

impl ChartArtifact {
    pub fn file_name(&self, instance_id: &str) -> String {
        format!("{instance_id}.{}.png", self.kind.suffix())
    }

    pub fn data_url(&self) -> String {
        format!(
            "data:image/png;base64,{}",
            base64::engine::general_purpose::STANDARD.encode(&self.png)
        )
    }

    pub fn to_ref(&self, instance_id: &str) -> ChartRef {
        ChartRef {
            kind: self.kind.suffix().to_string(),
            file_name: self.file_name(instance_id),
            width: self.width,
            height: self.height,
            digest: self.digest.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChartError {
    #[error("cannot render: {0}")]
    Render(String),
    #[error("{0}")]
    TooShort(String),
}

pub fn render_time_chart(series: &TimeSeriesRecord) -> Result<ChartArtifact, ChartError> {
    let t = series.len();
    if t == 0 || series.channels.iter().any(Vec::is_empty) {
        return Err(ChartError::Render("zero-length channel".into()));
    }
    let d = series.dim();
    let mut canvas = Canvas::new(PANEL_WIDTH, PANEL_HEIGHT * d as u32, WHITE);
    let mut markers = Vec::new();
    let downsampled = t > DOWNSAMPLE_THRESHOLD;
    let caption = downsampled.then(|| {
        format!(
            "downsampled for display: {t} points as {} min-max buckets",
            DOWNSAMPLE_THRESHOLD / 2
        )
    });

    for (ch, values) in series.channels.iter().enumerate() {
        let top = (ch as u32 * PANEL_HEIGHT) as i32;
        let summary = series::stats::summarize(values);
        let (lo, hi) = padded_range(summary.min, summary.max);
        let frame = Frame {
            left: MARGIN_LEFT,
            right: PANEL_WIDTH as i32 - MARGIN_RIGHT,
            top: top + MARGIN_TOP,
            bottom: top + PANEL_HEIGHT as i32 - MARGIN_BOTTOM,
            x0: 0.0,
            x1: (t.max(2) - 1) as f64,
            y0: lo,
            y1: hi,
        };
        draw_axes(&mut canvas, &frame);
        canvas.text(MARGIN_LEFT, top + 10, &series.channel_name(ch), BLACK, 2);
        if let Some(c) = &caption {
            let w = canvas::text_width(c, 1);
            canvas.text(frame.right - w, top + 14, c, BLACK, 1);
        }
        for k in 0..=4 {
            let v = lo + (hi - lo) * k as f64 / 4.0;
            let y = frame.py(v);
            canvas.hline(frame.left + 1, frame.right, y, GRID);
            let label = short(v);
            let w = canvas::text_width(&label, 1);
            canvas.text(frame.left - 6 - w, y - 4, &label, BLACK, 1);
        }
        for k in 0..=5 {
            let idx = ((t - 1) as f64 * k as f64 / 5.0).round() as usize;
            let x = frame.px(idx as f64);
            canvas.vline(x, frame.bottom, frame.bottom + 4, BLACK);
            let mut label = series
                .timestamp(idx)
                .map(ToString::to_string)
                .unwrap_or_else(|| idx.to_string());
            label.truncate(19);
            let w = canvas::text_width(&label, 1);
            canvas.text((x - w / 2).clamp(0, PANEL_WIDTH as i32 - w), frame.bottom + 10, &label, BLACK, 1);
        }
        let axis = if series.timestamps.is_some() { "time" } else { "index" };
        canvas.text(
            (frame.left + frame.right) / 2 - 20,
            frame.bottom + 28,
            axis,
            BLACK,
            1,
        );

        let points: Vec<(usize, f64)> = if downsampled {
            minmax_buckets(values, DOWNSAMPLE_THRESHOLD / 2)
        } else {
            values.iter().copied().enumerate().collect()
        };
        let mut prev: Option<(i32, i32)> = None;
        for (i, v) in points {
            if v.is_nan() {
                prev = None;
                continue;
            }
            let p = (frame.px(i as f64), frame.py(v));
            match prev {
                Some(q) => canvas.thick_line(q, p, LINE),
                None => canvas.dot(p.0, p.1, 1, LINE),
            }
            prev = Some(p);
        }

        for kind in [FeatureKind::Peak, FeatureKind::Valley] {
            for ev in series::features::detect(values, ch, kind) {
                let (x, y) = (frame.px(ev.position as f64), frame.py(ev.value));
                if kind == FeatureKind::Peak {
                    canvas.triangle(x, y - 8, true, PEAK);
                } else {
                    canvas.triangle(x, y + 8, false, VALLEY);
                }
                markers.push(Marker {
                    channel: ch,
                    position: ev.position,
                    kind,
                });
            }
        }
    }
    Ok(finish(ChartKind::Time, canvas, d, caption, markers, Vec::new()))
}

pub fn render_freq_chart(series: &TimeSeriesRecord) -> Result<ChartArtifact, ChartError> {
    let t = series.len();
    if t < series::MIN_SPECTRAL_LENGTH {
        return Err(ChartError::TooShort(ToolError::TooShort { len: t }.to_string()));
    }
    let d = series.dim();
    let mut canvas = Canvas::new(PANEL_WIDTH, PANEL_HEIGHT * d as u32, WHITE);
    let mut labels = Vec::new();

    for (ch, values) in series.channels.iter().enumerate() {
        let top = (ch as u32 * PANEL_HEIGHT) as i32;
        let spectrum = spectral::power_spectrum(values).unwrap_or_default();
        let max_p = spectrum.iter().map(|p| p.1).fold(0.0, f64::max);
        let (lo, hi) = (0.0, if max_p > 0.0 { max_p * 1.15 } else { 1.0 });
        let frame = Frame {
            left: MARGIN_LEFT,
            right: PANEL_WIDTH as i32 - MARGIN_RIGHT,
            top: top + MARGIN_TOP,
            bottom: top + PANEL_HEIGHT as i32 - MARGIN_BOTTOM,
            x0: 0.0,
            x1: 0.5,
            y0: lo,
            y1: hi,
        };
        draw_axes(&mut canvas, &frame);
        canvas.text(
            MARGIN_LEFT,
            top + 10,
            &format!("{} power spectrum", series.channel_name(ch)),
            BLACK,
            2,
        );
        for k in 0..=4 {
            let v = lo + (hi - lo) * k as f64 / 4.0;
            let y = frame.py(v);
            canvas.hline(frame.left + 1, frame.right, y, GRID);
            let label = short(v);
            let w = canvas::text_width(&label, 1);
            canvas.text(frame.left - 6 - w, y - 4, &label, BLACK, 1);
        }
        for k in 0..=5 {
            let f = 0.1 * k as f64;
            let x = frame.px(f);
            canvas.vline(x, frame.bottom, frame.bottom + 4, BLACK);
            let label = short(f);
            let w = canvas::text_width(&label, 1);
            canvas.text(x - w / 2, frame.bottom + 10, &label, BLACK, 1);
        }
        canvas.text(
            (frame.left + frame.right) / 2 - 80,
            frame.bottom + 28,
            "frequency (cycles/sample)",
            BLACK,
            1,
        );

        let mut prev: Option<(i32, i32)> = None;
        for &(f, p) in &spectrum {
            let pt = (frame.px(f), frame.py(p));
            if let Some(q) = prev {
                canvas.thick_line(q, pt, LINE);
            }
            prev = Some(pt);
        }

        let threshold = PEAK_LABEL_FACTOR * median_power(&spectrum);
        for (f, p) in spectral::top_peaks(&spectrum, spectral::TOP_K) {
            if p <= threshold {
                continue;
            }
            let period = (1.0 / f).round();
            let (x, y) = (frame.px(f), frame.py(p));
            canvas.dot(x, y, 3, PEAK);
            let label = format!("P={}", short(period));
            canvas.text(x + 6, y - 12, &label, PEAK, 1);
            labels.push(PeakLabel {
                channel: ch,
                frequency: f,
                period,
            });
        }
    }
    Ok(finish(ChartKind::Frequency, canvas, d, None, Vec::new(), labels))
}

fn median_power(spectrum: &[(f64, f64)]) -> f64 {
    let p: Vec<f64> = spectrum.iter().map(|x| x.1).collect();
    series::stats::median(&p).unwrap_or(0.0)
}

/// Single-panel frequency chart stating why no spectrum is drawn, so the
/// visual analyst still receives both charts.
pub fn render_freq_notice(message: &str) -> ChartArtifact {
    let mut canvas = Canvas::new(PANEL_WIDTH, PANEL_HEIGHT, WHITE);
    canvas.text(MARGIN_LEFT, (PANEL_HEIGHT / 2) as i32, message, BLACK, 2);
    finish(ChartKind::Frequency, canvas, 1, Some(message.to_string()), Vec::new(), Vec::new())
}

/// Both charts for a series; a series too short for a spectrum gets a notice panel.
pub fn render_pair(series: &TimeSeriesRecord) -> Result<[ChartArtifact; 2], ChartError> {
    let time = render_time_chart(series)?;
    let freq = match render_freq_chart(series) {
        Ok(c) => c,
        Err(ChartError::TooShort(msg)) => render_freq_notice(&msg),
        Err(e) => return Err(e),
    };
    Ok([time, freq])
}

fn finish(
    kind: ChartKind,
    canvas: Canvas,
    panels: usize,
    caption: Option<String>,
    markers: Vec<Marker>,
    peak_labels: Vec<PeakLabel>,
) -> ChartArtifact {
    let (width, height) = (canvas.width(), canvas.height());
    let png = canvas.to_png();
    let digest = hex::encode(Sha256::digest(&png));
    ChartArtifact {
        kind,
        png,
        width,
        height,
        panels,
        digest,
        caption,
        markers,
        peak_labels,
    }
}

struct Frame {
    left: i32,
    right: i32,
    top: i32,
    bottom: i32,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> i32 {
        let span = (self.x1 - self.x0).max(f64::MIN_POSITIVE);
        self.left + ((x - self.x0) / span * (self.right - self.left) as f64).round() as i32
    }

    fn py(&self, y: f64) -> i32 {
        let span = (self.y1 - self.y0).max(f64::MIN_POSITIVE);
        self.bottom - ((y - self.y0) / span * (self.bottom - self.top) as f64).round() as i32
    }
}

fn draw_axes(canvas: &mut Canvas, f: &Frame) {
    canvas.hline(f.left, f.right, f.bottom, BLACK);
    canvas.vline(f.left, f.top, f.bottom, BLACK);
}

fn padded_range(min: Option<f64>, max: Option<f64>) -> (f64, f64) {
    match (min, max) {
        (Some(lo), Some(hi)) if hi > lo => {
            let pad = (hi - lo) * 0.08;
            (lo - pad, hi + pad)
        }
        (Some(v), Some(_)) => {
            let pad = if v == 0.0 { 1.0 } else { v.abs() * 0.1 };
            (v - pad, v + pad)
        }
        _ => (0.0, 1.0),
    }
}

/// Min and max of each bucket in index order. Buckets that are all missing
/// contribute a gap.
pub fn minmax_buckets(values: &[f64], buckets: usize) -> Vec<(usize, f64)> {
    let n = values.len();
    let mut out = Vec::with_capacity(buckets * 2);
    for b in 0..buckets {
        let (a, e) = (b * n / buckets, (b + 1) * n / buckets);
        if a >= e {
            continue;
        }
        let mut lo: Option<(usize, f64)> = None;
        let mut hi: Option<(usize, f64)> = None;
        for (i, &v) in values[a..e].iter().enumerate() {
            if v.is_nan() {
                continue;
            }
            if lo.is_none_or(|(_, m)| v < m) {
                lo = Some((a + i, v));
            }
            if hi.is_none_or(|(_, m)| v > m) {
                hi = Some((a + i, v));
            }
        }
        match (lo, hi) {
            (Some(l), Some(h)) if l.0 == h.0 => out.push(l),
            (Some(l), Some(h)) => {
                if l.0 < h.0 {
                    out.extend([l, h]);
                } else {
                    out.extend([h, l]);
                }
            }
            _ => out.push((a, f64::NAN)),
        }
    }
    out
}

fn short(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.abs() >= 1e5 || v.abs() < 1e-3 {
        return format!("{v:.2e}");
    }
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}
