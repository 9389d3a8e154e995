//! Mean-removed, Hann-windowed power spectrum and its dominant peaks.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::granularity::Granularity;
use super::stats;

pub const MIN_SPECTRAL_LENGTH: usize = 8;
pub const TOP_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralPeak {
    /// Cycles per sample, in (0, 0.5].
    pub frequency: f64,
    /// `round(1 / frequency)` samples.
    pub period: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period_native: Option<String>,
    pub power: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpectrum {
    pub channel: usize,
    pub name: String,
    pub peaks: Vec<SpectralPeak>,
    pub total_power: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub channels: Vec<ChannelSpectrum>,
}

/// One-sided power spectrum over bins 1..=T/2 as (frequency, power) pairs.
///
/// Missing cells are filled with the channel mean, i.e. zero after mean removal.
/// Returns `None` for an all-missing channel.
pub fn power_spectrum(values: &[f64]) -> Option<Vec<(f64, f64)>> {
    let n = values.len();
    let mean = stats::mean(values)?;
    let centered: Vec<f64> = values
        .iter()
        .map(|v| if v.is_nan() { 0.0 } else { v - mean })
        .collect();
    let energy: f64 = centered.iter().map(|v| v * v).sum();
    let scale: f64 = values
        .iter()
        .filter(|v| !v.is_nan())
        .map(|v| v * v)
        .sum::<f64>();
    let flat = energy <= 1e-24 * scale.max(f64::MIN_POSITIVE);

    let mut buf: Vec<Complex<f64>> = centered
        .iter()
        .enumerate()
        .map(|(t, v)| {
            // periodic Hann
            let w = 0.5 - 0.5 * (2.0 * PI * t as f64 / n as f64).cos();
            Complex::new(if flat { 0.0 } else { v * w }, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    Some(
        (1..=n / 2)
            .map(|k| (k as f64 / n as f64, buf[k].norm_sqr()))
            .collect(),
    )
}

/// Local maxima of the power spectrum, strongest first, at most `k` of them.
pub fn top_peaks(spectrum: &[(f64, f64)], k: usize) -> Vec<(f64, f64)> {
    let max_power = spectrum.iter().map(|p| p.1).fold(0.0, f64::max);
    if max_power <= 0.0 {
        return Vec::new();
    }
    let floor = 1e-12 * max_power;
    let mut peaks: Vec<(f64, f64)> = (0..spectrum.len())
        .filter(|&i| {
            let p = spectrum[i].1;
            let left_ok = i == 0 || p > spectrum[i - 1].1;
            let right_ok = i + 1 == spectrum.len() || p > spectrum[i + 1].1;
            p > floor && left_ok && right_ok
        })
        .map(|i| spectrum[i])
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
    peaks.truncate(k);
    peaks
}

pub fn summarize_channel(
    values: &[f64],
    channel: usize,
    name: String,
    granularity: Option<&Granularity>,
) -> ChannelSpectrum {
    let Some(spectrum) = power_spectrum(values) else {
        return ChannelSpectrum {
            channel,
            name,
            peaks: Vec::new(),
            total_power: 0.0,
            error: Some("channel has no observed values".to_string()),
        };
    };
    let total_power = spectrum.iter().map(|p| p.1).sum();
    let peaks = top_peaks(&spectrum, TOP_K)
        .into_iter()
        .enumerate()
        .map(|(i, (frequency, power))| {
            let period = (1.0 / frequency).round();
            SpectralPeak {
                frequency,
                period,
                period_native: granularity.map(|g| g.describe(1.0 / frequency)),
                power,
                rank: i + 1,
            }
        })
        .collect();
    ChannelSpectrum {
        channel,
        name,
        peaks,
        total_power,
        error: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(n: usize, bin: usize, amp: f64) -> Vec<f64> {
        (0..n)
            .map(|t| amp * (2.0 * PI * bin as f64 * t as f64 / n as f64).sin())
            .collect()
    }

    #[test]
    fn bin_aligned_sine_dominates() {
        let s = summarize_channel(&sine(64, 8, 1.0), 0, "x".into(), None);
        assert_eq!(s.peaks[0].frequency, 0.125);
        assert_eq!(s.peaks[0].period, 8.0);
        assert_eq!(s.peaks[0].rank, 1);
    }

    #[test]
    fn constant_has_no_peaks() {
        let s = summarize_channel(&[3.3; 64], 0, "x".into(), None);
        assert!(s.peaks.is_empty());
    }

    #[test]
    fn all_missing_is_a_channel_error() {
        let s = summarize_channel(&[f64::NAN; 16], 0, "x".into(), None);
        assert!(s.error.is_some());
    }
}
