use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsdebate_core::model::TimeSeriesRecord;
use tsdebate_core::series::{self, features, indicators, spectral};

/// Independent prominence: for each side, the lowest point between the
/// candidate and the nearest strictly higher sample (or the border).
fn oracle_prominence(x: &[f64], i: usize) -> f64 {
    let h = x[i];
    let left_stop = (0..i).filter(|&j| x[j] > h).max().map_or(0, |j| j + 1);
    let right_stop = (i + 1..x.len()).filter(|&j| x[j] > h).min().unwrap_or(x.len());
    let left = x[left_stop..=i].iter().copied().fold(f64::INFINITY, f64::min);
    let right = x[i..right_stop].iter().copied().fold(f64::INFINITY, f64::min);
    h - left.max(right)
}

fn oracle_peaks(x: &[f64]) -> BTreeSet<usize> {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return BTreeSet::new();
    }
    let threshold = features::PROMINENCE_FRACTION * (hi - lo);
    (1..x.len().saturating_sub(1))
        .filter(|&i| x[i] > x[i - 1] && x[i] > x[i + 1])
        .filter(|&i| oracle_prominence(x, i) >= threshold)
        .collect()
}

fn positions(events: &[features::FeatureEvent]) -> BTreeSet<usize> {
    events.iter().map(|e| e.position).collect()
}

#[test]
fn extrema_match_brute_force_on_200_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..200 {
        let t = rng.random_range(1..=64);
        // One decimal place so plateaus and ties occur.
        let x: Vec<f64> = (0..t).map(|_| (rng.random_range(-50.0..50.0_f64) * 10.0).round() / 10.0).collect();
        let peaks = features::detect(&x, 0, features::FeatureKind::Peak);
        assert_eq!(positions(&peaks), oracle_peaks(&x), "case {case} peaks: {x:?}");
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let valleys = features::detect(&x, 0, features::FeatureKind::Valley);
        assert_eq!(positions(&valleys), oracle_peaks(&neg), "case {case} valleys: {x:?}");
        for e in &peaks {
            assert_eq!(e.magnitude, oracle_prominence(&x, e.position));
        }
    }
}

#[test]
fn dominant_frequency_is_exact_on_bin_aligned_sinusoids() {
    for n in [16usize, 64, 100, 128] {
        for k in 1..n / 2 {
            let x: Vec<f64> = (0..n)
                .map(|t| 5.0 + (2.0 * std::f64::consts::PI * k as f64 * t as f64 / n as f64).sin())
                .collect();
            let s = spectral::summarize_channel(&x, 0, "v".into(), None);
            let top = &s.peaks[0];
            assert_eq!(top.frequency, k as f64 / n as f64, "n={n} k={k}");
        }
    }
    let x: Vec<f64> = (0..64).map(|t| (2.0 * std::f64::consts::PI * 8.0 * t as f64 / 64.0).cos()).collect();
    let summary = series::get_frequency_features(&TimeSeriesRecord::univariate("s", x)).unwrap();
    assert_eq!(summary.channels[0].peaks[0].frequency, 0.125);
    assert_eq!(summary.channels[0].peaks[0].period, 8.0);
}

#[test]
fn indicators_on_constant_series_have_zero_spread() {
    let x = vec![42.5; 80];
    let p = indicators::MacdParams::default();
    let rows = indicators::macd(&x, p);
    let ready = p.warm_up() - 1 + p.signal - 1;
    for (i, r) in rows.iter().enumerate() {
        if i >= ready {
            assert_eq!(r.macd, Some(0.0), "macd at {i}");
            assert_eq!(r.signal, Some(0.0));
            assert_eq!(r.histogram, Some(0.0));
        }
    }
    let bp = indicators::BollingerParams::default();
    for (i, r) in indicators::bollinger(&x, bp).iter().enumerate() {
        if i + 1 >= bp.window {
            assert_eq!(r.middle, Some(42.5));
            assert_eq!(r.upper, r.lower, "spread at {i}");
            assert_eq!(r.upper, Some(42.5));
        } else {
            assert!(r.middle.is_none());
        }
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn ema_and_bollinger_match_direct_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x: Vec<f64> = (0..60).map(|_| rng.random_range(0.0..10.0)).collect();
    let e = indicators::ema(&x, 10);
    let alpha = 2.0 / 11.0;
    let mut level = x[0];
    for (i, v) in x.iter().enumerate() {
        if i > 0 {
            level = alpha * v + (1.0 - alpha) * level;
        }
        assert!(rel_close(e[i].unwrap(), level, 1e-9));
    }
    let bp = indicators::BollingerParams { window: 7, k: 2.0 };
    for (i, r) in indicators::bollinger(&x, bp).iter().enumerate().skip(6) {
        let w = &x[i - 6..=i];
        let m = w.iter().sum::<f64>() / 7.0;
        let sd = (w.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 7.0).sqrt();
        assert!(rel_close(r.middle.unwrap(), m, 1e-9));
        assert!(rel_close(r.upper.unwrap(), m + 2.0 * sd, 1e-9));
    }
}

#[test]
fn summary_statistics_match_two_pass_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let n = rng.random_range(1..200);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1e3..1e3)).collect();
        let s = series::stats::summarize(&x);
        let m = x.iter().sum::<f64>() / n as f64;
        let sd = (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!(rel_close(s.mean.unwrap(), m, 1e-9));
        assert!(rel_close(s.std.unwrap(), sd, 1e-9));
    }
}
