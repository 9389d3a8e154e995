//! MACD and Bollinger bands. Warm-up rows are `None`.

use serde::{Deserialize, Serialize};

use super::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndicatorKind {
    Macd,
    Bollinger,
}

impl IndicatorKind {
    pub fn parse(token: &str) -> Option<Self> {
        match token.trim().trim_matches(['\'', '"']).to_ascii_uppercase().as_str() {
            "MACD" => Some(IndicatorKind::Macd),
            "BOLLINGER" | "BOLLINGER BANDS" | "BOLLINGER_BANDS" | "BB" => {
                Some(IndicatorKind::Bollinger)
            }
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            IndicatorKind::Macd => "MACD",
            IndicatorKind::Bollinger => "BOLLINGER",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacdParams {
    pub fast: usize,
    pub slow: usize,
    pub signal: usize,
}

impl Default for MacdParams {
    fn default() -> Self {
        Self {
            fast: 12,
            slow: 26,
            signal: 9,
        }
    }
}

impl MacdParams {
    /// Series length needed before the MACD line is defined.
    pub fn warm_up(&self) -> usize {
        self.slow.max(self.fast)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BollingerParams {
    pub window: usize,
    pub k: f64,
}

impl Default for BollingerParams {
    fn default() -> Self {
        Self { window: 20, k: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacdRow {
    pub macd: Option<f64>,
    pub signal: Option<f64>,
    pub histogram: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BollingerRow {
    pub middle: Option<f64>,
    pub upper: Option<f64>,
    pub lower: Option<f64>,
}

/// EMA seeded with the first observed value. Missing cells carry the previous
/// level forward and yield `None` until the first observation.
pub fn ema(values: &[f64], span: usize) -> Vec<Option<f64>> {
    let alpha = 2.0 / (span as f64 + 1.0);
    let mut level: Option<f64> = None;
    values
        .iter()
        .map(|&x| {
            if !x.is_nan() {
                level = Some(match level {
                    None => x,
                    Some(e) => e + alpha * (x - e),
                });
            }
            level
        })
        .collect()
}

pub fn macd(values: &[f64], p: MacdParams) -> Vec<MacdRow> {
    let fast = ema(values, p.fast);
    let slow = ema(values, p.slow);
    let ready = p.warm_up().saturating_sub(1);
    let line: Vec<Option<f64>> = (0..values.len())
        .map(|i| match (fast[i], slow[i]) {
            (Some(f), Some(s)) if i >= ready => Some(f - s),
            _ => None,
        })
        .collect();

    let alpha = 2.0 / (p.signal as f64 + 1.0);
    let signal_ready = ready + p.signal.saturating_sub(1);
    let mut level: Option<f64> = None;
    line.iter()
        .enumerate()
        .map(|(i, &m)| {
            if let Some(m) = m {
                level = Some(match level {
                    None => m,
                    Some(e) => e + alpha * (m - e),
                });
            }
            let signal = level.filter(|_| i >= signal_ready && m.is_some());
            MacdRow {
                macd: m,
                signal,
                histogram: m.zip(signal).map(|(m, s)| m - s),
            }
        })
        .collect()
}

pub fn bollinger(values: &[f64], p: BollingerParams) -> Vec<BollingerRow> {
    (0..values.len())
        .map(|i| {
            if p.window == 0 || i + 1 < p.window {
                return BollingerRow {
                    middle: None,
                    upper: None,
                    lower: None,
                };
            }
            let s = stats::summarize(&values[i + 1 - p.window..=i]);
            match (s.mean, s.std) {
                (Some(m), Some(sd)) => BollingerRow {
                    middle: Some(m),
                    upper: Some(m + p.k * sd),
                    lower: Some(m - p.k * sd),
                },
                _ => BollingerRow {
                    middle: None,
                    upper: None,
                    lower: None,
                },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_macd_is_zero_after_warm_up() {
        let rows = macd(&[7.25; 60], MacdParams::default());
        assert!(rows[24].macd.is_none());
        assert_eq!(rows[25].macd, Some(0.0));
        assert!(rows[32].signal.is_none());
        for r in &rows[33..] {
            assert_eq!((r.macd, r.signal, r.histogram), (Some(0.0), Some(0.0), Some(0.0)));
        }
    }

    #[test]
    fn constant_bollinger_collapses() {
        let rows = bollinger(&[3.0; 30], BollingerParams::default());
        assert!(rows[18].middle.is_none());
        for r in &rows[19..] {
            assert_eq!((r.middle, r.upper, r.lower), (Some(3.0), Some(3.0), Some(3.0)));
        }
    }

    #[test]
    fn indicator_tokens() {
        assert_eq!(IndicatorKind::parse("macd"), Some(IndicatorKind::Macd));
        assert_eq!(IndicatorKind::parse("Bollinger"), Some(IndicatorKind::Bollinger));
        assert_eq!(IndicatorKind::parse("RSI"), None);
    }
}
