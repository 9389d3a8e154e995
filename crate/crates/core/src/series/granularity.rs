/// Sampling step parsed from strings like `1 hour`, `5 min` or `100 Hz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Granularity {
    pub step_seconds: f64,
}

impl Granularity {
    pub fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        let split = text
            .find(|c: char| !(c.is_ascii_digit() || c == '.'))
            .unwrap_or(text.len());
        let (num, unit) = text.split_at(split);
        let n: f64 = if num.is_empty() { 1.0 } else { num.parse().ok()? };
        if n <= 0.0 {
            return None;
        }
        let unit = unit.trim().to_ascii_lowercase();
        let step_seconds = match unit.as_str() {
            "ns" | "nanosecond" | "nanoseconds" => n * 1e-9,
            "us" | "µs" | "microsecond" | "microseconds" => n * 1e-6,
            "ms" | "millisecond" | "milliseconds" => n * 1e-3,
            "s" | "sec" | "secs" | "second" | "seconds" => n,
            "m" | "min" | "mins" | "minute" | "minutes" => n * 60.0,
            "h" | "hr" | "hrs" | "hour" | "hours" => n * 3600.0,
            "d" | "day" | "days" => n * 86_400.0,
            "w" | "week" | "weeks" => n * 604_800.0,
            "hz" => 1.0 / n,
            "khz" => 1.0 / (n * 1e3),
            "mhz" => 1.0 / (n * 1e6),
            _ => return None,
        };
        Some(Self { step_seconds })
    }

    /// Human-readable duration of `samples` steps.
    pub fn describe(&self, samples: f64) -> String {
        let secs = samples * self.step_seconds;
        let (value, unit) = if secs >= 86_400.0 {
            (secs / 86_400.0, "days")
        } else if secs >= 3_600.0 {
            (secs / 3_600.0, "hours")
        } else if secs >= 60.0 {
            (secs / 60.0, "minutes")
        } else if secs >= 1.0 {
            (secs, "seconds")
        } else if secs >= 1e-3 {
            (secs * 1e3, "ms")
        } else if secs >= 1e-6 {
            (secs * 1e6, "µs")
        } else {
            (secs * 1e9, "ns")
        };
        format!("{value:.2} {unit}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_steps_and_rates() {
        assert_eq!(Granularity::parse("1 hour").unwrap().step_seconds, 3600.0);
        assert_eq!(Granularity::parse("5 min").unwrap().step_seconds, 300.0);
        assert_eq!(Granularity::parse("100 Hz").unwrap().step_seconds, 0.01);
        assert!(Granularity::parse("variable").is_none());
    }

    #[test]
    fn describes_periods() {
        let g = Granularity::parse("1 hour").unwrap();
        assert_eq!(g.describe(24.0), "1.00 days");
        assert_eq!(g.describe(8.0), "8.00 hours");
    }
}
