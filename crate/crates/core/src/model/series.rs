use serde::{Deserialize, Serialize};

/// A point on the time axis: either an ISO-8601 style string or an integer index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Timestamp {
    Index(i64),
    Text(String),
}

impl std::fmt::Display for Timestamp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Timestamp::Index(i) => write!(f, "{i}"),
            Timestamp::Text(s) => f.write_str(s),
        }
    }
}

/// The observed sequence: `d` channels of `T` values each.
///
/// Missing values are held as `NaN` in memory and written as `null` on disk.
/// Any other non-finite value is a validation error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeSeriesRecord {
    pub id: String,
    #[serde(with = "missing_as_null")]
    pub channels: Vec<Vec<f64>>,
    #[serde(default)]
    pub channel_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamps: Option<Vec<Timestamp>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub granularity: Option<String>,
}

impl TimeSeriesRecord {
    pub fn univariate(id: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            id: id.into(),
            channels: vec![values],
            channel_names: vec!["value".to_string()],
            timestamps: None,
            granularity: None,
        }
    }

    pub fn multivariate(id: impl Into<String>, channels: Vec<Vec<f64>>) -> Self {
        let channel_names = (0..channels.len()).map(|i| format!("ch{i}")).collect();
        Self {
            id: id.into(),
            channels,
            channel_names,
            timestamps: None,
            granularity: None,
        }
    }

    /// Number of time steps `T` (taken from the first channel).
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of channels `d`.
    pub fn dim(&self) -> usize {
        self.channels.len()
    }

    pub fn channel_name(&self, ch: usize) -> String {
        self.channel_names
            .get(ch)
            .cloned()
            .unwrap_or_else(|| format!("ch{ch}"))
    }

    /// Resolves a channel by index or by name.
    pub fn resolve_channel(&self, key: &str) -> Option<usize> {
        if let Ok(i) = key.trim().parse::<usize>() {
            return (i < self.dim()).then_some(i);
        }
        let key = key.trim();
        (0..self.dim()).find(|&i| self.channel_name(i).eq_ignore_ascii_case(key))
    }

    pub fn timestamp(&self, t: usize) -> Option<&Timestamp> {
        self.timestamps.as_ref().and_then(|ts| ts.get(t))
    }

    /// Maps a timestamp label back to its index.
    pub fn index_of_timestamp(&self, label: &str) -> Option<usize> {
        let ts = self.timestamps.as_ref()?;
        ts.iter().position(|t| t.to_string() == label.trim())
    }

    pub fn is_missing(v: f64) -> bool {
        v.is_nan()
    }

    pub(crate) fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.channels.is_empty() {
            out.push("series must have at least one channel (d >= 1)".to_string());
            return out;
        }
        let t = self.len();
        if t == 0 {
            out.push("series must have at least one time step (T >= 1)".to_string());
        }
        for (i, ch) in self.channels.iter().enumerate() {
            if ch.len() != t {
                out.push(format!(
                    "channel length mismatch: channel {i} has {} values, expected T={t}",
                    ch.len()
                ));
            }
            if ch.iter().any(|v| v.is_infinite()) {
                out.push(format!("channel {i} contains an infinite value"));
            }
        }
        if !self.channel_names.is_empty() && self.channel_names.len() != self.dim() {
            out.push(format!(
                "channel_names has {} entries but d={}",
                self.channel_names.len(),
                self.dim()
            ));
        }
        if let Some(ts) = &self.timestamps {
            if ts.len() != t {
                out.push(format!("timestamps has {} entries but T={t}", ts.len()));
            }
        }
        out
    }
}

impl PartialEq for TimeSeriesRecord {
    // Missing (NaN) cells compare equal to each other.
    fn eq(&self, other: &Self) -> bool {
        let same_values = self.channels.len() == other.channels.len()
            && self.channels.iter().zip(&other.channels).all(|(a, b)| {
                a.len() == b.len()
                    && a.iter()
                        .zip(b)
                        .all(|(x, y)| x == y || (x.is_nan() && y.is_nan()))
            });
        same_values
            && self.id == other.id
            && self.channel_names == other.channel_names
            && self.timestamps == other.timestamps
            && self.granularity == other.granularity
    }
}

mod missing_as_null {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(channels: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        let wire: Vec<Vec<Option<f64>>> = channels
            .iter()
            .map(|ch| ch.iter().map(|v| (!v.is_nan()).then_some(*v)).collect())
            .collect();
        wire.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        let wire: Vec<Vec<Option<f64>>> = Vec::deserialize(d)?;
        Ok(wire
            .into_iter()
            .map(|ch| ch.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect())
            .collect())
    }
}
