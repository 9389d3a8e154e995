use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::model::DebateTranscript;

/// Per-sample means for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub method: String,
    pub samples: usize,
    pub mean_wall_time_s: f64,
    pub mean_input_tokens: f64,
    pub mean_output_tokens: f64,
    pub mean_cost_usd: f64,
}

/// One row per method, sorted by method name.
pub fn cost_report<'a>(transcripts: impl IntoIterator<Item = &'a DebateTranscript>) -> Vec<CostRow> {
    let mut groups: BTreeMap<&str, Vec<&DebateTranscript>> = BTreeMap::new();
    for t in transcripts {
        groups.entry(t.method.as_str()).or_default().push(t);
    }
    groups
        .into_iter()
        .map(|(method, ts)| {
            let n = ts.len() as f64;
            let mean = |f: &dyn Fn(&DebateTranscript) -> f64| ts.iter().map(|t| f(t)).sum::<f64>() / n;
            CostRow {
                method: method.to_string(),
                samples: ts.len(),
                mean_wall_time_s: mean(&|t| t.cost.wall_time_s),
                mean_input_tokens: mean(&|t| t.cost.input_tokens as f64),
                mean_output_tokens: mean(&|t| t.cost.output_tokens as f64),
                mean_cost_usd: mean(&|t| t.cost.rates.cost(t.cost.input_tokens, t.cost.output_tokens)),
            }
        })
        .collect()
}

pub fn render_cost_table(rows: &[CostRow]) -> String {
    let mut out = format!(
        "{:<14}{:>8}{:>12}{:>14}{:>14}{:>12}\n",
        "method", "samples", "time_s", "input_tok", "output_tok", "cost_usd"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<14}{:>8}{:>12.2}{:>14.1}{:>14.1}{:>12.4}",
            r.method, r.samples, r.mean_wall_time_s, r.mean_input_tokens, r.mean_output_tokens, r.mean_cost_usd
        );
    }
    out
}
