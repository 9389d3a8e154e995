//! Token usage and cost accounting.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};

/// Token counts reported for one model turn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub input_tokens: u64,
    pub output_tokens: u64,
}

impl Usage {
    pub fn new(input_tokens: u64, output_tokens: u64) -> Self {
        Self {
            input_tokens,
            output_tokens,
        }
    }
}

impl std::ops::Add for Usage {
    type Output = Usage;

    fn add(self, rhs: Usage) -> Usage {
        Usage::new(
            self.input_tokens + rhs.input_tokens,
            self.output_tokens + rhs.output_tokens,
        )
    }
}

/// Per-million-token prices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub input_per_million: f64,
    pub output_per_million: f64,
}

impl Default for Rates {
    /// gpt-4.1-mini list prices.
    fn default() -> Self {
        Self {
            input_per_million: 0.40,
            output_per_million: 1.60,
        }
    }
}

impl Rates {
    pub fn cost(&self, input_tokens: u64, output_tokens: u64) -> f64 {
        input_tokens as f64 * self.input_per_million / 1e6
            + output_tokens as f64 * self.output_per_million / 1e6
    }
}

/// Accumulated usage for one run. `estimated_cost` is always recomputed from
/// the token totals, never summed, so it stays exact for the stored totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostLedger {
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub wall_time_s: f64,
    pub rates: Rates,
    pub estimated_cost: f64,
}

impl CostLedger {
    pub fn new(rates: Rates) -> Self {
        Self {
            input_tokens: 0,
            output_tokens: 0,
            wall_time_s: 0.0,
            rates,
            estimated_cost: 0.0,
        }
    }

    pub fn record_usage(mut self, usage: Usage) -> Self {
        self.add_usage(usage);
        self
    }

    pub fn add_usage(&mut self, usage: Usage) {
        self.input_tokens += usage.input_tokens;
        self.output_tokens += usage.output_tokens;
        self.estimated_cost = self.rates.cost(self.input_tokens, self.output_tokens);
    }

    pub fn usage(&self) -> Usage {
        Usage::new(self.input_tokens, self.output_tokens)
    }
}

/// A ledger shared by concurrently running agents of one instance.
#[derive(Debug)]
pub struct SharedLedger(Mutex<CostLedger>);

impl SharedLedger {
    pub fn new(rates: Rates) -> Self {
        Self(Mutex::new(CostLedger::new(rates)))
    }

    pub fn record(&self, usage: Usage) {
        self.0.lock().expect("ledger lock poisoned").add_usage(usage);
    }

    pub fn snapshot(&self) -> CostLedger {
        self.0.lock().expect("ledger lock poisoned").clone()
    }
}
