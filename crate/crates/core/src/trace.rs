use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{contract, Result};
use crate::sample::Sample;

/// Nominal sampling interval: one ping every three seconds.
pub const DEFAULT_TICK_MS: u64 = 3_000;

/// Time-ordered samples of one provider.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkTrace {
    provider_id: String,
    samples: Vec<Sample>,
    tick_ms: u64,
    extra_hops: u32,
}

impl LinkTrace {
    /// Builds a trace, checking that timestamps strictly increase and that
    /// every sample is well-formed.
    pub fn new(provider_id: impl Into<String>, samples: Vec<Sample>, tick_ms: u64) -> Result<Self> {
        if tick_ms == 0 {
            return Err(contract("tick_ms must be > 0"));
        }
        for (i, pair) in samples.windows(2).enumerate() {
            if pair[1].t_ms <= pair[0].t_ms {
                return Err(contract(alloc::format!(
                    "sample {} at t={} does not follow t={}",
                    i + 1,
                    pair[1].t_ms,
                    pair[0].t_ms
                )));
            }
        }
        for s in &samples {
            s.validate()?;
        }
        Ok(LinkTrace {
            provider_id: provider_id.into(),
            samples,
            tick_ms,
            extra_hops: 0,
        })
    }

    pub fn provider_id(&self) -> &str {
        &self.provider_id
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }

    pub fn tick_ms(&self) -> u64 {
        self.tick_ms
    }

    /// Additional route hops recorded by the supply-side transform.
    pub fn extra_hops(&self) -> u32 {
        self.extra_hops
    }

    pub fn with_extra_hops(mut self, hops: u32) -> Self {
        self.extra_hops = hops;
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn start_ms(&self) -> Option<u64> {
        self.samples.first().map(|s| s.t_ms)
    }

    pub fn end_ms(&self) -> Option<u64> {
        self.samples.last().map(|s| s.t_ms)
    }

    /// Mean latency cost, with timeouts and over-bound readings costed at
    /// `penalty_ms`. `None` for an empty trace.
    pub fn mean_rtt_cost(&self, penalty_ms: f64) -> Option<f64> {
        if self.samples.is_empty() {
            return None;
        }
        let total: f64 = self.samples.iter().map(|s| s.rtt.cost(penalty_ms)).sum();
        Some(total / self.samples.len() as f64)
    }
}
