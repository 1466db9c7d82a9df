//! Link-trace synthesis, timeline alignment and the supply-side route penalty.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use crate::error::{contract, domain, Error, Result};
use crate::metrics::{jitter_from_window, plt_model_ms, JITTER_WINDOW};
use crate::reliability::{HazardParams, WeibullParams};
use crate::sample::{NetType, PltModel, Rtt, Sample};
use crate::trace::LinkTrace;

/// Upper bound on the per-tick congestion probability.
pub const CONGESTION_CAP: f64 = 0.95;

/// Stochastic link model. Model time for the hazard and Weibull processes
/// is elapsed seconds since scenario start.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SyntheticLinkSpec {
    pub base_rtt_ms: f64,
    /// Shape of the multiplicative lognormal RTT noise; 0 disables noise.
    pub rtt_noise_sigma: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_multiplier"))]
    pub congestion_rtt_multiplier: f64,
    pub base_dl_kbps: f64,
    pub base_ul_kbps: f64,
    pub hazard: HazardParams,
    pub weibull: WeibullParams,
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
}

#[cfg(feature = "serde")]
fn default_multiplier() -> f64 {
    4.0
}

impl SyntheticLinkSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("base_rtt_ms", self.base_rtt_ms),
            ("base_dl_kbps", self.base_dl_kbps),
            ("base_ul_kbps", self.base_ul_kbps),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(alloc::format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.rtt_noise_sigma >= 0.0 && self.rtt_noise_sigma.is_finite()) {
            return Err(domain("rtt_noise_sigma must be >= 0"));
        }
        if !(self.congestion_rtt_multiplier >= 1.0 && self.congestion_rtt_multiplier.is_finite()) {
            return Err(domain("congestion_rtt_multiplier must be >= 1"));
        }
        self.hazard.validate()?;
        self.weibull.validate()
    }
}

/// Probability that tick `[t, t + Δ)` is congested: the congestion hazard
/// integrated over the tick, capped at [`CONGESTION_CAP`].
pub fn congestion_probability(hp: &HazardParams, t_ms: u64, tick_ms: u64) -> f64 {
    let a = t_ms as f64 / 1000.0;
    let b = (t_ms + tick_ms) as f64 / 1000.0;
    hp.integral(a, b).min(CONGESTION_CAP)
}

/// Probability that the link fails during tick `[t, t + Δ)`:
/// `1 - exp(-(H(t + Δ) - H(t)))` for Weibull cumulative hazard `H`.
pub fn outage_probability(wp: &WeibullParams, t_ms: u64, tick_ms: u64) -> f64 {
    let a = t_ms as f64 / 1000.0;
    let b = (t_ms + tick_ms) as f64 / 1000.0;
    -libm::expm1(-(wp.cumulative_hazard(b) - wp.cumulative_hazard(a)))
}

/// Draws a deterministic trace of `floor(duration / tick)` samples at
/// `t = 0, tick, 2·tick, ...`.
pub fn generate_trace(
    provider_id: &str,
    spec: &SyntheticLinkSpec,
    duration_ms: u64,
    tick_ms: u64,
) -> Result<LinkTrace> {
    spec.validate()?;
    if tick_ms == 0 {
        return Err(contract("tick_ms must be > 0"));
    }
    let count = duration_ms / tick_ms;
    if count == 0 {
        return Err(Error::EmptyTrace(alloc::format!(
            "duration {duration_ms} ms is shorter than one {tick_ms} ms tick"
        )));
    }
    let noise = LogNormal::new(0.0, spec.rtt_noise_sigma).map_err(|e| domain(alloc::format!("rtt noise: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let plt_model = PltModel::default();
    let mut samples = Vec::with_capacity(count as usize);
    let mut recent: Vec<Rtt> = Vec::with_capacity(JITTER_WINDOW);

    for k in 0..count {
        let t_ms = k * tick_ms;
        // fixed draw order per tick keeps streams stable across parameter changes
        let out_draw: f64 = rng.random();
        let congestion_draw: f64 = rng.random();
        let noise_factor = noise.sample(&mut rng);

        let out = out_draw < outage_probability(&spec.weibull, t_ms, tick_ms);
        let congested = congestion_draw < congestion_probability(&spec.hazard, t_ms, tick_ms);
        let multiplier = if congested { spec.congestion_rtt_multiplier } else { 1.0 };

        let mut s = Sample::new(t_ms, provider_id, Rtt::Timeout);
        if out {
            s.loss = Some(1.0);
            s.net_type = Some(NetType::None);
        } else {
            let rtt = spec.base_rtt_ms * noise_factor * multiplier;
            let dl = spec.base_dl_kbps / multiplier;
            s.rtt = Rtt::Millis(rtt);
            s.loss = Some(0.0);
            s.dl_kbps = Some(dl);
            s.ul_kbps = Some(spec.base_ul_kbps / multiplier);
            s.plt_ms = Some(plt_model_ms(rtt, dl, &plt_model)?);
            s.net_type = Some(NetType::Lte);
        }

        if recent.len() == JITTER_WINDOW {
            recent.remove(0);
        }
        recent.push(s.rtt);
        if recent.len() == JITTER_WINDOW && !s.rtt.is_timeout() {
            s.jitter_ms = jitter_from_window(&recent).ok();
        }
        samples.push(s);
    }
    LinkTrace::new(provider_id, samples, tick_ms)
}

/// Several traces resampled onto one tick timeline.
///
/// Each cell refers to the latest source sample at or before the tick, or
/// is a GAP when that sample is older than the staleness bound.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedTraces {
    timeline: Vec<u64>,
    providers: Vec<String>,
    /// Per provider: source samples from the last one at or before the
    /// timeline start onwards.
    sources: Vec<LinkTrace>,
    /// `cells[p][k]` indexes into `sources[p]`; `None` is a GAP.
    cells: Vec<Vec<Option<usize>>>,
    tick_ms: u64,
    staleness_bound_ms: u64,
}

impl AlignedTraces {
    pub fn timeline(&self) -> &[u64] {
        &self.timeline
    }

    pub fn providers(&self) -> &[String] {
        &self.providers
    }

    pub fn tick_ms(&self) -> u64 {
        self.tick_ms
    }

    pub fn staleness_bound_ms(&self) -> u64 {
        self.staleness_bound_ms
    }

    pub fn provider_index(&self, id: &str) -> Option<usize> {
        self.providers.iter().position(|p| p == id)
    }

    /// Sample of provider `p` at tick index `k`; `None` is a GAP.
    pub fn cell(&self, p: usize, k: usize) -> Option<&Sample> {
        self.cells[p][k].map(|i| &self.sources[p].samples()[i])
    }

    pub fn gap_count(&self, p: usize) -> usize {
        self.cells[p].iter().filter(|c| c.is_none()).count()
    }

    /// The source traces the cells were drawn from.
    pub fn as_traces(&self) -> Vec<LinkTrace> {
        self.sources.clone()
    }

    /// Restricts the set to the named providers, keeping the timeline.
    pub fn select(&self, ids: &[&str]) -> Result<AlignedTraces> {
        if ids.is_empty() {
            return Err(contract("provider selection is empty"));
        }
        let mut out = AlignedTraces {
            timeline: self.timeline.clone(),
            providers: Vec::new(),
            sources: Vec::new(),
            cells: Vec::new(),
            tick_ms: self.tick_ms,
            staleness_bound_ms: self.staleness_bound_ms,
        };
        for id in ids {
            let p = self
                .provider_index(id)
                .ok_or_else(|| Error::Alignment(alloc::format!("unknown provider `{id}`")))?;
            if out.providers.iter().any(|q| q == id) {
                return Err(contract(alloc::format!("provider `{id}` selected twice")));
            }
            out.providers.push(self.providers[p].clone());
            out.sources.push(self.sources[p].clone());
            out.cells.push(self.cells[p].clone());
        }
        Ok(out)
    }
}

/// Default staleness bound: two ticks.
pub fn default_staleness_ms(tick_ms: u64) -> u64 {
    2 * tick_ms
}

/// Aligns traces on a common tick timeline running from the latest start to
/// the earliest end.
pub fn align(traces: &[LinkTrace], tick_ms: u64, staleness_bound_ms: u64) -> Result<AlignedTraces> {
    if traces.is_empty() {
        return Err(contract("no traces to align"));
    }
    if tick_ms == 0 {
        return Err(contract("tick_ms must be > 0"));
    }
    for (i, t) in traces.iter().enumerate() {
        if t.is_empty() {
            return Err(Error::Alignment(alloc::format!("trace `{}` is empty", t.provider_id())));
        }
        if traces[..i].iter().any(|o| o.provider_id() == t.provider_id()) {
            return Err(Error::Alignment(alloc::format!(
                "provider `{}` appears twice",
                t.provider_id()
            )));
        }
    }
    let start = traces.iter().filter_map(LinkTrace::start_ms).max().unwrap_or(0);
    let end = traces.iter().filter_map(LinkTrace::end_ms).min().unwrap_or(0);
    if start > end {
        return Err(Error::Alignment(alloc::format!(
            "traces do not overlap: latest start {start} ms is after earliest end {end} ms"
        )));
    }
    let timeline: Vec<u64> = (0..=(end - start) / tick_ms).map(|k| start + k * tick_ms).collect();

    let mut sources = Vec::with_capacity(traces.len());
    let mut cells = Vec::with_capacity(traces.len());
    for trace in traces {
        let samples = trace.samples();
        // last sample at or before the timeline start
        let first = samples.partition_point(|s| s.t_ms <= start).saturating_sub(1);
        let kept = samples[first..].to_vec();
        let mut column = Vec::with_capacity(timeline.len());
        let mut idx = 0usize;
        for &t in &timeline {
            while idx + 1 < kept.len() && kept[idx + 1].t_ms <= t {
                idx += 1;
            }
            let s = &kept[idx];
            let fresh = s.t_ms <= t && t - s.t_ms <= staleness_bound_ms;
            column.push(fresh.then_some(idx));
        }
        let source = LinkTrace::new(trace.provider_id(), kept, trace.tick_ms())?.with_extra_hops(trace.extra_hops());
        sources.push(source);
        cells.push(column);
    }
    Ok(AlignedTraces {
        timeline,
        providers: traces.iter().map(|t| t.provider_id().to_string()).collect(),
        sources,
        cells,
        tick_ms,
        staleness_bound_ms,
    })
}

/// Models routing through a single upstream core: every measured RTT grows
/// by `extra_rtt_ms`, page load times grow by the handshake round trips
/// that the extra delay adds, and the hop count is recorded.
pub fn ssm_transform(trace: &LinkTrace, extra_rtt_ms: f64, extra_hops: u32, plt_model: &PltModel) -> Result<LinkTrace> {
    if !(extra_rtt_ms >= 0.0 && extra_rtt_ms.is_finite()) {
        return Err(domain(alloc::format!("extra_rtt_ms must be >= 0, got {extra_rtt_ms}")));
    }
    let samples = trace
        .samples()
        .iter()
        .map(|s| {
            let mut s = s.clone();
            if let Rtt::Millis(v) = s.rtt {
                s.rtt = Rtt::Millis(v + extra_rtt_ms);
                s.plt_ms = s.plt_ms.map(|p| p + plt_model.handshake_rtts * extra_rtt_ms);
            }
            s
        })
        .collect();
    Ok(LinkTrace::new(trace.provider_id(), samples, trace.tick_ms())?.with_extra_hops(trace.extra_hops() + extra_hops))
}
