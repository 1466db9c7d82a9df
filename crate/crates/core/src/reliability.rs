//! Failure-process models, n-way redundancy and trace-level reliability.
//!
//! Model time is dimensionless here; the link generator interprets it in
//! seconds.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{contract, domain, Error, Result};
use crate::links::AlignedTraces;
use crate::metrics::meets_threshold;
use crate::sample::{Metric, Sample, Thresholds};
use crate::trace::LinkTrace;

/// Parameters of the linear hazard-rate congestion model `t·φ·e^{-p}`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct HazardParams {
    /// Hazard rate per inherent failure, `> 0`.
    pub phi: f64,
    /// Rate of change of traffic density, in `(-1, 1)`.
    pub p: f64,
}

impl HazardParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.phi > 0.0 && self.phi.is_finite()) {
            return Err(domain(alloc::format!("phi must be > 0, got {}", self.phi)));
        }
        if !(self.p > -1.0 && self.p < 1.0) {
            return Err(domain(alloc::format!("p must lie in (-1, 1), got {}", self.p)));
        }
        Ok(())
    }

    /// `∫_a^b t·φ·e^{-p} dt`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        0.5 * self.phi * libm::exp(-self.p) * (b * b - a * a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct WeibullParams {
    /// Shape.
    pub beta: f64,
    /// Scale.
    pub eta: f64,
}

impl WeibullParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(domain(alloc::format!("beta must be > 0, got {}", self.beta)));
        }
        if !(self.eta > 0.0) {
            return Err(domain(alloc::format!("eta must be > 0, got {}", self.eta)));
        }
        Ok(())
    }

    /// Cumulative hazard `(t/η)^β`.
    pub fn cumulative_hazard(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        libm::pow(t / self.eta, self.beta)
    }

    /// Hazard function `(β/η)(t/η)^{β-1}`.
    pub fn hazard(&self, t: f64) -> f64 {
        (self.beta / self.eta) * libm::pow(t / self.eta, self.beta - 1.0)
    }
}

/// Per-network failure rate and redundancy degree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RedundancyParams {
    lambda: f64,
    n: u32,
}

impl RedundancyParams {
    pub fn new(lambda: f64, n: u32) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(domain(alloc::format!("lambda must be >= 0, got {lambda}")));
        }
        if n < 1 {
            return Err(domain("n must be >= 1"));
        }
        Ok(RedundancyParams { lambda, n })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n(&self) -> u32 {
        self.n
    }
}

/// Congestion hazard `t·φ·e^{-p}` at time `t`.
pub fn hazard_congestion(t: f64, hp: &HazardParams) -> Result<f64> {
    hp.validate()?;
    if !(t >= 0.0) {
        return Err(domain(alloc::format!("time must be >= 0, got {t}")));
    }
    Ok(t * hp.phi * libm::exp(-hp.p))
}

/// Weibull probability density at `t`.
///
/// At `t = 0` the density is infinite for `β < 1`; that case is a domain error.
pub fn weibull_availability(t: f64, wp: &WeibullParams) -> Result<f64> {
    wp.validate()?;
    if !(t >= 0.0) {
        return Err(domain(alloc::format!("time must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return if wp.beta < 1.0 {
            Err(domain("Weibull density is unbounded at t = 0 for beta < 1"))
        } else if wp.beta == 1.0 {
            Ok(1.0 / wp.eta)
        } else {
            Ok(0.0)
        };
    }
    let x = t / wp.eta;
    Ok((wp.beta / wp.eta) * libm::pow(x, wp.beta - 1.0) * libm::exp(-libm::pow(x, wp.beta)))
}

/// Integrated failure rate over a finite horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulativeFailure {
    /// Raw integral; may exceed one for long horizons.
    pub lambda: f64,
}

impl CumulativeFailure {
    pub fn exceeds_unity(&self) -> bool {
        self.lambda > 1.0
    }

    /// `1 - λ` clamped to `[0, 1]`.
    pub fn reliability(&self) -> f64 {
        linear_reliability(self.lambda)
    }
}

/// Trapezoidal integral of congestion hazard plus Weibull density over
/// `[0, horizon]`. The final panel is shortened when `step` does not divide
/// the horizon.
pub fn cumulative_failure(hp: &HazardParams, wp: &WeibullParams, horizon: f64, step: f64) -> Result<CumulativeFailure> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(domain(alloc::format!("horizon must be > 0, got {horizon}")));
    }
    if !(step > 0.0 && step <= horizon) {
        return Err(domain(alloc::format!("step must lie in (0, horizon], got {step}")));
    }
    let f = |t: f64| -> Result<f64> { Ok(hazard_congestion(t, hp)? + weibull_availability(t, wp)?) };
    let panels = libm::ceil(horizon / step) as u64;
    let mut total = 0.0;
    let mut left = 0.0;
    let mut f_left = f(left)?;
    for i in 1..=panels {
        let right = if i == panels { horizon } else { i as f64 * step };
        let f_right = f(right)?;
        total += 0.5 * (right - left) * (f_left + f_right);
        left = right;
        f_left = f_right;
    }
    Ok(CumulativeFailure { lambda: total })
}

/// `1 - λ`, clamped to `[0, 1]`.
///
/// This is the direct complement form; all redundancy math uses the
/// survival form `e^{-λ}` instead.
pub fn linear_reliability(lambda: f64) -> f64 {
    (1.0 - lambda).clamp(0.0, 1.0)
}

/// Performance-constrained reliability: `r` when the gate is open, else 0.
pub fn performance_constrained_q(gate: bool, r: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(domain(alloc::format!("reliability must lie in [0, 1], got {r}")));
    }
    Ok(if gate { r } else { 0.0 })
}

/// Reliability of `n` parallel networks with identical failure rate:
/// `1 - (1 - e^{-λ})^n`.
pub fn parallel_reliability(rp: &RedundancyParams) -> f64 {
    let fail = -libm::expm1(-rp.lambda);
    1.0 - libm::pow(fail, rp.n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mttf {
    Finite(f64),
    /// Zero failure rate: the system never fails.
    Infinite,
}

impl Mttf {
    pub fn finite(&self) -> Option<f64> {
        match *self {
            Mttf::Finite(v) => Some(v),
            Mttf::Infinite => None,
        }
    }
}

/// Harmonic number `H_n = Σ_{k=1..n} 1/k`.
pub fn harmonic(n: u32) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}

/// `H_n` as a reduced fraction `(numerator, denominator)`.
///
/// Exact for `n <= 40`; larger values overflow `u128` and return `None`.
pub fn harmonic_fraction(n: u32) -> Option<(u128, u128)> {
    fn gcd(mut a: u128, mut b: u128) -> u128 {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    }
    let (mut num, mut den) = (0u128, 1u128);
    for k in 1..=n as u128 {
        // num/den + 1/k
        num = num.checked_mul(k)?.checked_add(den)?;
        den = den.checked_mul(k)?;
        let g = gcd(num, den);
        num /= g;
        den /= g;
    }
    Some((num, den))
}

/// Mean time to failure of `n` parallel networks: `H_n / λ`.
pub fn mttf(rp: &RedundancyParams) -> Mttf {
    if rp.lambda == 0.0 {
        return Mttf::Infinite;
    }
    Mttf::Finite(harmonic(rp.n) / rp.lambda)
}

/// One row of the reliability / MTTF curve table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub lambda: f64,
    pub n: u32,
    pub reliability: f64,
    pub mttf_times_lambda: f64,
}

/// Reliability and normalized MTTF for every `(λ, n)` with `n` in `1..=n_max`,
/// ordered by grid position then `n`.
pub fn redundancy_curves(lambda_grid: &[f64], n_max: u32) -> Result<Vec<CurveRow>> {
    if lambda_grid.is_empty() {
        return Err(contract("lambda grid is empty"));
    }
    if n_max < 1 {
        return Err(contract("n_max must be >= 1"));
    }
    let mut rows = Vec::with_capacity(lambda_grid.len() * n_max as usize);
    for &lambda in lambda_grid {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(domain(alloc::format!("grid lambda must lie in (0, 1], got {lambda}")));
        }
        for n in 1..=n_max {
            let rp = RedundancyParams::new(lambda, n)?;
            rows.push(CurveRow {
                lambda,
                n,
                reliability: parallel_reliability(&rp),
                mttf_times_lambda: harmonic(n),
            });
        }
    }
    Ok(rows)
}

/// A sample counts toward Q only when the link is available and the metric
/// passes. Samples lacking the metric fail.
fn q_gate(sample: &Sample, th: &Thresholds, metric: Metric) -> bool {
    let available = meets_threshold(sample, th, Metric::Availability).unwrap_or(false);
    available && meets_threshold(sample, th, metric).unwrap_or(false)
}

fn carries(sample: &Sample, metric: Metric) -> bool {
    match metric {
        Metric::Rtt | Metric::Availability => true,
        Metric::Jitter => sample.jitter_ms.is_some(),
        Metric::Loss => sample.loss.is_some(),
        Metric::Uplink => sample.ul_kbps.is_some(),
        Metric::Downlink => sample.dl_kbps.is_some(),
        Metric::Plt => sample.plt_ms.is_some(),
    }
}

/// Fraction of samples for which the link was available.
pub fn empirical_r_s(trace: &LinkTrace, th: &Thresholds) -> Result<f64> {
    empirical_q_s(trace, th, Metric::Availability)
}

/// Fraction of samples that were available and met the metric's threshold.
pub fn empirical_q_s(trace: &LinkTrace, th: &Thresholds, metric: Metric) -> Result<f64> {
    if trace.is_empty() {
        return Err(contract(alloc::format!(
            "trace `{}` has no samples",
            trace.provider_id()
        )));
    }
    if !trace.samples().iter().any(|s| carries(s, metric)) {
        return Err(Error::MissingMetric(metric));
    }
    let passing = trace.samples().iter().filter(|s| q_gate(s, th, metric)).count();
    Ok(passing as f64 / trace.len() as f64)
}

/// Any-network Q: fraction of ticks where at least one provider passes.
/// GAP cells fail.
pub fn dsm_q_s(at: &AlignedTraces, th: &Thresholds, metric: Metric) -> Result<f64> {
    let ticks = at.timeline().len();
    if ticks == 0 || at.providers().is_empty() {
        return Err(contract("aligned set is empty"));
    }
    let any_carries =
        (0..at.providers().len()).any(|p| (0..ticks).any(|k| at.cell(p, k).is_some_and(|s| carries(s, metric))));
    if !any_carries {
        return Err(Error::MissingMetric(metric));
    }
    let passing = (0..ticks)
        .filter(|&k| (0..at.providers().len()).any(|p| at.cell(p, k).is_some_and(|s| q_gate(s, th, metric))))
        .count();
    Ok(passing as f64 / ticks as f64)
}

/// Reliability summary for a provider or a set of providers.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityReport {
    pub provider_set: Vec<String>,
    pub r_s: f64,
    /// Only metrics the data carries appear.
    pub q_s: BTreeMap<Metric, f64>,
    /// Mean available time between failures, in milliseconds. `None` when
    /// no failure was observed.
    pub mttf_ms: Option<f64>,
}

fn empirical_mttf_ms(available: impl Iterator<Item = bool>, tick_ms: u64) -> Option<f64> {
    let (mut up_ticks, mut failures, mut prev_up) = (0u64, 0u64, false);
    for up in available {
        if up {
            up_ticks += 1;
        } else if prev_up {
            failures += 1;
        }
        prev_up = up;
    }
    match (up_ticks, failures) {
        (0, _) => Some(0.0),
        (_, 0) => None,
        (up, f) => Some((up * tick_ms) as f64 / f as f64),
    }
}

impl ReliabilityReport {
    pub fn from_trace(trace: &LinkTrace, th: &Thresholds) -> Result<Self> {
        let r_s = empirical_r_s(trace, th)?;
        let mut q_s = BTreeMap::new();
        for metric in Metric::ALL {
            match empirical_q_s(trace, th, metric) {
                Ok(v) => {
                    q_s.insert(metric, v);
                }
                Err(Error::MissingMetric(_)) => {}
                Err(e) => return Err(e),
            }
        }
        let available = trace
            .samples()
            .iter()
            .map(|s| meets_threshold(s, th, Metric::Availability).unwrap_or(false));
        Ok(ReliabilityReport {
            provider_set: alloc::vec![trace.provider_id().to_string()],
            r_s,
            q_s,
            mttf_ms: empirical_mttf_ms(available, trace.tick_ms()),
        })
    }

    /// Any-network reliability over every provider of an aligned set.
    pub fn from_aligned(at: &AlignedTraces, th: &Thresholds) -> Result<Self> {
        let r_s = dsm_q_s(at, th, Metric::Availability)?;
        let mut q_s = BTreeMap::new();
        for metric in Metric::ALL {
            match dsm_q_s(at, th, metric) {
                Ok(v) => {
                    q_s.insert(metric, v);
                }
                Err(Error::MissingMetric(_)) => {}
                Err(e) => return Err(e),
            }
        }
        let providers = at.providers().len();
        let available = (0..at.timeline().len())
            .map(|k| (0..providers).any(|p| at.cell(p, k).is_some_and(|s| q_gate(s, th, Metric::Availability))));
        Ok(ReliabilityReport {
            provider_set: at.providers().to_vec(),
            r_s,
            q_s,
            mttf_ms: empirical_mttf_ms(available, at.tick_ms()),
        })
    }
}
