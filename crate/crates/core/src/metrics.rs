//! Derived per-sample metrics: jitter windows, the page-load-time model,
//! probe-burst statistics and threshold gates.

use alloc::vec::Vec;

use crate::error::{contract, domain, Error, Result};
use crate::sample::{Metric, PltModel, ProbeSpec, Rtt, Sample, Thresholds};

/// Number of RTT readings in one jitter window.
pub const JITTER_WINDOW: usize = 5;

/// Mean absolute successive difference over exactly five RTT readings.
pub fn jitter_from_window(rtts: &[Rtt]) -> Result<f64> {
    if rtts.len() != JITTER_WINDOW {
        return Err(contract(alloc::format!(
            "jitter window needs exactly {JITTER_WINDOW} readings, got {}",
            rtts.len()
        )));
    }
    let mut values = [0.0f64; JITTER_WINDOW];
    for (slot, rtt) in values.iter_mut().zip(rtts) {
        *slot = rtt.millis().ok_or(Error::TimeoutInWindow)?;
        if !slot.is_finite() {
            return Err(domain("jitter window readings must be finite"));
        }
    }
    let total: f64 = values.windows(2).map(|w| libm::fabs(w[1] - w[0])).sum();
    Ok(total / (JITTER_WINDOW - 1) as f64)
}

/// Modeled page load time in milliseconds for a given RTT and downlink rate.
pub fn plt_model_ms(rtt_ms: f64, dl_kbps: f64, model: &PltModel) -> Result<f64> {
    if !rtt_ms.is_finite() {
        return Err(domain("plt model needs a finite rtt"));
    }
    if !(dl_kbps > 0.0) {
        return Err(domain(alloc::format!("downlink throughput must be > 0, got {dl_kbps}")));
    }
    // bits / (kbit/s) = ms
    let serialization_ms = (model.page_bytes as f64 * 8.0) / dl_kbps;
    Ok(model.handshake_rtts * rtt_ms + serialization_ms)
}

/// The binary performance gate for one sample and one metric.
///
/// Boundaries are inclusive on the passing side.
pub fn meets_threshold(sample: &Sample, th: &Thresholds, metric: Metric) -> Result<bool> {
    let missing = || Error::MissingMetric(metric);
    let pass = match metric {
        Metric::Rtt => matches!(sample.rtt, Rtt::Millis(v) if v <= th.rtt_ms),
        Metric::Availability => matches!(sample.rtt, Rtt::Millis(v) if v <= th.availability_rtt_ms),
        Metric::Jitter => sample.jitter_ms.ok_or_else(missing)? <= th.jitter_ms,
        Metric::Loss => sample.loss.ok_or_else(missing)? <= th.loss_max,
        Metric::Plt => sample.plt_ms.ok_or_else(missing)? <= th.plt_ms,
        Metric::Downlink => sample.dl_kbps.ok_or_else(missing)? >= th.downlink_kbps,
        Metric::Uplink => sample.ul_kbps.ok_or_else(missing)? >= th.uplink_kbps,
    };
    Ok(pass)
}

/// Summary of one probe burst.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurstStats {
    /// Absent when every packet was lost.
    pub rtt_median: Option<f64>,
    /// Absent when fewer than five packets survived.
    pub jitter: Option<f64>,
    pub loss: f64,
}

pub fn burst_stats(outcomes: &[Rtt], spec: &ProbeSpec) -> Result<BurstStats> {
    spec.validate()?;
    if outcomes.is_empty() {
        return Err(contract("burst has no packet outcomes"));
    }
    if outcomes.len() != spec.packets_per_burst as usize {
        return Err(contract(alloc::format!(
            "burst has {} outcomes but the probe sends {} packets",
            outcomes.len(),
            spec.packets_per_burst
        )));
    }
    let survivors: Vec<Rtt> = outcomes
        .iter()
        .map(|r| spec.normalize(*r))
        .filter(|r| !r.is_timeout())
        .collect();
    let lost = outcomes.len() - survivors.len();
    let loss = lost as f64 / spec.packets_per_burst as f64;

    let mut sorted: Vec<f64> = survivors.iter().filter_map(Rtt::millis).collect();
    sorted.sort_by(f64::total_cmp);
    let rtt_median = match sorted.len() {
        0 => None,
        n if n % 2 == 1 => Some(sorted[n / 2]),
        n => Some((sorted[n / 2 - 1] + sorted[n / 2]) / 2.0),
    };
    let jitter = if survivors.len() >= JITTER_WINDOW {
        Some(jitter_from_window(&survivors[..JITTER_WINDOW])?)
    } else {
        None
    };
    Ok(BurstStats {
        rtt_median,
        jitter,
        loss,
    })
}
