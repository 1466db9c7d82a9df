//! Random trace generators shared by the integration tests.
#![allow(dead_code)]

use moc_core::{
    align, generate_trace, AlignedTraces, HazardParams, LinkTrace, NetType, Rtt, Sample, SyntheticLinkSpec,
    WeibullParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TICK_MS: u64 = 3000;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

pub fn random_spec(rng: &mut ChaCha8Rng) -> SyntheticLinkSpec {
    SyntheticLinkSpec {
        base_rtt_ms: rng.random_range(20.0..150.0),
        rtt_noise_sigma: rng.random_range(0.0..0.8),
        congestion_rtt_multiplier: rng.random_range(1.5..5.0),
        base_dl_kbps: rng.random_range(5_000.0..60_000.0),
        base_ul_kbps: rng.random_range(2_000.0..30_000.0),
        hazard: HazardParams {
            phi: log_uniform(rng, 1e-6, 5e-4),
            p: rng.random_range(-0.9..0.9),
        },
        weibull: WeibullParams {
            beta: rng.random_range(0.7..2.0),
            eta: log_uniform(rng, 100.0, 5_000.0),
        },
        seed: rng.random(),
    }
}

/// Full-coverage trace from the synthetic generator.
pub fn synthetic_trace(rng: &mut ChaCha8Rng, id: &str, ticks: u64) -> LinkTrace {
    generate_trace(id, &random_spec(rng), ticks * TICK_MS, TICK_MS).unwrap()
}

fn maybe(rng: &mut ChaCha8Rng, draw: impl FnOnce(&mut ChaCha8Rng) -> f64) -> Option<f64> {
    if rng.random_bool(0.9) {
        Some(draw(rng))
    } else {
        None
    }
}

/// Irregular trace: late start, jittered timestamps, dropped ticks,
/// occasional timeouts and missing optional fields.
pub fn ragged_trace(rng: &mut ChaCha8Rng, id: &str, ticks: u64) -> LinkTrace {
    let offset = rng.random_range(0..3);
    let mut samples = Vec::new();
    for k in offset..ticks {
        if rng.random_bool(0.1) {
            continue;
        }
        let t_ms = k * TICK_MS + rng.random_range(0..TICK_MS / 2);
        let rtt = match rng.random_range(0..100) {
            0..5 => Rtt::Timeout,
            5..7 => Rtt::Millis(rng.random_range(5_000.0..20_000.0)),
            _ => Rtt::Millis(rng.random_range(10.0..400.0)),
        };
        let mut s = Sample::new(t_ms, id, rtt);
        s.jitter_ms = maybe(rng, |r| r.random_range(0.0..60.0));
        s.loss = maybe(rng, |r| {
            if r.random_bool(0.8) {
                0.0
            } else {
                r.random_range(0..=10) as f64 / 10.0
            }
        });
        s.dl_kbps = maybe(rng, |r| r.random_range(1_000.0..80_000.0));
        s.ul_kbps = maybe(rng, |r| r.random_range(500.0..60_000.0));
        s.plt_ms = maybe(rng, |r| r.random_range(100.0..3_000.0));
        s.net_type = rng.random_bool(0.5).then_some(NetType::Lte);
        samples.push(s);
    }
    LinkTrace::new(id, samples, TICK_MS).unwrap()
}

pub fn random_trace(rng: &mut ChaCha8Rng, id: &str, ticks: u64) -> LinkTrace {
    if rng.random_bool(0.5) {
        synthetic_trace(rng, id, ticks)
    } else {
        ragged_trace(rng, id, ticks)
    }
}

pub fn provider_ids(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("np{i}")).collect()
}

pub fn random_set(rng: &mut ChaCha8Rng, n: usize, ticks: u64) -> Vec<LinkTrace> {
    provider_ids(n).iter().map(|id| random_trace(rng, id, ticks)).collect()
}

pub fn random_aligned(rng: &mut ChaCha8Rng, n: usize, ticks: u64) -> AlignedTraces {
    align(&random_set(rng, n, ticks), TICK_MS, 2 * TICK_MS).unwrap()
}

/// One provider's column of an aligned set as a trace on the tick grid;
/// GAP cells become timeouts.
pub fn aligned_column(at: &AlignedTraces, p: usize) -> LinkTrace {
    let id = &at.providers()[p];
    let samples = at
        .timeline()
        .iter()
        .enumerate()
        .map(|(k, &t)| match at.cell(p, k) {
            Some(s) => Sample { t_ms: t, ..s.clone() },
            None => Sample::new(t, id.as_str(), Rtt::Timeout),
        })
        .collect();
    LinkTrace::new(id.as_str(), samples, at.tick_ms()).unwrap()
}
