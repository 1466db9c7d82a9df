//! Provider switching policies and their evaluation.
//!
//! A policy turns an [`AlignedTraces`] set into a [`Schedule`]; applying the
//! schedule yields the composite trace a switching client would observe.
//! Latency means cost timeouts, GAPs and over-bound readings at the
//! availability RTT bound.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{contract, domain, Result};
use crate::links::AlignedTraces;
use crate::metrics::plt_model_ms;
use crate::sample::{PltModel, Rtt, Sample, Thresholds};
use crate::trace::LinkTrace;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Policy {
    /// Stay on one provider for the whole scenario.
    Single { provider: String },
    /// Average probe RTTs per window and move to the best provider of the
    /// window that just closed.
    WindowedDsm { window_ms: u64, probe_interval_ms: u64 },
    /// Hindsight: per window, the provider that was best in that window.
    Oracle { granularity_ms: u64 },
}

impl Policy {
    pub fn validate(&self) -> Result<()> {
        match self {
            Policy::Single { provider } if provider.is_empty() => Err(contract("empty provider id")),
            Policy::WindowedDsm {
                window_ms,
                probe_interval_ms,
            } => {
                if *probe_interval_ms == 0 || window_ms < probe_interval_ms {
                    return Err(contract("window must be >= probe interval > 0"));
                }
                Ok(())
            }
            Policy::Oracle { granularity_ms: 0 } => Err(contract("oracle granularity must be > 0")),
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Policy::Single { provider } => alloc::format!("single:{provider}"),
            Policy::WindowedDsm { window_ms, .. } => alloc::format!("windowed:{}", fmt_seconds(*window_ms)),
            Policy::Oracle { granularity_ms } => alloc::format!("oracle:{}", fmt_seconds(*granularity_ms)),
        }
    }
}

fn fmt_seconds(ms: u64) -> String {
    if ms.is_multiple_of(1000) {
        alloc::format!("{}s", ms / 1000)
    } else {
        alloc::format!("{}ms", ms)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub start_ms: u64,
    pub provider: String,
}

/// Piecewise-constant provider assignment over `[span_start, span_end)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    segments: Vec<Segment>,
    span_start_ms: u64,
    span_end_ms: u64,
    coverage_holes: Vec<u64>,
}

impl Schedule {
    pub fn new(segments: Vec<Segment>, span_start_ms: u64, span_end_ms: u64) -> Result<Self> {
        let first = segments.first().ok_or_else(|| contract("schedule has no segments"))?;
        if first.start_ms != span_start_ms {
            return Err(contract("first segment must start at the timeline origin"));
        }
        if span_end_ms <= span_start_ms {
            return Err(contract("schedule span is empty"));
        }
        for pair in segments.windows(2) {
            if pair[1].start_ms <= pair[0].start_ms {
                return Err(contract("segment starts must strictly increase"));
            }
            if pair[1].provider == pair[0].provider {
                return Err(contract("consecutive segments must change provider"));
            }
        }
        if segments.last().is_some_and(|s| s.start_ms >= span_end_ms) {
            return Err(contract("segment starts after the schedule span"));
        }
        Ok(Schedule {
            segments,
            span_start_ms,
            span_end_ms,
            coverage_holes: Vec::new(),
        })
    }

    /// The whole span on one provider.
    pub fn single(provider: &str, at: &AlignedTraces) -> Result<Self> {
        if at.provider_index(provider).is_none() {
            return Err(contract(alloc::format!("unknown provider `{provider}`")));
        }
        let (start, end) = span(at)?;
        Schedule::new(
            alloc::vec![Segment {
                start_ms: start,
                provider: provider.to_string()
            }],
            start,
            end,
        )
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn span_ms(&self) -> (u64, u64) {
        (self.span_start_ms, self.span_end_ms)
    }

    /// Start times of windows in which no provider had any sample.
    pub fn coverage_holes(&self) -> &[u64] {
        &self.coverage_holes
    }

    pub fn switch_count(&self) -> usize {
        self.segments.len() - 1
    }

    fn segment_index_at(&self, t_ms: u64) -> usize {
        self.segments.partition_point(|s| s.start_ms <= t_ms).saturating_sub(1)
    }

    pub fn provider_at(&self, t_ms: u64) -> &str {
        &self.segments[self.segment_index_at(t_ms)].provider
    }
}

/// How traffic fares during the switch delay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SwitchMode {
    /// No usable link until the migration completes: ticks time out.
    #[default]
    Outage,
    /// Traffic keeps flowing over the previous provider.
    Continuity,
}

/// Shared parameters for evaluating schedules.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SwitchSettings {
    pub thresholds: Thresholds,
    pub switch_delay_ms: u64,
    pub mode: SwitchMode,
    pub plt_model: PltModel,
}

fn span(at: &AlignedTraces) -> Result<(u64, u64)> {
    let first = *at
        .timeline()
        .first()
        .ok_or_else(|| contract("aligned timeline is empty"))?;
    let last = *at.timeline().last().unwrap_or(&first);
    Ok((first, last + at.tick_ms()))
}

/// Tick-index ranges of consecutive `window_ms` windows anchored at the
/// timeline origin, with each window's start time. Empty windows are skipped.
fn windows(at: &AlignedTraces, window_ms: u64) -> Vec<(u64, Range<usize>)> {
    let timeline = at.timeline();
    let Some(&t0) = timeline.first() else {
        return Vec::new();
    };
    let mut out: Vec<(u64, Range<usize>)> = Vec::new();
    for (k, &t) in timeline.iter().enumerate() {
        let w = (t - t0) / window_ms;
        let start = t0 + w * window_ms;
        match out.last_mut() {
            Some((s, r)) if *s == start => r.end = k + 1,
            _ => out.push((start, k..k + 1)),
        }
    }
    out
}

fn check_window(at: &AlignedTraces, window_ms: u64) -> Result<()> {
    if window_ms < at.tick_ms() {
        return Err(contract(alloc::format!(
            "window of {window_ms} ms does not cover one {} ms tick",
            at.tick_ms()
        )));
    }
    Ok(())
}

/// Picks the best provider by score, keeping `incumbent` on ties.
fn pick(scores: &[Option<f64>], incumbent: Option<usize>) -> Option<usize> {
    let best = scores.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return None;
    }
    if let Some(i) = incumbent {
        if scores[i] == Some(best) {
            return Some(i);
        }
    }
    scores.iter().position(|s| *s == Some(best))
}

fn push_switch(segments: &mut Vec<Segment>, start_ms: u64, provider: &str) {
    if segments.last().is_some_and(|s| s.provider == provider) {
        return;
    }
    segments.push(Segment {
        start_ms,
        provider: provider.to_string(),
    });
}

/// Reactive windowed switching: the mean RTT of each provider over a closed
/// window selects the provider for the next window. GAP ticks are ignored
/// in the mean; a provider with no sample in the window is excluded.
pub fn windowed_decide(at: &AlignedTraces, th: &Thresholds, window_ms: u64, start_provider: &str) -> Result<Schedule> {
    check_window(at, window_ms)?;
    let mut current = at
        .provider_index(start_provider)
        .ok_or_else(|| contract(alloc::format!("start provider `{start_provider}` not in set")))?;
    let (span_start, span_end) = span(at)?;
    let penalty = th.availability_rtt_ms;
    let wins = windows(at, window_ms);
    let mut segments = alloc::vec![Segment {
        start_ms: span_start,
        provider: at.providers()[current].clone()
    }];
    let mut holes = Vec::new();

    for (w, (start, ticks)) in wins.iter().enumerate() {
        let scores: Vec<Option<f64>> = (0..at.providers().len())
            .map(|p| {
                let costs: Vec<f64> = ticks
                    .clone()
                    .filter_map(|k| at.cell(p, k))
                    .map(|s| s.rtt.cost(penalty))
                    .collect();
                (!costs.is_empty()).then(|| costs.iter().sum::<f64>() / costs.len() as f64)
            })
            .collect();
        match pick(&scores, Some(current)) {
            Some(best) => current = best,
            None => holes.push(*start),
        }
        if let Some((next_start, _)) = wins.get(w + 1) {
            push_switch(&mut segments, *next_start, &at.providers()[current]);
        }
    }
    let mut sched = Schedule::new(segments, span_start, span_end)?;
    sched.coverage_holes = holes;
    Ok(sched)
}

/// Hindsight schedule: each window goes to the provider with the lowest mean
/// latency cost in that same window (GAPs cost the penalty), preferring the
/// incumbent on ties.
pub fn oracle_schedule(at: &AlignedTraces, th: &Thresholds, granularity_ms: u64) -> Result<Schedule> {
    check_window(at, granularity_ms)?;
    let (span_start, span_end) = span(at)?;
    let penalty = th.availability_rtt_ms;
    let mut segments: Vec<Segment> = Vec::new();
    let mut holes = Vec::new();
    let mut incumbent: Option<usize> = None;

    for (start, ticks) in windows(at, granularity_ms) {
        let all_gap = (0..at.providers().len()).all(|p| ticks.clone().all(|k| at.cell(p, k).is_none()));
        if all_gap {
            holes.push(start);
        }
        let scores: Vec<Option<f64>> = (0..at.providers().len())
            .map(|p| {
                let total: f64 = ticks
                    .clone()
                    .map(|k| at.cell(p, k).map_or(penalty, |s| s.rtt.cost(penalty)))
                    .sum();
                Some(total / ticks.len() as f64)
            })
            .collect();
        let chosen = pick(&scores, incumbent).unwrap_or(0);
        let start_ms = if segments.is_empty() { span_start } else { start };
        push_switch(&mut segments, start_ms, &at.providers()[chosen]);
        incumbent = Some(chosen);
    }
    let mut sched = Schedule::new(segments, span_start, span_end)?;
    sched.coverage_holes = holes;
    Ok(sched)
}

/// Composite trace a switching client observes under `sched`.
///
/// For `switch_delay_ms` after each switch the connection has not migrated:
/// in [`SwitchMode::Outage`] those ticks time out, in
/// [`SwitchMode::Continuity`] they carry the previous provider's sample.
/// GAP cells become timeouts. PLT is recomputed from the effective RTT and
/// downlink rate when both are present.
pub fn apply_schedule(
    sched: &Schedule,
    at: &AlignedTraces,
    switch_delay_ms: u64,
    mode: SwitchMode,
    plt_model: &PltModel,
) -> Result<LinkTrace> {
    if span(at)? != sched.span_ms() {
        return Err(contract("schedule span does not match the aligned timeline"));
    }
    let mut index = Vec::with_capacity(sched.segments.len());
    for seg in &sched.segments {
        let p = at
            .provider_index(&seg.provider)
            .ok_or_else(|| contract(alloc::format!("schedule names unknown provider `{}`", seg.provider)))?;
        index.push(p);
    }

    let mut samples = Vec::with_capacity(at.timeline().len());
    for (k, &t) in at.timeline().iter().enumerate() {
        let j = sched.segment_index_at(t);
        let migrating = j > 0 && t < sched.segments[j].start_ms + switch_delay_ms;
        let serving = match (migrating, mode) {
            (false, _) => Some(index[j]),
            (true, SwitchMode::Continuity) => Some(index[j - 1]),
            (true, SwitchMode::Outage) => None,
        };
        let assigned = &sched.segments[j].provider;
        let sample = match serving.and_then(|p| at.cell(p, k)) {
            Some(cell) => {
                let mut s = cell.clone();
                s.t_ms = t;
                match (s.rtt, s.dl_kbps) {
                    (Rtt::Millis(rtt), Some(dl)) if dl > 0.0 => s.plt_ms = Some(plt_model_ms(rtt, dl, plt_model)?),
                    (Rtt::Timeout, _) => s.plt_ms = None,
                    _ => {}
                }
                s
            }
            None => Sample::new(t, assigned.clone(), Rtt::Timeout),
        };
        samples.push(sample);
    }
    LinkTrace::new("effective", samples, at.tick_ms())
}

/// Percent reduction of mean latency cost of `effective` relative to
/// `baseline`; positive means `effective` is better.
pub fn improvement(effective: &LinkTrace, baseline: &LinkTrace, th: &Thresholds) -> Result<f64> {
    let same_timeline = effective.len() == baseline.len()
        && effective
            .samples()
            .iter()
            .zip(baseline.samples())
            .all(|(a, b)| a.t_ms == b.t_ms);
    if !same_timeline || effective.is_empty() {
        return Err(contract("improvement needs two non-empty traces on the same timeline"));
    }
    let penalty = th.availability_rtt_ms;
    let mean_b = baseline.mean_rtt_cost(penalty).unwrap_or(0.0);
    let mean_e = effective.mean_rtt_cost(penalty).unwrap_or(0.0);
    if mean_b == 0.0 {
        return Err(domain("baseline mean RTT is zero"));
    }
    Ok(100.0 * (mean_b - mean_e) / mean_b)
}

/// Summary of one evaluated policy.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchStats {
    pub switch_count: usize,
    /// In baseline order.
    pub improvement_vs: Vec<(String, f64)>,
    pub mean_effective_rtt: f64,
}

/// A policy's schedule, effective trace and statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutcome {
    pub policy: Policy,
    pub schedule: Schedule,
    pub effective: LinkTrace,
    pub stats: SwitchStats,
}

/// What a client pinned to `provider` observes.
pub fn baseline_trace(at: &AlignedTraces, provider: &str, plt_model: &PltModel) -> Result<LinkTrace> {
    let sched = Schedule::single(provider, at)?;
    apply_schedule(&sched, at, 0, SwitchMode::Outage, plt_model)
}

fn build_schedule(policy: &Policy, at: &AlignedTraces, th: &Thresholds) -> Result<Schedule> {
    policy.validate()?;
    match policy {
        Policy::Single { provider } => Schedule::single(provider, at),
        Policy::WindowedDsm { window_ms, .. } => {
            let start = at
                .providers()
                .first()
                .ok_or_else(|| contract("aligned set has no providers"))?;
            windowed_decide(at, th, *window_ms, start)
        }
        Policy::Oracle { granularity_ms } => oracle_schedule(at, th, *granularity_ms),
    }
}

fn stats_for(
    sched: &Schedule,
    effective: &LinkTrace,
    baselines: &[(String, LinkTrace)],
    th: &Thresholds,
) -> Result<SwitchStats> {
    let improvement_vs = baselines
        .iter()
        .map(|(id, base)| Ok((id.clone(), improvement(effective, base, th)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SwitchStats {
        switch_count: sched.switch_count(),
        improvement_vs,
        mean_effective_rtt: effective.mean_rtt_cost(th.availability_rtt_ms).unwrap_or(0.0),
    })
}

/// [`baseline_trace`] for each named provider.
pub fn baseline_traces(at: &AlignedTraces, baselines: &[String], plt: &PltModel) -> Result<Vec<(String, LinkTrace)>> {
    baselines
        .iter()
        .map(|id| Ok((id.clone(), baseline_trace(at, id, plt)?)))
        .collect()
}

/// Runs one policy end to end against precomputed baseline traces, which
/// must share the aligned timeline. Windowed policies start on the first
/// provider of the set.
pub fn evaluate_policy(
    policy: &Policy,
    at: &AlignedTraces,
    baselines: &[(String, LinkTrace)],
    settings: &SwitchSettings,
) -> Result<PolicyOutcome> {
    let th = &settings.thresholds;
    let schedule = build_schedule(policy, at, th)?;
    let effective = apply_schedule(
        &schedule,
        at,
        settings.switch_delay_ms,
        settings.mode,
        &settings.plt_model,
    )?;
    let stats = stats_for(&schedule, &effective, baselines, th)?;
    Ok(PolicyOutcome {
        policy: policy.clone(),
        schedule,
        effective,
        stats,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowLabel {
    Window { window_ms: u64 },
    Oracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactiveRow {
    pub label: RowLabel,
    /// Percent improvement per baseline, in the table's baseline order.
    pub improvements: Vec<f64>,
    pub switches: usize,
    pub mean_effective_rtt: f64,
}

/// Improvement and switch count per switching window, closed by an oracle row.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactiveTable {
    pub baselines: Vec<String>,
    pub rows: Vec<ReactiveRow>,
}

pub fn reactive_table(
    at: &AlignedTraces,
    windows_ms: &[u64],
    baselines: &[String],
    oracle_granularity_ms: u64,
    settings: &SwitchSettings,
) -> Result<ReactiveTable> {
    if windows_ms.is_empty() {
        return Err(contract("reactive table needs at least one window"));
    }
    if baselines.is_empty() {
        return Err(contract("reactive table needs at least one baseline"));
    }
    let th = &settings.thresholds;
    let bases = baseline_traces(at, baselines, &settings.plt_model)?;
    let start = at
        .providers()
        .first()
        .ok_or_else(|| contract("aligned set has no providers"))?;

    let row = |label: RowLabel, sched: Schedule| -> Result<ReactiveRow> {
        let effective = apply_schedule(&sched, at, settings.switch_delay_ms, settings.mode, &settings.plt_model)?;
        let stats = stats_for(&sched, &effective, &bases, th)?;
        Ok(ReactiveRow {
            label,
            improvements: stats.improvement_vs.into_iter().map(|(_, v)| v).collect(),
            switches: stats.switch_count,
            mean_effective_rtt: stats.mean_effective_rtt,
        })
    };

    let mut rows = Vec::with_capacity(windows_ms.len() + 1);
    for &w in windows_ms {
        rows.push(row(
            RowLabel::Window { window_ms: w },
            windowed_decide(at, th, w, start)?,
        )?);
    }
    rows.push(row(RowLabel::Oracle, oracle_schedule(at, th, oracle_granularity_ms)?)?);
    Ok(ReactiveTable {
        baselines: baselines.to_vec(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::links::align;
    use crate::reliability::{dsm_q_s, empirical_q_s};
    use crate::sample::Metric;
    use proptest::prelude::*;

    const TICK: u64 = 3000;

    /// Aligned set from per-provider RTT columns on a shared 3 s grid.
    /// `None` entries are timeouts.
    fn aligned(cols: &[Vec<Option<f64>>]) -> AlignedTraces {
        let traces: Vec<LinkTrace> = cols
            .iter()
            .enumerate()
            .map(|(p, col)| {
                let id = alloc::format!("p{p}");
                let samples = col
                    .iter()
                    .enumerate()
                    .map(|(k, r)| {
                        let mut s = Sample::new(k as u64 * TICK, id.clone(), r.map_or(Rtt::Timeout, Rtt::Millis));
                        s.dl_kbps = r.map(|_| 40_000.0);
                        s
                    })
                    .collect();
                LinkTrace::new(id.clone(), samples, TICK).unwrap()
            })
            .collect();
        align(&traces, TICK, 2 * TICK).unwrap()
    }

    fn constant(v: f64, n: usize) -> Vec<Option<f64>> {
        alloc::vec![Some(v); n]
    }

    fn providers(sched: &Schedule) -> Vec<&str> {
        sched.segments().iter().map(|s| s.provider.as_str()).collect()
    }

    fn th() -> Thresholds {
        Thresholds::default()
    }

    #[test]
    fn windowed_moves_to_better_provider_once() {
        let at = aligned(&[constant(50.0, 20), constant(40.0, 20)]);
        let s = windowed_decide(&at, &th(), 12_000, "p0").unwrap();
        assert_eq!(providers(&s), ["p0", "p1"]);
        assert_eq!(s.segments()[1].start_ms, 12_000);
        assert_eq!(s.switch_count(), 1);
    }

    #[test]
    fn windowed_ties_stay_put() {
        let at = aligned(&[constant(50.0, 20), constant(50.0, 20)]);
        assert_eq!(windowed_decide(&at, &th(), 9_000, "p1").unwrap().switch_count(), 0);
    }

    #[test]
    fn windowed_rejects_bad_arguments() {
        let at = aligned(&[constant(50.0, 4)]);
        assert!(windowed_decide(&at, &th(), 1000, "p0").is_err());
        assert!(windowed_decide(&at, &th(), 9000, "zz").is_err());
    }

    /// Step-through reactive simulation written against raw columns.
    fn reactive_oracle(cols: &[Vec<Option<f64>>], window_ticks: usize, start: usize) -> Vec<(u64, usize)> {
        let n = cols[0].len();
        let mut current = start;
        let mut out = alloc::vec![(0u64, start)];
        let mut w = 0;
        while w * window_ticks < n {
            let lo = w * window_ticks;
            let hi = (lo + window_ticks).min(n);
            let means: Vec<f64> = cols
                .iter()
                .map(|c| {
                    c[lo..hi]
                        .iter()
                        .map(|r| r.unwrap_or(10_000.0).min(10_000.0))
                        .sum::<f64>()
                        / (hi - lo) as f64
                })
                .collect();
            let best = means.iter().copied().fold(f64::INFINITY, f64::min);
            if means[current] != best {
                current = means.iter().position(|m| *m == best).unwrap();
            }
            if hi < n && out.last().unwrap().1 != current {
                out.push((hi as u64 * TICK, current));
            }
            w += 1;
        }
        out
    }

    #[test]
    fn windowed_matches_step_through_simulation() {
        // best provider alternates every 4-tick window
        let a: Vec<Option<f64>> = (0..32)
            .map(|k| Some(if (k / 4) % 2 == 0 { 30.0 } else { 90.0 }))
            .collect();
        let b: Vec<Option<f64>> = (0..32)
            .map(|k| Some(if (k / 4) % 2 == 0 { 80.0 } else { 35.0 }))
            .collect();
        let cols = [a, b];
        let at = aligned(&cols);
        let s = windowed_decide(&at, &th(), 4 * TICK, "p0").unwrap();
        let got: Vec<(u64, usize)> = s
            .segments()
            .iter()
            .map(|seg| (seg.start_ms, at.provider_index(&seg.provider).unwrap()))
            .collect();
        assert_eq!(got, reactive_oracle(&cols, 4, 0));
        // one window late: windows 2..=7 each start with a switch
        assert_eq!(s.switch_count(), 6);
    }

    #[test]
    fn windowed_records_coverage_holes() {
        let a = LinkTrace::new(
            "a",
            [0u64, 3000, 30_000, 33_000]
                .iter()
                .map(|t| Sample::new(*t, "a", Rtt::Millis(20.0)))
                .collect(),
            TICK,
        )
        .unwrap();
        let at = align(&[a], TICK, TICK).unwrap();
        let s = windowed_decide(&at, &th(), 9000, "a").unwrap();
        assert_eq!(s.coverage_holes(), &[9000, 18_000]);
        assert_eq!(s.switch_count(), 0);
    }

    #[test]
    fn oracle_examples() {
        let at = aligned(&[constant(60.0, 12), constant(30.0, 12)]);
        let s = oracle_schedule(&at, &th(), 3 * TICK).unwrap();
        assert_eq!(providers(&s), ["p1"]);

        let a: Vec<Option<f64>> = (0..6).map(|k| Some(if k < 3 { 20.0 } else { 70.0 })).collect();
        let b: Vec<Option<f64>> = (0..6).map(|k| Some(if k < 3 { 50.0 } else { 25.0 })).collect();
        let at = aligned(&[a, b]);
        let s = oracle_schedule(&at, &th(), 3 * TICK).unwrap();
        assert_eq!(providers(&s), ["p0", "p1"]);
        assert_eq!(s.switch_count(), 1);
        assert_eq!(s.segments()[1].start_ms, 9000);
    }

    #[test]
    fn oracle_tie_prefers_incumbent() {
        let a: Vec<Option<f64>> = [20.0, 20.0, 40.0, 40.0].iter().copied().map(Some).collect();
        let b: Vec<Option<f64>> = [30.0, 30.0, 40.0, 40.0].iter().copied().map(Some).collect();
        let at = aligned(&[b, a]);
        let s = oracle_schedule(&at, &th(), 2 * TICK).unwrap();
        assert_eq!(providers(&s), ["p1"]);
    }

    fn total_cost(trace: &LinkTrace) -> f64 {
        trace.samples().iter().map(|s| s.rtt.cost(10_000.0)).sum()
    }

    /// Every assignment of providers to windows, costed tick by tick.
    fn exhaustive_min(cols: &[Vec<Option<f64>>], window_ticks: usize) -> f64 {
        let n = cols[0].len();
        let nw = n.div_ceil(window_ticks);
        let np = cols.len();
        let mut best = f64::INFINITY;
        for code in 0..np.pow(nw as u32) {
            let mut c = code;
            let mut total = 0.0;
            for w in 0..nw {
                let p = c % np;
                c /= np;
                for cell in cols[p]
                    .iter()
                    .take(((w + 1) * window_ticks).min(n))
                    .skip(w * window_ticks)
                {
                    total += cell.unwrap_or(10_000.0).min(10_000.0);
                }
            }
            best = best.min(total);
        }
        best
    }

    #[test]
    fn oracle_matches_exhaustive_search() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let cols: Vec<Vec<Option<f64>>> = (0..3)
                .map(|_| {
                    (0..24)
                        .map(|_| {
                            if rng.random_bool(0.05) {
                                None
                            } else {
                                Some(rng.random_range(10..400) as f64)
                            }
                        })
                        .collect()
                })
                .collect();
            let at = aligned(&cols);
            let s = oracle_schedule(&at, &th(), 4 * TICK).unwrap();
            let eff = apply_schedule(&s, &at, 0, SwitchMode::Outage, &PltModel::default()).unwrap();
            assert_eq!(total_cost(&eff), exhaustive_min(&cols, 4));
        }
    }

    #[test]
    fn apply_without_delay_composes_per_tick() {
        let at = aligned(&[constant(10.0, 6), constant(20.0, 6)]);
        let sched = Schedule::new(
            alloc::vec![
                Segment {
                    start_ms: 0,
                    provider: "p0".into()
                },
                Segment {
                    start_ms: 6000,
                    provider: "p1".into()
                },
            ],
            0,
            18_000,
        )
        .unwrap();
        let eff = apply_schedule(&sched, &at, 0, SwitchMode::Outage, &PltModel::default()).unwrap();
        let rtts: Vec<Rtt> = eff.samples().iter().map(|s| s.rtt).collect();
        assert_eq!(rtts, [10.0, 10.0, 20.0, 20.0, 20.0, 20.0].map(Rtt::Millis));
        let expected_plt = plt_model_ms(20.0, 40_000.0, &PltModel::default()).unwrap();
        assert_eq!(eff.samples()[3].plt_ms, Some(expected_plt));
    }

    #[test]
    fn apply_delay_of_one_tick_hand_walk() {
        // 5 ticks, switch p0 -> p1 at t=6000; one post-switch tick keeps p0
        let at = aligned(&[constant(10.0, 5), constant(20.0, 5)]);
        let sched = Schedule::new(
            alloc::vec![
                Segment {
                    start_ms: 0,
                    provider: "p0".into()
                },
                Segment {
                    start_ms: 6000,
                    provider: "p1".into()
                },
            ],
            0,
            15_000,
        )
        .unwrap();
        let eff = apply_schedule(&sched, &at, 3000, SwitchMode::Continuity, &PltModel::default()).unwrap();
        let rtts: Vec<Rtt> = eff.samples().iter().map(|s| s.rtt).collect();
        assert_eq!(rtts, [10.0, 10.0, 10.0, 20.0, 20.0].map(Rtt::Millis));
        let eff = apply_schedule(&sched, &at, 3000, SwitchMode::Outage, &PltModel::default()).unwrap();
        let rtts: Vec<Rtt> = eff.samples().iter().map(|s| s.rtt).collect();
        assert_eq!(
            rtts,
            [
                Rtt::Millis(10.0),
                Rtt::Millis(10.0),
                Rtt::Timeout,
                Rtt::Millis(20.0),
                Rtt::Millis(20.0)
            ]
        );
    }

    #[test]
    fn continuity_delay_of_one_window_equals_lagged_schedule() {
        let a: Vec<Option<f64>> = (0..16).map(|k| Some(10.0 + k as f64)).collect();
        let b: Vec<Option<f64>> = (0..16).map(|k| Some(100.0 + k as f64)).collect();
        let at = aligned(&[a, b]);
        let w = 4 * TICK;
        let seg = |t: u64, p: &str| Segment {
            start_ms: t,
            provider: p.into(),
        };
        let sched = Schedule::new(alloc::vec![seg(0, "p0"), seg(w, "p1"), seg(3 * w, "p0")], 0, 16 * TICK).unwrap();
        let lagged = Schedule::new(
            alloc::vec![seg(0, "p0"), seg(2 * w, "p1"), seg(4 * w - 1, "p0")],
            0,
            16 * TICK,
        )
        .unwrap();
        let plt = PltModel::default();
        let eff = apply_schedule(&sched, &at, w, SwitchMode::Continuity, &plt).unwrap();
        let lag = apply_schedule(&lagged, &at, 0, SwitchMode::Continuity, &plt).unwrap();
        let rtts = |t: &LinkTrace| t.samples().iter().map(|s| s.rtt).collect::<Vec<_>>();
        assert_eq!(rtts(&eff), rtts(&lag));
    }

    #[test]
    fn apply_rejects_mismatched_schedule() {
        let at = aligned(&[constant(10.0, 5)]);
        let sched = Schedule::new(
            alloc::vec![Segment {
                start_ms: 0,
                provider: "p0".into()
            }],
            0,
            99_000,
        )
        .unwrap();
        assert!(apply_schedule(&sched, &at, 0, SwitchMode::Outage, &PltModel::default()).is_err());
        let sched = Schedule::new(
            alloc::vec![Segment {
                start_ms: 0,
                provider: "zz".into()
            }],
            0,
            15_000,
        )
        .unwrap();
        assert!(apply_schedule(&sched, &at, 0, SwitchMode::Outage, &PltModel::default()).is_err());
    }

    #[test]
    fn schedule_invariants() {
        let seg = |t: u64, p: &str| Segment {
            start_ms: t,
            provider: p.into(),
        };
        assert!(Schedule::new(alloc::vec![], 0, 10).is_err());
        assert!(Schedule::new(alloc::vec![seg(5, "a")], 0, 10).is_err());
        assert!(Schedule::new(alloc::vec![seg(0, "a"), seg(3, "a")], 0, 10).is_err());
        assert!(Schedule::new(alloc::vec![seg(0, "a"), seg(0, "b")], 0, 10).is_err());
        let s = Schedule::new(alloc::vec![seg(0, "a"), seg(3, "b")], 0, 10).unwrap();
        assert_eq!((s.provider_at(2), s.provider_at(3), s.provider_at(9)), ("a", "b", "b"));
    }

    #[test]
    fn improvement_examples() {
        let mk = |rtts: &[f64]| {
            LinkTrace::new(
                "x",
                rtts.iter()
                    .enumerate()
                    .map(|(k, r)| Sample::new(k as u64, "x", Rtt::Millis(*r)))
                    .collect(),
                TICK,
            )
            .unwrap()
        };
        let base = mk(&[100.0, 100.0]);
        assert_eq!(improvement(&base, &base, &th()).unwrap(), 0.0);
        let eff = mk(&[52.29, 52.29]);
        assert!((improvement(&eff, &base, &th()).unwrap() - 47.71).abs() < 1e-9);
        assert!(improvement(&mk(&[150.0, 150.0]), &base, &th()).unwrap() < 0.0);
        assert!(improvement(&mk(&[1.0]), &base, &th()).is_err());
        assert!(improvement(&base, &mk(&[0.0, 0.0]), &th()).is_err());
    }

    #[test]
    fn reactive_table_shapes() {
        let windows: Vec<u64> = (1..=6).map(|k| k * 10_000).collect();
        let a: Vec<Option<f64>> = (0..200).map(|k| Some(40.0 + ((k * 37) % 50) as f64)).collect();
        let b: Vec<Option<f64>> = (0..200).map(|k| Some(45.0 + ((k * 53) % 60) as f64)).collect();
        let at = aligned(&[a, b]);
        let settings = SwitchSettings::default();
        let table = reactive_table(&at, &windows, &["p0".into(), "p1".into()], 10_000, &settings).unwrap();
        assert_eq!(table.rows.len(), 7);
        assert_eq!(table.rows[6].label, RowLabel::Oracle);
        for (i, base) in table.baselines.iter().enumerate() {
            let oracle = table.rows[6].improvements[i];
            for row in &table.rows[..6] {
                assert!(oracle >= row.improvements[i], "{base}: {oracle} < {:?}", row);
            }
        }

        let single = aligned(&[constant(50.0, 40)]);
        let t = reactive_table(&single, &windows, &["p0".into()], 10_000, &settings).unwrap();
        assert!(t.rows.iter().all(|r| r.improvements == [0.0] && r.switches == 0));
        assert!(reactive_table(&single, &[], &["p0".into()], 10_000, &settings).is_err());
        assert!(reactive_table(&single, &windows, &[], 10_000, &settings).is_err());
    }

    #[test]
    fn evaluate_single_and_oracle() {
        let at = aligned(&[constant(80.0, 12), constant(40.0, 12)]);
        let settings = SwitchSettings::default();
        let bases = baseline_traces(&at, &["p0".into(), "p1".into()], &settings.plt_model).unwrap();
        let single = evaluate_policy(&Policy::Single { provider: "p1".into() }, &at, &bases, &settings).unwrap();
        assert_eq!(single.stats.switch_count, 0);
        assert_eq!(single.stats.improvement_vs[0], ("p0".into(), 50.0));
        assert_eq!(single.stats.improvement_vs[1], ("p1".into(), 0.0));
        let oracle = evaluate_policy(&Policy::Oracle { granularity_ms: 9000 }, &at, &bases, &settings).unwrap();
        assert_eq!(oracle.stats.mean_effective_rtt, 40.0);
        let bad = Policy::WindowedDsm {
            window_ms: 1000,
            probe_interval_ms: 3000,
        };
        assert!(evaluate_policy(&bad, &at, &bases, &settings).is_err());
        assert_eq!(bad.label(), "windowed:1s");
    }

    #[test]
    fn continuity_mode_can_improve_with_delay() {
        // The previous provider happens to be better right after the switch.
        let a: Vec<Option<f64>> = [50.0, 50.0, 10.0, 90.0].iter().copied().map(Some).collect();
        let b: Vec<Option<f64>> = [60.0, 60.0, 40.0, 20.0].iter().copied().map(Some).collect();
        let at = aligned(&[a, b]);
        let seg = |t: u64, p: &str| Segment {
            start_ms: t,
            provider: p.into(),
        };
        let sched = Schedule::new(alloc::vec![seg(0, "p0"), seg(6000, "p1")], 0, 12_000).unwrap();
        let plt = PltModel::default();
        let m = |d| {
            apply_schedule(&sched, &at, d, SwitchMode::Continuity, &plt)
                .unwrap()
                .mean_rtt_cost(10_000.0)
                .unwrap()
        };
        assert!(m(3000) < m(0));
    }

    fn random_cols(seed: u64, providers: usize, ticks: usize) -> Vec<Vec<Option<f64>>> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..providers)
            .map(|_| {
                let base = rng.random_range(20.0..150.0);
                (0..ticks)
                    .map(|_| {
                        if rng.random_bool(0.03) {
                            None
                        } else {
                            Some(base * rng.random_range(0.5..3.0))
                        }
                    })
                    .collect()
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn hindsight_dominates_reactive(seed in any::<u64>(), np in 2usize..4) {
            let at = aligned(&random_cols(seed, np, 120));
            let oracle = oracle_schedule(&at, &th(), 10_000).unwrap();
            let plt = PltModel::default();
            let o = apply_schedule(&oracle, &at, 0, SwitchMode::Outage, &plt).unwrap().mean_rtt_cost(10_000.0).unwrap();
            for w in [10_000u64, 20_000, 30_000, 40_000, 50_000, 60_000] {
                let s = windowed_decide(&at, &th(), w, "p0").unwrap();
                let m = apply_schedule(&s, &at, 0, SwitchMode::Outage, &plt).unwrap().mean_rtt_cost(10_000.0).unwrap();
                prop_assert!(o <= m, "window {}: oracle {} > windowed {}", w, o, m);
            }
        }

        #[test]
        fn outage_delay_degrades_monotonically(seed in any::<u64>()) {
            let at = aligned(&random_cols(seed, 3, 90));
            let sched = windowed_decide(&at, &th(), 10_000, "p0").unwrap();
            let plt = PltModel::default();
            let mut prev = f64::NEG_INFINITY;
            for d in [0u64, 1000, 3000, 10_000, 30_000] {
                let m = apply_schedule(&sched, &at, d, SwitchMode::Outage, &plt).unwrap().mean_rtt_cost(10_000.0).unwrap();
                prop_assert!(m >= prev);
                prev = m;
            }
        }

        #[test]
        fn realized_dsm_bounded_by_any_network(seed in any::<u64>(), w in 1u64..8, rtt_th in 30.0f64..200.0) {
            let at = aligned(&random_cols(seed, 2, 80));
            let t = Thresholds { rtt_ms: rtt_th, ..th() };
            let s = windowed_decide(&at, &t, w * TICK, "p0").unwrap();
            let eff = apply_schedule(&s, &at, 0, SwitchMode::Outage, &PltModel::default()).unwrap();
            prop_assert!(dsm_q_s(&at, &t, Metric::Rtt).unwrap() >= empirical_q_s(&eff, &t, Metric::Rtt).unwrap());
            prop_assert_eq!(s.switch_count(), s.segments().len() - 1);
        }

        #[test]
        fn improvement_self_zero_and_shift_invariant(seed in any::<u64>(), shift in 0u64..1_000_000) {
            let at = aligned(&random_cols(seed, 2, 30));
            let plt = PltModel::default();
            let a = baseline_trace(&at, "p0", &plt).unwrap();
            let b = baseline_trace(&at, "p1", &plt).unwrap();
            prop_assert_eq!(improvement(&a, &a, &th()).unwrap(), 0.0);
            let shifted = |t: &LinkTrace| {
                let s = t.samples().iter().cloned().map(|mut s| { s.t_ms += shift; s }).collect();
                LinkTrace::new(t.provider_id(), s, TICK).unwrap()
            };
            prop_assert_eq!(improvement(&a, &b, &th()).unwrap(), improvement(&shifted(&a), &shifted(&b), &th()).unwrap());
        }
    }
}
