//! Runs a scenario end to end: traces, alignment, reliability, policies,
//! reactive table and redundancy curves.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use moc_core::{
    align, baseline_traces, evaluate_policy, generate_trace, reactive_table, redundancy_curves, ssm_transform,
    AlignedTraces, LinkTrace, Policy, ReliabilityReport, SwitchSettings,
};

use crate::config::{PolicyConfig, ProviderConfig, ProviderSource, ScenarioConfig, TraceFileRef};
use crate::error::{CliError, Result};
use crate::number::sig6;
use crate::report::{curves_table, reactive_table_to_table, Meta, PolicyEntry, ProviderEntry, ScenarioReport, Table};
use crate::trace_csv::parse_trace_csv;

/// Subsets are only enumerated up to this many switching providers.
const MAX_COMBINATION_PROVIDERS: usize = 8;

pub struct ScenarioOutput {
    pub report: ScenarioReport,
    /// One trace per configured provider, in configuration order.
    pub traces: Vec<LinkTrace>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator seed for the `index`-th provider.
pub fn provider_seed(scenario_seed: u64, index: usize, spec_seed: u64) -> u64 {
    splitmix64(splitmix64(scenario_seed ^ splitmix64(index as u64)) ^ spec_seed)
}

fn resolve(base_dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_dir.join(p)
    }
}

fn rename(trace: &LinkTrace, id: &str) -> Result<LinkTrace> {
    let samples = trace
        .samples()
        .iter()
        .map(|s| {
            let mut s = s.clone();
            s.provider_id = id.to_string();
            s
        })
        .collect();
    Ok(LinkTrace::new(id, samples, trace.tick_ms())?.with_extra_hops(trace.extra_hops()))
}

/// Builds every provider's trace. Relative trace paths resolve against
/// `base_dir`.
pub fn load_traces(cfg: &ScenarioConfig, base_dir: &Path) -> Result<Vec<LinkTrace>> {
    let mut files: HashMap<PathBuf, Vec<LinkTrace>> = HashMap::new();
    let mut out: Vec<Option<LinkTrace>> = vec![None; cfg.providers.len()];

    for (i, p) in cfg.providers.iter().enumerate() {
        match &p.source {
            ProviderSource::Synthetic(spec) => {
                let mut spec = spec.clone();
                spec.seed = provider_seed(cfg.seed, i, spec.seed);
                out[i] = Some(generate_trace(&p.id, &spec, cfg.duration_ms, cfg.tick_ms)?);
            }
            ProviderSource::TraceFile(TraceFileRef { path, provider }) => {
                let path = resolve(base_dir, path);
                if !path.is_file() {
                    return Err(CliError::Config(format!(
                        "provider `{}`: trace file {} does not exist",
                        p.id,
                        path.display()
                    )));
                }
                if !files.contains_key(&path) {
                    let parsed = parse_trace_csv(&path, cfg.tick_ms)?;
                    files.insert(path.clone(), parsed);
                }
                let wanted = provider.as_deref().unwrap_or(&p.id);
                let found = files[&path]
                    .iter()
                    .find(|t| t.provider_id() == wanted)
                    .ok_or_else(|| CliError::Config(format!("provider `{wanted}` not found in {}", path.display())))?;
                let normalized: Vec<_> = found
                    .samples()
                    .iter()
                    .map(|s| {
                        let mut s = s.clone();
                        s.rtt = cfg.probe.normalize(s.rtt);
                        s
                    })
                    .collect();
                let t = LinkTrace::new(found.provider_id(), normalized, found.tick_ms())?;
                out[i] = Some(rename(&t, &p.id)?);
            }
            ProviderSource::Ssm(_) => {}
        }
    }
    for (i, p) in cfg.providers.iter().enumerate() {
        if let ProviderSource::Ssm(ssm) = &p.source {
            let j = cfg.providers.iter().position(|q| q.id == ssm.of).expect("validated");
            let base = out[j].as_ref().expect("non-derived provider loaded");
            let derived = ssm_transform(base, ssm.extra_rtt_ms, ssm.extra_hops, &cfg.plt_model)?;
            out[i] = Some(rename(&derived, &p.id)?);
        }
    }
    Ok(out.into_iter().map(|t| t.expect("every provider loaded")).collect())
}

fn settings(cfg: &ScenarioConfig) -> SwitchSettings {
    SwitchSettings {
        thresholds: cfg.thresholds,
        switch_delay_ms: cfg.switch_delay_ms,
        mode: cfg.switch_mode.into(),
        plt_model: cfg.plt_model,
    }
}

fn meta(cfg: &ScenarioConfig) -> Meta {
    Meta {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        rtt_statistic: "mean".into(),
        switch_mode: match cfg.switch_mode {
            crate::config::SwitchModeConfig::Outage => "outage".into(),
            crate::config::SwitchModeConfig::Continuity => "continuity".into(),
        },
        switch_delay_ms: cfg.switch_delay_ms,
    }
}

fn ids(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

fn combinations(dsm: &AlignedTraces, cfg: &ScenarioConfig) -> Result<Vec<ProviderEntry>> {
    let providers = dsm.providers();
    let n = providers.len();
    if !(2..=MAX_COMBINATION_PROVIDERS).contains(&n) {
        return Ok(Vec::new());
    }
    let mut subsets: Vec<Vec<usize>> = (1u32..(1 << n))
        .filter(|m| m.count_ones() >= 2)
        .map(|m| (0..n).filter(|b| m & (1 << b) != 0).collect())
        .collect();
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    subsets
        .into_iter()
        .map(|subset| {
            let chosen: Vec<&str> = subset.iter().map(|&b| providers[b].as_str()).collect();
            let sub = dsm.select(&chosen)?;
            let r = ReliabilityReport::from_aligned(&sub, &cfg.thresholds)?;
            Ok(ProviderEntry::new(&r, sub.timeline().len(), 0))
        })
        .collect()
}

fn baselines(cfg: &ScenarioConfig) -> Vec<String> {
    cfg.reactive.baselines.clone().unwrap_or_else(|| cfg.dsm_set())
}

fn check_baselines(dsm_ids: &[String], bases: &[String]) -> Result<()> {
    match bases.iter().find(|b| !dsm_ids.contains(b)) {
        Some(b) => Err(CliError::Config(format!(
            "baseline `{b}` is not one of the switching providers"
        ))),
        None => Ok(()),
    }
}

/// The policy list with `--window` style overrides applied.
fn policies(cfg: &ScenarioConfig) -> Result<Vec<Policy>> {
    cfg.policies.iter().map(PolicyConfig::to_policy).collect()
}

/// The reactive table alone, over the switching providers.
pub fn reactive_only(cfg: &ScenarioConfig, traces: &[LinkTrace]) -> Result<Table> {
    let at = align(traces, cfg.tick_ms, cfg.staleness_bound_ms())?;
    let dsm_ids = cfg.dsm_set();
    let dsm = at.select(&ids(&dsm_ids))?;
    let bases = baselines(cfg);
    check_baselines(&dsm_ids, &bases)?;
    let table = reactive_table(
        &dsm,
        &cfg.reactive.windows_ms()?,
        &bases,
        cfg.reactive.oracle_granularity_ms()?,
        &settings(cfg),
    )?;
    Ok(reactive_table_to_table(&table))
}

pub fn run_with_traces(cfg: &ScenarioConfig, traces: Vec<LinkTrace>) -> Result<ScenarioOutput> {
    let th = &cfg.thresholds;
    let settings = settings(cfg);
    let at = align(&traces, cfg.tick_ms, cfg.staleness_bound_ms())?;
    let dsm_ids = cfg.dsm_set();
    let dsm = at.select(&ids(&dsm_ids))?;
    let bases = baselines(cfg);
    check_baselines(&dsm_ids, &bases)?;

    let providers = traces
        .iter()
        .map(|t| {
            Ok(ProviderEntry::new(
                &ReliabilityReport::from_trace(t, th)?,
                t.len(),
                t.extra_hops(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let base_traces = baseline_traces(&at, &bases, &cfg.plt_model)?;
    let mut policy_entries = Vec::new();
    for policy in policies(cfg)? {
        let scope = match policy {
            Policy::Single { .. } => &at,
            _ => &dsm,
        };
        let out = evaluate_policy(&policy, scope, &base_traces, &settings)?;
        let r = ReliabilityReport::from_trace(&out.effective, th)?;
        policy_entries.push(PolicyEntry {
            policy: policy.label(),
            provider_set: scope.providers().to_vec(),
            r_s: sig6(r.r_s),
            q_s: r.q_s.iter().map(|(m, v)| (m.to_string(), sig6(*v))).collect(),
            mttf_ms: r.mttf_ms.map(sig6),
            switch_count: out.stats.switch_count,
            improvement_vs: out
                .stats
                .improvement_vs
                .iter()
                .map(|(k, v)| (k.clone(), sig6(*v)))
                .collect(),
            mean_effective_rtt_ms: sig6(out.stats.mean_effective_rtt),
            coverage_holes: out.schedule.coverage_holes().len(),
        });
    }

    let reactive = if cfg.reactive.windows_s.is_empty() || dsm_ids.is_empty() {
        None
    } else {
        let table = reactive_table(
            &dsm,
            &cfg.reactive.windows_ms()?,
            &bases,
            cfg.reactive.oracle_granularity_ms()?,
            &settings,
        )?;
        Some(reactive_table_to_table(&table))
    };

    let report = ScenarioReport {
        meta: meta(cfg),
        providers,
        combinations: combinations(&dsm, cfg)?,
        policies: policy_entries,
        reactive_table: reactive,
        curves: curves_table(&redundancy_curves(&cfg.curves.lambdas()?, cfg.curves.n_max)?),
    };
    Ok(ScenarioOutput { report, traces })
}

pub fn run_scenario(cfg: &ScenarioConfig, base_dir: &Path) -> Result<ScenarioOutput> {
    let traces = load_traces(cfg, base_dir)?;
    run_with_traces(cfg, traces)
}

/// A scenario over every provider found in a trace file. When `template`
/// is given its analysis settings are kept and its providers replaced.
pub fn replay_config(trace_path: &Path, template: Option<ScenarioConfig>) -> Result<ScenarioConfig> {
    let tick = template
        .as_ref()
        .map_or(moc_core::trace::DEFAULT_TICK_MS, |c| c.tick_ms);
    let traces = parse_trace_csv(trace_path, tick)?;
    let start = traces.iter().filter_map(LinkTrace::start_ms).min().unwrap_or(0);
    let end = traces.iter().filter_map(LinkTrace::end_ms).max().unwrap_or(0);
    let providers: Vec<ProviderConfig> = traces
        .iter()
        .map(|t| ProviderConfig {
            id: t.provider_id().to_string(),
            source: ProviderSource::TraceFile(TraceFileRef {
                path: trace_path.to_path_buf(),
                provider: None,
            }),
        })
        .collect();
    let mut cfg = match template {
        Some(c) => c,
        None => ScenarioConfig::with_providers(Vec::new()),
    };
    let ids: Vec<String> = providers.iter().map(|p| p.id.clone()).collect();
    cfg.providers = providers;
    if cfg
        .dsm_providers
        .as_ref()
        .is_some_and(|d| d.iter().any(|x| !ids.contains(x)))
    {
        cfg.dsm_providers = None;
    }
    if cfg
        .reactive
        .baselines
        .as_ref()
        .is_some_and(|b| b.iter().any(|x| !ids.contains(x)))
    {
        cfg.reactive.baselines = None;
    }
    cfg.policies
        .retain(|p| !matches!(p, PolicyConfig::Single { provider } if !ids.contains(provider)));
    if cfg.policies.is_empty() {
        cfg.policies = ids
            .iter()
            .map(|id| PolicyConfig::Single { provider: id.clone() })
            .chain([
                PolicyConfig::WindowedDsm {
                    window_s: 10.0,
                    probe_interval_s: cfg.tick_ms as f64 / 1000.0,
                },
                PolicyConfig::Oracle { granularity_s: 10.0 },
            ])
            .collect();
    }
    cfg.duration_ms = (end.saturating_sub(start) + cfg.tick_ms).max(10 * cfg.tick_ms);
    cfg.validate()?;
    Ok(cfg)
}
