//! Scenario configuration (JSON, `"schema": 1`).

use std::fs;
use std::path::{Path, PathBuf};

use moc_core::{PltModel, Policy, ProbeSpec, SwitchMode, SyntheticLinkSpec, Thresholds};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: u32,
    #[serde(default)]
    pub seed: u64,
    pub duration_ms: u64,
    #[serde(default = "default_tick")]
    pub tick_ms: u64,
    /// Defaults to two ticks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub staleness_bound_ms: Option<u64>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub plt_model: PltModel,
    #[serde(default)]
    pub probe: ProbeSpec,
    pub providers: Vec<ProviderConfig>,
    #[serde(default)]
    pub policies: Vec<PolicyConfig>,
    /// Providers a switching client can choose from; defaults to every
    /// provider that is not derived through the supply-side transform.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dsm_providers: Option<Vec<String>>,
    #[serde(default)]
    pub reactive: ReactiveConfig,
    #[serde(default)]
    pub switch_delay_ms: u64,
    #[serde(default)]
    pub switch_mode: SwitchModeConfig,
    #[serde(default)]
    pub curves: CurveGrid,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_tick() -> u64 {
    3000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub id: String,
    #[serde(flatten)]
    pub source: ProviderSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderSource {
    Synthetic(SyntheticLinkSpec),
    TraceFile(TraceFileRef),
    /// Another provider routed through a single upstream core.
    Ssm(SsmConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceFileRef {
    /// Relative paths resolve against the config file's directory.
    pub path: PathBuf,
    /// Provider id inside the file; defaults to the configured id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsmConfig {
    pub of: String,
    pub extra_rtt_ms: f64,
    #[serde(default)]
    pub extra_hops: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyConfig {
    Single {
        provider: String,
    },
    WindowedDsm {
        window_s: f64,
        #[serde(default = "default_probe_interval")]
        probe_interval_s: f64,
    },
    Oracle {
        #[serde(default = "default_granularity")]
        granularity_s: f64,
    },
}

fn default_probe_interval() -> f64 {
    3.0
}

fn default_granularity() -> f64 {
    10.0
}

fn seconds_to_ms(s: f64, what: &str) -> Result<u64> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(CliError::Config(format!(
            "{what} must be a positive number of seconds, got {s}"
        )));
    }
    Ok((s * 1000.0).round() as u64)
}

impl PolicyConfig {
    pub fn to_policy(&self) -> Result<Policy> {
        let policy = match self {
            PolicyConfig::Single { provider } => Policy::Single {
                provider: provider.clone(),
            },
            PolicyConfig::WindowedDsm {
                window_s,
                probe_interval_s,
            } => Policy::WindowedDsm {
                window_ms: seconds_to_ms(*window_s, "window_s")?,
                probe_interval_ms: seconds_to_ms(*probe_interval_s, "probe_interval_s")?,
            },
            PolicyConfig::Oracle { granularity_s } => Policy::Oracle {
                granularity_ms: seconds_to_ms(*granularity_s, "granularity_s")?,
            },
        };
        policy.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(policy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReactiveConfig {
    pub windows_s: Vec<f64>,
    /// Defaults to the switching client's providers.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baselines: Option<Vec<String>>,
    pub oracle_granularity_s: f64,
}

impl Default for ReactiveConfig {
    fn default() -> Self {
        ReactiveConfig {
            windows_s: vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0],
            baselines: None,
            oracle_granularity_s: 10.0,
        }
    }
}

impl ReactiveConfig {
    pub fn windows_ms(&self) -> Result<Vec<u64>> {
        self.windows_s
            .iter()
            .map(|w| seconds_to_ms(*w, "reactive window"))
            .collect()
    }

    pub fn oracle_granularity_ms(&self) -> Result<u64> {
        seconds_to_ms(self.oracle_granularity_s, "oracle_granularity_s")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchModeConfig {
    #[default]
    Outage,
    Continuity,
}

impl From<SwitchModeConfig> for SwitchMode {
    fn from(m: SwitchModeConfig) -> Self {
        match m {
            SwitchModeConfig::Outage => SwitchMode::Outage,
            SwitchModeConfig::Continuity => SwitchMode::Continuity,
        }
    }
}

/// λ grid for the reliability / MTTF curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveGrid {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_step: f64,
    pub n_max: u32,
}

impl Default for CurveGrid {
    fn default() -> Self {
        // 2% .. 21% unavailability
        CurveGrid {
            lambda_min: 0.02,
            lambda_max: 0.21,
            lambda_step: 0.01,
            n_max: 4,
        }
    }
}

impl CurveGrid {
    pub fn lambdas(&self) -> Result<Vec<f64>> {
        if !(self.lambda_step > 0.0) || !(self.lambda_min <= self.lambda_max) {
            return Err(CliError::Config(format!("invalid lambda grid {self:?}")));
        }
        let count = ((self.lambda_max - self.lambda_min) / self.lambda_step + 1e-9).floor() as u64 + 1;
        Ok((0..count)
            .map(|k| {
                let v = self.lambda_min + k as f64 * self.lambda_step;
                // strip accumulated binary noise so grid points print cleanly
                (v * 1e12).round() / 1e12
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    pub format: ReportFormat,
}

impl ScenarioConfig {
    /// Default settings around the given providers; not yet validated.
    pub fn with_providers(providers: Vec<ProviderConfig>) -> Self {
        ScenarioConfig {
            schema: SCHEMA_VERSION,
            seed: 0,
            duration_ms: 0,
            tick_ms: default_tick(),
            staleness_bound_ms: None,
            thresholds: Thresholds::default(),
            plt_model: PltModel::default(),
            probe: ProbeSpec::default(),
            providers,
            policies: Vec::new(),
            dsm_providers: None,
            reactive: ReactiveConfig::default(),
            switch_delay_ms: 0,
            switch_mode: SwitchModeConfig::default(),
            curves: CurveGrid::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Structural checks that need no file access.
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |msg: String| Err(CliError::Config(msg));
        if self.schema != SCHEMA_VERSION {
            return cfg_err(format!("unsupported schema {}, expected {SCHEMA_VERSION}", self.schema));
        }
        if self.providers.is_empty() {
            return cfg_err("at least one provider is required".into());
        }
        if self.tick_ms == 0 {
            return cfg_err("tick_ms must be > 0".into());
        }
        if self.duration_ms < 10 * self.tick_ms {
            return cfg_err(format!(
                "duration_ms {} is shorter than 10 ticks of {} ms",
                self.duration_ms, self.tick_ms
            ));
        }
        let model = |r: moc_core::Result<()>| r.map_err(|e| CliError::Config(e.to_string()));
        model(self.thresholds.validate())?;
        model(self.plt_model.validate())?;
        model(self.probe.validate())?;
        for (i, p) in self.providers.iter().enumerate() {
            if p.id.is_empty() {
                return cfg_err(format!("provider {i} has an empty id"));
            }
            if self.providers[..i].iter().any(|q| q.id == p.id) {
                return cfg_err(format!("provider `{}` is defined twice", p.id));
            }
            match &p.source {
                ProviderSource::Synthetic(spec) => model(spec.validate())?,
                ProviderSource::Ssm(ssm) => {
                    if !self
                        .providers
                        .iter()
                        .any(|q| q.id == ssm.of && !matches!(q.source, ProviderSource::Ssm(_)))
                    {
                        return cfg_err(format!(
                            "supply-side provider `{}` refers to unknown or derived provider `{}`",
                            p.id, ssm.of
                        ));
                    }
                    if !(ssm.extra_rtt_ms >= 0.0) {
                        return cfg_err(format!("provider `{}`: extra_rtt_ms must be >= 0", p.id));
                    }
                }
                ProviderSource::TraceFile(_) => {}
            }
        }
        for id in self.dsm_set() {
            if !self.providers.iter().any(|p| p.id == id) {
                return cfg_err(format!("dsm provider `{id}` is not defined"));
            }
        }
        for policy in &self.policies {
            let p = policy.to_policy()?;
            if let Policy::Single { provider } = &p {
                if !self.providers.iter().any(|q| &q.id == provider) {
                    return cfg_err(format!("policy names unknown provider `{provider}`"));
                }
            }
        }
        self.reactive.windows_ms()?;
        self.reactive.oracle_granularity_ms()?;
        self.curves.lambdas()?;
        Ok(())
    }

    pub fn dsm_set(&self) -> Vec<String> {
        match &self.dsm_providers {
            Some(ids) => ids.clone(),
            None => self
                .providers
                .iter()
                .filter(|p| !matches!(p.source, ProviderSource::Ssm(_)))
                .map(|p| p.id.clone())
                .collect(),
        }
    }

    pub fn staleness_bound_ms(&self) -> u64 {
        self.staleness_bound_ms.unwrap_or(2 * self.tick_ms)
    }

    /// SHA-256 over the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}
