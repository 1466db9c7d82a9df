//! Scenario reports and their JSON / CSV renderings.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use moc_core::reliability::CurveRow;
use moc_core::{Metric, ReactiveTable, ReliabilityReport, RowLabel};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ReportFormat;
use crate::error::{CliError, Result};
use crate::number::{fmt_num, sig6};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub config_hash: String,
    pub seed: u64,
    pub tool_version: String,
    /// Statistic behind improvement percentages.
    pub rtt_statistic: String,
    pub switch_mode: String,
    pub switch_delay_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderEntry {
    pub provider_set: Vec<String>,
    pub samples: usize,
    pub r_s: f64,
    pub q_s: BTreeMap<String, f64>,
    pub mttf_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub extra_hops: u32,
}

fn is_zero(v: &u32) -> bool {
    *v == 0
}

impl ProviderEntry {
    pub fn new(r: &ReliabilityReport, samples: usize, extra_hops: u32) -> Self {
        ProviderEntry {
            provider_set: r.provider_set.clone(),
            samples,
            r_s: sig6(r.r_s),
            q_s: r.q_s.iter().map(|(m, v)| (m.to_string(), sig6(*v))).collect(),
            mttf_ms: r.mttf_ms.map(sig6),
            extra_hops,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEntry {
    pub policy: String,
    pub provider_set: Vec<String>,
    pub r_s: f64,
    pub q_s: BTreeMap<String, f64>,
    pub mttf_ms: Option<f64>,
    pub switch_count: usize,
    pub improvement_vs: BTreeMap<String, f64>,
    pub mean_effective_rtt_ms: f64,
    pub coverage_holes: usize,
}

/// A rectangular table whose cells are JSON numbers or strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(sig6(x)).map_or(Value::Null, Value::Number)
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::Number(n) => n.as_f64().map(fmt_num).unwrap_or_else(|| n.to_string()),
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn parse_cell(s: &str) -> Value {
    if s.is_empty() {
        return Value::Null;
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => num(v),
        _ => Value::String(s.to_string()),
    }
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(cell_text)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn from_csv(text: &str) -> Result<Table> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let columns = r
            .headers()
            .map_err(|e| CliError::Parse {
                path: "table".into(),
                row: 1,
                msg: e.to_string(),
            })?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| CliError::Parse {
                path: "table".into(),
                row: i as u64 + 2,
                msg: e.to_string(),
            })?;
            rows.push(rec.iter().map(parse_cell).collect());
        }
        Ok(Table { columns, rows })
    }

    /// Same columns and numerically equal cells.
    pub fn equivalent(&self, other: &Table) -> bool {
        let same = |a: &Value, b: &Value| match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => x == y,
            _ => a == b,
        };
        self.columns == other.columns
            && self.rows.len() == other.rows.len()
            && self
                .rows
                .iter()
                .zip(&other.rows)
                .all(|(r, s)| r.len() == s.len() && r.iter().zip(s).all(|(a, b)| same(a, b)))
    }
}

pub fn curves_table(rows: &[CurveRow]) -> Table {
    Table {
        columns: ["lambda", "n", "reliability", "mttf_times_lambda"]
            .map(String::from)
            .to_vec(),
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    num(r.lambda),
                    Value::from(r.n),
                    num(r.reliability),
                    num(r.mttf_times_lambda),
                ]
            })
            .collect(),
    }
}

pub fn reactive_table_to_table(t: &ReactiveTable) -> Table {
    let mut columns = vec!["window_s".to_string()];
    columns.extend(t.baselines.iter().map(|b| format!("improvement_vs_{b}")));
    columns.push("switches".to_string());
    let rows = t
        .rows
        .iter()
        .map(|row| {
            let mut cells = vec![match row.label {
                RowLabel::Window { window_ms } => num(window_ms as f64 / 1000.0),
                RowLabel::Oracle => Value::from("oracle"),
            }];
            cells.extend(row.improvements.iter().map(|v| num(*v)));
            cells.push(Value::from(row.switches));
            cells
        })
        .collect();
    Table { columns, rows }
}

fn metric_columns<'a>(q: impl Iterator<Item = &'a BTreeMap<String, f64>> + Clone) -> Vec<String> {
    Metric::ALL
        .iter()
        .map(|m| m.to_string())
        .filter(|m| q.clone().any(|map| map.contains_key(m)))
        .collect()
}

fn opt_num(v: Option<f64>) -> Value {
    v.map_or(Value::Null, num)
}

pub fn providers_table(entries: &[ProviderEntry]) -> Table {
    let metrics = metric_columns(entries.iter().map(|e| &e.q_s));
    let mut columns = vec!["provider_set".to_string(), "samples".into(), "r_s".into()];
    columns.extend(metrics.iter().map(|m| format!("q_{m}")));
    columns.extend(["mttf_ms".to_string(), "extra_hops".into()]);
    let rows = entries
        .iter()
        .map(|e| {
            let mut cells = vec![
                Value::from(e.provider_set.join("+")),
                Value::from(e.samples),
                num(e.r_s),
            ];
            cells.extend(metrics.iter().map(|m| opt_num(e.q_s.get(m).copied())));
            cells.push(opt_num(e.mttf_ms));
            cells.push(Value::from(e.extra_hops));
            cells
        })
        .collect();
    Table { columns, rows }
}

pub fn policies_table(entries: &[PolicyEntry]) -> Table {
    let metrics = metric_columns(entries.iter().map(|e| &e.q_s));
    let baselines: Vec<String> = entries
        .first()
        .map(|e| e.improvement_vs.keys().cloned().collect())
        .unwrap_or_default();
    let mut columns = vec![
        "policy".to_string(),
        "switch_count".into(),
        "mean_effective_rtt_ms".into(),
        "r_s".into(),
    ];
    columns.extend(metrics.iter().map(|m| format!("q_{m}")));
    columns.extend(baselines.iter().map(|b| format!("improvement_vs_{b}")));
    columns.extend(["mttf_ms".to_string(), "coverage_holes".into()]);
    let rows = entries
        .iter()
        .map(|e| {
            let mut cells = vec![
                Value::from(e.policy.clone()),
                Value::from(e.switch_count),
                num(e.mean_effective_rtt_ms),
                num(e.r_s),
            ];
            cells.extend(metrics.iter().map(|m| opt_num(e.q_s.get(m).copied())));
            cells.extend(baselines.iter().map(|b| opt_num(e.improvement_vs.get(b).copied())));
            cells.push(opt_num(e.mttf_ms));
            cells.push(Value::from(e.coverage_holes));
            cells
        })
        .collect();
    Table { columns, rows }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub meta: Meta,
    pub providers: Vec<ProviderEntry>,
    /// Any-network reliability of every multi-provider subset of the
    /// switching client's providers.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub combinations: Vec<ProviderEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub policies: Vec<PolicyEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reactive_table: Option<Table>,
    pub curves: Table,
}

impl ScenarioReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// `(file stem, table)` pairs for the CSV rendering.
    pub fn csv_tables(&self) -> Vec<(&'static str, Table)> {
        let meta = Table {
            columns: vec!["key".into(), "value".into()],
            rows: vec![
                vec!["config_hash".into(), self.meta.config_hash.clone().into()],
                vec!["seed".into(), self.meta.seed.to_string().into()],
                vec!["tool_version".into(), self.meta.tool_version.clone().into()],
                vec!["rtt_statistic".into(), self.meta.rtt_statistic.clone().into()],
                vec!["switch_mode".into(), self.meta.switch_mode.clone().into()],
                vec!["switch_delay_ms".into(), self.meta.switch_delay_ms.to_string().into()],
            ],
        };
        let mut out = vec![("meta", meta), ("providers", providers_table(&self.providers))];
        if !self.combinations.is_empty() {
            out.push(("combinations", providers_table(&self.combinations)));
        }
        if !self.policies.is_empty() {
            out.push(("policies", policies_table(&self.policies)));
        }
        if let Some(t) = &self.reactive_table {
            out.push(("reactive_table", t.clone()));
        }
        out.push(("curves", self.curves.clone()));
        out
    }
}

fn write(path: &Path, text: &str) -> Result<PathBuf> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    Ok(path.to_path_buf())
}

/// Writes `report.json`, or one CSV per table, into `dir`.
pub fn emit_report(report: &ScenarioReport, format: ReportFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    match format {
        ReportFormat::Json => Ok(vec![write(&dir.join("report.json"), &report.to_json())?]),
        ReportFormat::Csv => report
            .csv_tables()
            .into_iter()
            .map(|(name, table)| write(&dir.join(format!("{name}.csv")), &table.to_csv()))
            .collect(),
    }
}
