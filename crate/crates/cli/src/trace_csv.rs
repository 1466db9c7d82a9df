//! Long-format trace CSV: one row per sample, all providers in one file.
//!
//! Columns are fixed; an empty field means the optional value is absent and
//! `TIMEOUT` (case-sensitive) in `rtt_ms` marks a timed-out probe. Floats
//! are written with six significant digits.

use std::fs;
use std::path::Path;

use moc_core::{LinkTrace, NetType, Rtt, Sample};

use crate::error::{CliError, Result};
use crate::number::fmt_num;

pub const HEADER: [&str; 12] = [
    "t_ms",
    "provider_id",
    "rtt_ms",
    "jitter_ms",
    "loss",
    "dl_kbps",
    "ul_kbps",
    "plt_ms",
    "net_type",
    "lat",
    "lon",
    "cell_id",
];

pub const TIMEOUT_LITERAL: &str = "TIMEOUT";

pub fn header_line() -> String {
    HEADER.join(",")
}

/// Reads a trace file into one trace per provider, in order of first appearance.
pub fn parse_trace_csv(path: &Path, tick_ms: u64) -> Result<Vec<LinkTrace>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_trace_str(&text, &path.display().to_string(), tick_ms)
}

pub fn parse_trace_str(text: &str, origin: &str, tick_ms: u64) -> Result<Vec<LinkTrace>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();

    let header = match records.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(parse_err(origin, 1, e.to_string())),
        None => {
            return Err(CliError::Schema {
                path: origin.to_string(),
                expected: header_line(),
                found: String::new(),
            })
        }
    };
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(CliError::Schema {
            path: origin.to_string(),
            expected: header_line(),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut order: Vec<String> = Vec::new();
    let mut by_provider: Vec<Vec<Sample>> = Vec::new();
    for (i, rec) in records.enumerate() {
        // header is row 1
        let row = i as u64 + 2;
        let rec = rec.map_err(|e| parse_err(origin, row, e.to_string()))?;
        if rec.len() != HEADER.len() {
            return Err(parse_err(
                origin,
                row,
                format!("expected {} fields, found {}", HEADER.len(), rec.len()),
            ));
        }
        let sample = parse_row(&rec).map_err(|msg| parse_err(origin, row, msg))?;
        let slot = match order.iter().position(|p| *p == sample.provider_id) {
            Some(p) => p,
            None => {
                order.push(sample.provider_id.clone());
                by_provider.push(Vec::new());
                order.len() - 1
            }
        };
        if let Some(prev) = by_provider[slot].last() {
            if sample.t_ms <= prev.t_ms {
                return Err(parse_err(
                    origin,
                    row,
                    format!(
                        "t_ms {} for provider `{}` does not follow {}",
                        sample.t_ms, sample.provider_id, prev.t_ms
                    ),
                ));
            }
        }
        by_provider[slot].push(sample);
    }

    order
        .into_iter()
        .zip(by_provider)
        .map(|(id, samples)| Ok(LinkTrace::new(id, samples, tick_ms)?))
        .collect()
}

fn parse_err(origin: &str, row: u64, msg: String) -> CliError {
    CliError::Parse {
        path: origin.to_string(),
        row,
        msg,
    }
}

fn opt_f64(field: &str, name: &str) -> std::result::Result<Option<f64>, String> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse::<f64>()
        .map(Some)
        .map_err(|_| format!("`{field}` is not a number for {name}"))
}

fn parse_row(rec: &csv::StringRecord) -> std::result::Result<Sample, String> {
    let t_ms = rec[0]
        .parse::<u64>()
        .map_err(|_| format!("`{}` is not a non-negative integer for t_ms", &rec[0]))?;
    let provider_id = &rec[1];
    if provider_id.is_empty() {
        return Err("provider_id is empty".to_string());
    }
    let rtt = match &rec[2] {
        TIMEOUT_LITERAL => Rtt::Timeout,
        "" => return Err("rtt_ms is required".to_string()),
        v => Rtt::Millis(opt_f64(v, "rtt_ms")?.unwrap_or_default()),
    };
    let net_type = match &rec[8] {
        "" => None,
        v => Some(v.parse::<NetType>()?),
    };
    let sample = Sample {
        t_ms,
        provider_id: provider_id.to_string(),
        rtt,
        jitter_ms: opt_f64(&rec[3], "jitter_ms")?,
        loss: opt_f64(&rec[4], "loss")?,
        dl_kbps: opt_f64(&rec[5], "dl_kbps")?,
        ul_kbps: opt_f64(&rec[6], "ul_kbps")?,
        plt_ms: opt_f64(&rec[7], "plt_ms")?,
        net_type,
        lat: opt_f64(&rec[9], "lat")?,
        lon: opt_f64(&rec[10], "lon")?,
        cell_id: (!rec[11].is_empty()).then(|| rec[11].to_string()),
    };
    sample.validate().map_err(|e| e.to_string())?;
    Ok(sample)
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

/// Serializes traces in time order (ties in trace order), LF line endings.
pub fn write_trace_string(traces: &[LinkTrace]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(HEADER).expect("in-memory write");
    let mut rows: Vec<(&LinkTrace, &moc_core::Sample)> = traces
        .iter()
        .flat_map(|t| t.samples().iter().map(move |s| (t, s)))
        .collect();
    rows.sort_by_key(|(_, s)| s.t_ms);
    for (trace, s) in rows {
        let rtt = match s.rtt {
            Rtt::Millis(v) => fmt_num(v),
            Rtt::Timeout => TIMEOUT_LITERAL.to_string(),
        };
        let row = [
            s.t_ms.to_string(),
            trace.provider_id().to_string(),
            rtt,
            opt(s.jitter_ms),
            opt(s.loss),
            opt(s.dl_kbps),
            opt(s.ul_kbps),
            opt(s.plt_ms),
            s.net_type.map(|n| n.as_str().to_string()).unwrap_or_default(),
            opt(s.lat),
            opt(s.lon),
            s.cell_id.clone().unwrap_or_default(),
        ];
        w.write_record(&row).expect("in-memory write");
    }
    let bytes = w.into_inner().expect("in-memory flush");
    String::from_utf8(bytes).expect("csv output is utf-8")
}

pub fn write_trace_csv(path: &Path, traces: &[LinkTrace]) -> Result<()> {
    fs::write(path, write_trace_string(traces)).map_err(|e| CliError::io(path, e))
}
