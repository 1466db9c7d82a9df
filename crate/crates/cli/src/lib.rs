//! File formats, scenario configuration and the `moc` command line on top
//! of `moc-core`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod number;
pub mod report;
pub mod runner;
pub mod trace_csv;

pub use config::ScenarioConfig;
pub use error::{CliError, Result};
pub use report::{emit_report, ScenarioReport, Table};
pub use runner::{load_traces, run_scenario, run_with_traces, ScenarioOutput};
