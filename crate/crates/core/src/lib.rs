//! Reliability models and switching policies for redundant multi-operator
//! cellular connectivity.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no I/O. It provides:
//!
//! * [`sample`]: measurement samples, performance thresholds, probe and
//!   page-load models, plus the per-sample metric tests in [`metrics`].
//! * [`reliability`]: hazard-rate congestion, Weibull availability,
//!   n-way parallel redundancy, MTTF, and empirical R_s / Q_s over traces.
//! * [`links`]: seeded synthetic link traces, timeline alignment and the
//!   supply-side (single upstream core) route penalty.
//! * [`switcher`]: single-provider, windowed reactive and hindsight oracle
//!   switching policies with switch-delay accounting.
#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` style checks reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod links;
pub mod metrics;
pub mod reliability;
pub mod sample;
pub mod switcher;
pub mod trace;

pub use error::{Error, Result};
pub use links::{align, generate_trace, ssm_transform, AlignedTraces, SyntheticLinkSpec};
pub use metrics::{burst_stats, jitter_from_window, meets_threshold, plt_model_ms, BurstStats};
pub use reliability::{
    dsm_q_s, empirical_q_s, empirical_r_s, mttf, parallel_reliability, redundancy_curves, CurveRow, HazardParams, Mttf,
    RedundancyParams, ReliabilityReport, WeibullParams,
};
pub use sample::{Metric, NetType, PltModel, ProbeSpec, Rtt, Sample, Thresholds, Transport};
pub use switcher::{
    apply_schedule, baseline_trace, baseline_traces, evaluate_policy, improvement, oracle_schedule, reactive_table,
    windowed_decide, Policy, PolicyOutcome, ReactiveRow, ReactiveTable, RowLabel, Schedule, Segment, SwitchMode,
    SwitchSettings, SwitchStats,
};
pub use trace::LinkTrace;
