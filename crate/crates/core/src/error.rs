use alloc::string::String;

use crate::sample::Metric;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A caller broke an operation's precondition (wrong length, empty input...).
    #[error("contract violation: {0}")]
    Contract(String),
    /// A numeric argument lies outside the function's domain.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("sample does not carry metric `{0}`")]
    MissingMetric(Metric),
    /// A jitter window contained a timed-out probe; the window must be dropped.
    #[error("jitter window contains a TIMEOUT; drop the window")]
    TimeoutInWindow,
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error("trace is empty: {0}")]
    EmptyTrace(String),
}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
