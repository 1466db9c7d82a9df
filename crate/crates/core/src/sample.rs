//! Measurement samples and the parameter types that qualify them.

use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use crate::error::{contract, domain, Result};

/// Round-trip time of one probe: either a measured value or a timeout.
///
/// Timeouts are kept distinct from any number so that aggregations cannot
/// fold them into an RTT mean by accident.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rtt {
    Millis(f64),
    Timeout,
}

impl Rtt {
    pub fn is_timeout(&self) -> bool {
        matches!(self, Rtt::Timeout)
    }

    pub fn millis(&self) -> Option<f64> {
        match *self {
            Rtt::Millis(v) => Some(v),
            Rtt::Timeout => None,
        }
    }

    /// Latency cost used inside means: measured values above `penalty_ms`
    /// and timeouts both cost `penalty_ms`.
    pub fn cost(&self, penalty_ms: f64) -> f64 {
        match *self {
            Rtt::Millis(v) if v <= penalty_ms => v,
            _ => penalty_ms,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum NetType {
    Lte,
    HspaPlus,
    Other,
    None,
}

impl NetType {
    pub fn as_str(&self) -> &'static str {
        match self {
            NetType::Lte => "LTE",
            NetType::HspaPlus => "HSPA_PLUS",
            NetType::Other => "OTHER",
            NetType::None => "NONE",
        }
    }
}

impl fmt::Display for NetType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NetType {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        match s {
            "LTE" => Ok(NetType::Lte),
            "HSPA_PLUS" => Ok(NetType::HspaPlus),
            "OTHER" => Ok(NetType::Other),
            "NONE" => Ok(NetType::None),
            other => Err(alloc::format!("unknown network type `{other}`")),
        }
    }
}

/// One timestamped measurement of one provider.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Milliseconds since scenario start.
    pub t_ms: u64,
    pub provider_id: String,
    pub rtt: Rtt,
    pub jitter_ms: Option<f64>,
    /// Packet loss as a fraction in `[0, 1]`.
    pub loss: Option<f64>,
    pub dl_kbps: Option<f64>,
    pub ul_kbps: Option<f64>,
    pub plt_ms: Option<f64>,
    pub net_type: Option<NetType>,
    pub lat: Option<f64>,
    pub lon: Option<f64>,
    pub cell_id: Option<String>,
}

impl Sample {
    /// A sample carrying only an RTT; every optional indicator is absent.
    pub fn new(t_ms: u64, provider_id: impl Into<String>, rtt: Rtt) -> Self {
        Sample {
            t_ms,
            provider_id: provider_id.into(),
            rtt,
            jitter_ms: None,
            loss: None,
            dl_kbps: None,
            ul_kbps: None,
            plt_ms: None,
            net_type: None,
            lat: None,
            lon: None,
            cell_id: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Rtt::Millis(v) = self.rtt {
            if !(v.is_finite() && v >= 0.0) {
                return Err(domain(alloc::format!("rtt must be finite and >= 0, got {v}")));
            }
        }
        if let Some(l) = self.loss {
            if !(0.0..=1.0).contains(&l) {
                return Err(domain(alloc::format!("loss must lie in [0, 1], got {l}")));
            }
        }
        for (name, v) in [("dl_kbps", self.dl_kbps), ("ul_kbps", self.ul_kbps)] {
            if let Some(v) = v {
                if !(v >= 0.0) {
                    return Err(domain(alloc::format!("{name} must be >= 0, got {v}")));
                }
            }
        }
        if let Some(j) = self.jitter_ms {
            if !(j >= 0.0) {
                return Err(domain(alloc::format!("jitter must be >= 0, got {j}")));
            }
        }
        Ok(())
    }
}

/// Indicator a threshold test can be applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Metric {
    Rtt,
    Jitter,
    Loss,
    Uplink,
    Downlink,
    Plt,
    Availability,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::Rtt,
        Metric::Jitter,
        Metric::Loss,
        Metric::Uplink,
        Metric::Downlink,
        Metric::Plt,
        Metric::Availability,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Rtt => "rtt",
            Metric::Jitter => "jitter",
            Metric::Loss => "loss",
            Metric::Uplink => "uplink",
            Metric::Downlink => "downlink",
            Metric::Plt => "plt",
            Metric::Availability => "availability",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| alloc::format!("unknown metric `{s}`"))
    }
}

/// Benchmark vector deciding pass/fail per metric.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Thresholds {
    pub uplink_kbps: f64,
    pub downlink_kbps: f64,
    pub loss_max: f64,
    pub rtt_ms: f64,
    pub jitter_ms: f64,
    pub plt_ms: f64,
    /// A link is available when its RTT does not exceed this bound.
    pub availability_rtt_ms: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            uplink_kbps: 25_000.0,
            downlink_kbps: 50_000.0,
            loss_max: 0.0,
            rtt_ms: 100.0,
            jitter_ms: 20.0,
            plt_ms: 1_000.0,
            availability_rtt_ms: 10_000.0,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("uplink_kbps", self.uplink_kbps),
            ("downlink_kbps", self.downlink_kbps),
            ("rtt_ms", self.rtt_ms),
            ("jitter_ms", self.jitter_ms),
            ("plt_ms", self.plt_ms),
            ("availability_rtt_ms", self.availability_rtt_ms),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(alloc::format!("threshold {name} must be > 0, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.loss_max) {
            return Err(domain(alloc::format!(
                "loss_max must lie in [0, 1], got {}",
                self.loss_max
            )));
        }
        if self.rtt_ms >= self.availability_rtt_ms {
            return Err(domain("rtt_ms must be below availability_rtt_ms"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Transport {
    TcpLike,
    UdpLike,
}

/// Probe burst configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ProbeSpec {
    /// Any positive size; the measurement campaign used 200, 1024, 2048 and 4096.
    pub packet_size_bytes: u32,
    pub packets_per_burst: u32,
    pub burst_interval_s: f64,
    pub timeout_s: f64,
    pub transport: Transport,
}

impl ProbeSpec {
    pub const CANONICAL_PACKET_SIZES: [u32; 4] = [200, 1024, 2048, 4096];

    pub fn validate(&self) -> Result<()> {
        if self.packets_per_burst < 1 {
            return Err(contract("packets_per_burst must be >= 1"));
        }
        if self.packet_size_bytes < 1 {
            return Err(contract("packet_size_bytes must be >= 1"));
        }
        if !(self.timeout_s > 0.0) {
            return Err(domain("timeout_s must be > 0"));
        }
        Ok(())
    }

    pub fn timeout_ms(&self) -> f64 {
        self.timeout_s * 1000.0
    }

    /// Maps a raw round-trip reading onto [`Rtt`]: anything at or past the
    /// probe timeout is a timeout.
    pub fn classify(&self, rtt_ms: f64) -> Rtt {
        if rtt_ms >= self.timeout_ms() {
            Rtt::Timeout
        } else {
            Rtt::Millis(rtt_ms)
        }
    }

    /// Same as [`classify`](Self::classify) for an already-typed reading.
    pub fn normalize(&self, rtt: Rtt) -> Rtt {
        match rtt {
            Rtt::Millis(v) => self.classify(v),
            Rtt::Timeout => Rtt::Timeout,
        }
    }
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec {
            packet_size_bytes: 200,
            packets_per_burst: 10,
            burst_interval_s: 60.0,
            timeout_s: 60.0,
            transport: Transport::TcpLike,
        }
    }
}

/// Page-load-time model: handshake round trips plus serialization delay.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PltModel {
    pub page_bytes: u64,
    pub handshake_rtts: f64,
}

impl PltModel {
    pub fn validate(&self) -> Result<()> {
        if self.page_bytes < 1 {
            return Err(domain("page_bytes must be >= 1"));
        }
        if !(self.handshake_rtts >= 0.0 && self.handshake_rtts.is_finite()) {
            return Err(domain("handshake_rtts must be >= 0"));
        }
        Ok(())
    }
}

impl Default for PltModel {
    fn default() -> Self {
        // 1.3 MB reference page
        PltModel {
            page_bytes: 1_363_149,
            handshake_rtts: 2.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_thresholds_are_valid() {
        Thresholds::default().validate().unwrap();
        let bad = Thresholds {
            rtt_ms: 20_000.0,
            ..Thresholds::default()
        };
        assert!(bad.validate().is_err());
        let bad = Thresholds {
            loss_max: 1.5,
            ..Thresholds::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn probe_classify_uses_timeout_bound() {
        let spec = ProbeSpec::default();
        assert_eq!(spec.classify(59_999.0), Rtt::Millis(59_999.0));
        assert_eq!(spec.classify(60_000.0), Rtt::Timeout);
        assert!(ProbeSpec {
            packets_per_burst: 0,
            ..spec
        }
        .validate()
        .is_err());
    }

    #[test]
    fn rtt_cost_caps_at_penalty() {
        assert_eq!(Rtt::Millis(40.0).cost(10_000.0), 40.0);
        assert_eq!(Rtt::Millis(12_000.0).cost(10_000.0), 10_000.0);
        assert_eq!(Rtt::Timeout.cost(10_000.0), 10_000.0);
    }

    #[test]
    fn metric_and_net_type_names_round_trip() {
        for m in Metric::ALL {
            assert_eq!(m.as_str().parse::<Metric>().unwrap(), m);
        }
        for n in [NetType::Lte, NetType::HspaPlus, NetType::Other, NetType::None] {
            assert_eq!(n.as_str().parse::<NetType>().unwrap(), n);
        }
        assert!("lte".parse::<NetType>().is_err());
    }

    #[test]
    fn sample_validation() {
        let mut s = Sample::new(0, "a", Rtt::Millis(10.0));
        s.validate().unwrap();
        s.loss = Some(1.2);
        assert!(s.validate().is_err());
        s.loss = None;
        s.dl_kbps = Some(-1.0);
        assert!(s.validate().is_err());
    }
}
