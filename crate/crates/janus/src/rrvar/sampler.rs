//! Sampler kinds and their value contracts, plus the host CPU sampler.
//!
//! The paper's CPU sampler shells out to `top`; here the sampler is a
//! contract. The host implementation reads `/proc/stat` (best effort,
//! Linux only) and every test path uses replayed or synthesized commits
//! instead, driven by an injected clock.

use std::path::PathBuf;

use super::RegistryError;

/// What feeds a reflective variable.
#[derive(Debug, Clone, PartialEq)]
pub enum SamplerSpec {
    /// Host CPU usage percentage, integer 0 (idle) to 100 (saturated).
    CpuPercentHost,
    /// Process state codes arriving over the UDP event protocol.
    UdpEventFeed,
    /// Behavior-drift values computed from user-interface events.
    UiEventFeed,
    /// Values replayed from a trace file against the clock.
    SyntheticReplay { path: PathBuf },
}

impl SamplerSpec {
    pub fn kind(&self) -> SamplerKind {
        match self {
            SamplerSpec::CpuPercentHost => SamplerKind::CpuPercent,
            SamplerSpec::UdpEventFeed => SamplerKind::UdpEventFeed,
            SamplerSpec::UiEventFeed => SamplerKind::UiEventFeed,
            SamplerSpec::SyntheticReplay { .. } => SamplerKind::SyntheticReplay,
        }
    }
}

/// Value contract of a sampler, used by commit validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    CpuPercent,
    UdpEventFeed,
    UiEventFeed,
    SyntheticReplay,
}

impl SamplerKind {
    pub(crate) fn validate(self, value: f64) -> Result<(), RegistryError> {
        if !value.is_finite() {
            return Err(RegistryError::OutOfRange {
                value,
                kind: self.name(),
            });
        }
        let ok = match self {
            SamplerKind::CpuPercent => {
                value.fract() == 0.0 && (0.0..=100.0).contains(&value)
            }
            SamplerKind::UdpEventFeed => value.fract() == 0.0 && (1.0..=5.0).contains(&value),
            SamplerKind::UiEventFeed | SamplerKind::SyntheticReplay => true,
        };
        if ok {
            Ok(())
        } else {
            Err(RegistryError::OutOfRange {
                value,
                kind: self.name(),
            })
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::CpuPercent => "cpu-percent",
            SamplerKind::UdpEventFeed => "udp-event-feed",
            SamplerKind::UiEventFeed => "ui-event-feed",
            SamplerKind::SyntheticReplay => "synthetic-replay",
        }
    }
}

/// Aggregate jiffy counters from one `cpu` line of `/proc/stat`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CpuStatSample {
    pub busy: u64,
    pub total: u64,
}

impl CpuStatSample {
    /// Reads the aggregate `cpu` line from `/proc/stat`. Returns `None` when
    /// the file is missing or unparseable rather than failing the sampler.
    pub fn from_host() -> Option<Self> {
        let text = std::fs::read_to_string("/proc/stat").ok()?;
        Self::parse(&text)
    }

    pub fn parse(proc_stat: &str) -> Option<Self> {
        let line = proc_stat
            .lines()
            .find(|l| l.starts_with("cpu ") || *l == "cpu")?;
        let fields: Vec<u64> = line
            .split_whitespace()
            .skip(1)
            .map(|f| f.parse().ok())
            .collect::<Option<Vec<u64>>>()?;
        if fields.len() < 4 {
            return None;
        }
        // user nice system idle iowait irq softirq steal ...
        let idle = fields[3] + fields.get(4).copied().unwrap_or(0);
        let total: u64 = fields.iter().sum();
        Some(Self {
            busy: total - idle,
            total,
        })
    }
}

/// Integer busy percentage between two counter samples, in 0..=100.
pub fn cpu_percent_from_proc_stat(before: CpuStatSample, after: CpuStatSample) -> Option<f64> {
    let total = after.total.checked_sub(before.total)?;
    let busy = after.busy.checked_sub(before.busy)?;
    if total == 0 {
        return None;
    }
    let pct = (busy as f64 / total as f64 * 100.0).round();
    Some(pct.clamp(0.0, 100.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_per_kind() {
        assert!(SamplerKind::CpuPercent.validate(0.0).is_ok());
        assert!(SamplerKind::CpuPercent.validate(100.0).is_ok());
        assert!(SamplerKind::CpuPercent.validate(100.5).is_err());
        assert!(SamplerKind::CpuPercent.validate(-1.0).is_err());
        assert!(SamplerKind::CpuPercent.validate(f64::NAN).is_err());

        assert!(SamplerKind::UdpEventFeed.validate(1.0).is_ok());
        assert!(SamplerKind::UdpEventFeed.validate(5.0).is_ok());
        assert!(SamplerKind::UdpEventFeed.validate(6.0).is_err());
        assert!(SamplerKind::UdpEventFeed.validate(0.0).is_err());

        assert!(SamplerKind::UiEventFeed.validate(-123.75).is_ok());
        assert!(SamplerKind::SyntheticReplay.validate(1e12).is_ok());
        assert!(SamplerKind::SyntheticReplay.validate(f64::INFINITY).is_err());
    }

    #[test]
    fn proc_stat_parsing() {
        let text = "cpu  100 0 50 800 50 0 0 0 0 0\ncpu0 50 0 25 400 25 0 0 0 0 0\n";
        let sample = CpuStatSample::parse(text).unwrap();
        assert_eq!(sample.total, 1000);
        assert_eq!(sample.busy, 150);
        assert!(CpuStatSample::parse("intr 12345\n").is_none());
        assert!(CpuStatSample::parse("cpu  1 2\n").is_none());
    }

    #[test]
    fn percent_between_samples() {
        let a = CpuStatSample { busy: 150, total: 1000 };
        let b = CpuStatSample { busy: 250, total: 1200 };
        assert_eq!(cpu_percent_from_proc_stat(a, b), Some(50.0));
        assert_eq!(cpu_percent_from_proc_stat(b, a), None);
        assert_eq!(cpu_percent_from_proc_stat(a, a), None);
    }
}
