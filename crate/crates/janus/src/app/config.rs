//! Monitor configuration: line-oriented `key = value` text with dotted
//! keys and `#` comments. Unknown keys are rejected, as are duplicates.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::trust::{Action, ActionPolicy, MachineWeights, TrustState, TrustThresholds};
use crate::wire::ProcessEvent;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Where a log stream goes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LogTarget {
    Stdout,
    File(PathBuf),
}

impl fmt::Display for LogTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogTarget::Stdout => f.write_str("-"),
            LogTarget::File(path) => write!(f, "{}", path.display()),
        }
    }
}

/// Feed of the CPU channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CpuSampler {
    /// Sample the host (Linux `/proc/stat`).
    Host,
    /// Replay percent values from a trace file.
    Replay(PathBuf),
    /// Values committed by embedding code (scenarios, tests).
    Injected,
    /// Channel disabled; its drift is constantly zero.
    Off,
}

/// Feed of the exec channel. With `Udp`, the cell holds process-state codes
/// and the penalties map them to drift; with `Replay`/`Injected`, the values
/// are drift directly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExecSampler {
    Udp,
    Replay(PathBuf),
    Injected,
    Off,
}

/// Feed of the user-interface channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UiSampler {
    /// Events replayed from a trace file against the clock.
    Trace(PathBuf),
    /// Events pushed by embedding code (scenarios, the keypress demo).
    Injected,
    Off,
}

/// Drift-to-penalty table for process-state codes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecPenalties {
    pub stop: f64,
    pub slow: f64,
    pub paused: f64,
    pub start: f64,
    pub signal: f64,
}

impl ExecPenalties {
    pub fn for_event(&self, event: ProcessEvent) -> f64 {
        match event {
            ProcessEvent::Stop => self.stop,
            ProcessEvent::Slow => self.slow,
            ProcessEvent::Paused => self.paused,
            ProcessEvent::Start => self.start,
            ProcessEvent::Signal => self.signal,
        }
    }
}

impl Default for ExecPenalties {
    fn default() -> Self {
        Self {
            stop: 1.0,
            slow: 2.0,
            paused: 0.5,
            start: 0.0,
            signal: 5.0,
        }
    }
}

/// Where the user-behavior reference profile comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSource {
    /// Build it from a reference event trace.
    Reference(PathBuf),
    /// Stated directly.
    Numeric { mu: f64, sigma: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpuConfig {
    pub name: String,
    pub sampler: CpuSampler,
    pub period_ms: u64,
    pub staleness_s: f64,
    /// Reference percent level; deviation from it is the raw drift.
    pub reference: f64,
    /// Drift units per percent of deviation.
    pub scale: f64,
}

impl Default for CpuConfig {
    fn default() -> Self {
        Self {
            name: "cpu".to_string(),
            sampler: CpuSampler::Host,
            period_ms: 500,
            staleness_s: 2.0,
            reference: 0.0,
            scale: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecConfig {
    pub name: String,
    pub sampler: ExecSampler,
    pub staleness_s: f64,
    pub penalties: ExecPenalties,
}

impl Default for ExecConfig {
    fn default() -> Self {
        Self {
            name: "mplayer".to_string(),
            sampler: ExecSampler::Udp,
            staleness_s: 2.0,
            penalties: ExecPenalties::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UiConfig {
    pub name: String,
    pub sampler: UiSampler,
    pub window_s: f64,
    pub tau: f64,
    pub staleness_s: f64,
    pub profile: Option<ProfileSource>,
}

impl Default for UiConfig {
    fn default() -> Self {
        Self {
            name: "ui".to_string(),
            sampler: UiSampler::Off,
            window_s: 5.0,
            tau: 3.0,
            staleness_s: 2.0,
            profile: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppConfig {
    pub bind: String,
    pub period_ms: u64,
    /// Live monitor stops after this much wall time; zero runs until the
    /// process is killed.
    pub duration_s: f64,
    pub cpu: CpuConfig,
    pub exec: ExecConfig,
    pub ui: UiConfig,
    pub weights: MachineWeights,
    pub thresholds: TrustThresholds,
    pub debounce_ticks: u32,
    /// Hard bound used when classifying recorded drift series.
    pub drift_bound: f64,
    pub policy: ActionPolicy,
    /// External hook commands, run through the shell by the live monitor.
    pub hook_commands: BTreeMap<String, String>,
    pub trust_log: LogTarget,
    pub action_log: LogTarget,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            bind: format!("127.0.0.1:{}", crate::wire::DEFAULT_PORT),
            period_ms: 500,
            duration_s: 0.0,
            cpu: CpuConfig::default(),
            exec: ExecConfig::default(),
            ui: UiConfig::default(),
            weights: MachineWeights::default(),
            thresholds: TrustThresholds::default(),
            debounce_ticks: 0,
            drift_bound: 0.2,
            policy: ActionPolicy::default(),
            hook_commands: BTreeMap::new(),
            trust_log: LogTarget::Stdout,
            action_log: LogTarget::Stdout,
        }
    }
}

impl AppConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        parse_config(&text)
    }

    pub fn period_s(&self) -> f64 {
        self.period_ms as f64 / 1000.0
    }

    /// Structural validation beyond per-key syntax.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let names = [&self.cpu.name, &self.exec.name, &self.ui.name];
        for (i, a) in names.iter().enumerate() {
            for b in names.iter().skip(i + 1) {
                if a == b {
                    return Err(ConfigError::Invalid(format!(
                        "duplicate reflective-variable name `{a}`"
                    )));
                }
            }
        }
        if self.period_ms < 10 {
            return Err(ConfigError::Invalid(format!(
                "monitor.period_ms {} is below 10",
                self.period_ms
            )));
        }
        if self.cpu.period_ms < 10 {
            return Err(ConfigError::Invalid(format!(
                "cpu.period_ms {} is below 10",
                self.cpu.period_ms
            )));
        }
        for (key, v) in [
            ("cpu.scale", self.cpu.scale),
            ("cpu.reference", self.cpu.reference),
            ("exec.penalty.stop", self.exec.penalties.stop),
            ("exec.penalty.slow", self.exec.penalties.slow),
            ("exec.penalty.paused", self.exec.penalties.paused),
            ("exec.penalty.start", self.exec.penalties.start),
            ("exec.penalty.signal", self.exec.penalties.signal),
        ] {
            if !v.is_finite() {
                return Err(ConfigError::Invalid(format!("{key} must be finite")));
            }
        }
        if !(self.ui.window_s.is_finite() && self.ui.window_s > 0.0) {
            return Err(ConfigError::Invalid("ui.window_s must be positive".into()));
        }
        if !(self.ui.tau.is_finite() && self.ui.tau > 0.0) {
            return Err(ConfigError::Invalid("ui.tau must be positive".into()));
        }
        if !(self.drift_bound.is_finite() && self.drift_bound > 0.0) {
            return Err(ConfigError::Invalid("drift.bound must be positive".into()));
        }
        if self.ui.sampler != UiSampler::Off && self.ui.profile.is_none() {
            return Err(ConfigError::Invalid(
                "ui channel is active but no profile is configured \
                 (set ui.reference or ui.mu and ui.sigma)"
                    .into(),
            ));
        }
        if let Some(ProfileSource::Numeric { mu, sigma }) = &self.ui.profile {
            if !(mu.is_finite() && *mu >= 0.0) || !(sigma.is_finite() && *sigma > 0.0) {
                return Err(ConfigError::Invalid(
                    "ui.mu must be non-negative and ui.sigma positive".into(),
                ));
            }
        }
        Ok(())
    }
}

fn parse_actions(value: &str) -> Result<Vec<Action>, String> {
    let mut actions = Vec::new();
    for item in value.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (kind, arg) = match item.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (item, None),
        };
        let action = match (kind, arg) {
            ("log", None) => Action::Log,
            ("reconfigure", Some(hook)) if !hook.is_empty() => {
                Action::Reconfigure(hook.to_string())
            }
            ("alarm", Some(channel)) if !channel.is_empty() => Action::Alarm(channel.to_string()),
            ("safestop", Some(hook)) if !hook.is_empty() => Action::SafeStop(hook.to_string()),
            _ => return Err(format!("unrecognized action `{item}`")),
        };
        actions.push(action);
    }
    Ok(actions)
}

fn render_actions(actions: &[Action]) -> String {
    actions
        .iter()
        .map(|a| match a {
            Action::Log => "log".to_string(),
            Action::Reconfigure(h) => format!("reconfigure:{h}"),
            Action::Alarm(c) => format!("alarm:{c}"),
            Action::SafeStop(h) => format!("safestop:{h}"),
        })
        .collect::<Vec<_>>()
        .join(",")
}

/// Parses a config text. The result has been through [`AppConfig::validate`].
pub fn parse_config(text: &str) -> Result<AppConfig, ConfigError> {
    let mut cfg = AppConfig::default();
    let mut policy_by_state: BTreeMap<TrustState, Vec<Action>> = BTreeMap::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    // Weights, thresholds and the ui profile arrive as individual keys;
    // collected during the scan and combined afterwards.
    let mut w_cpu = cfg.weights.w_cpu();
    let mut w_exec = cfg.weights.w_exec();
    let mut theta_hi = cfg.thresholds.theta_hi();
    let mut theta_lo = cfg.thresholds.theta_lo();
    let mut ui_mu: Option<f64> = None;
    let mut ui_sigma: Option<f64> = None;
    let mut ui_reference: Option<PathBuf> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let stripped = stripped.trim();
        if stripped.is_empty() {
            continue;
        }
        let (key, value) = stripped.split_once('=').ok_or(ConfigError::Line {
            line,
            msg: "expected `key = value`".to_string(),
        })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(ConfigError::Line {
                line,
                msg: "empty key".to_string(),
            });
        }
        if seen.insert(key.to_string(), line).is_some() {
            return Err(ConfigError::DuplicateKey {
                line,
                key: key.to_string(),
            });
        }

        let bad = |msg: String| ConfigError::Line { line, msg };
        let parse_f64 = |v: &str| -> Result<f64, ConfigError> {
            v.parse()
                .map_err(|_| ConfigError::Line {
                    line,
                    msg: format!("invalid number `{v}`"),
                })
        };
        let parse_u64 = |v: &str| -> Result<u64, ConfigError> {
            v.parse()
                .map_err(|_| ConfigError::Line {
                    line,
                    msg: format!("invalid integer `{v}`"),
                })
        };

        match key {
            "monitor.bind" => cfg.bind = value.to_string(),
            "monitor.period_ms" => cfg.period_ms = parse_u64(value)?,
            "monitor.duration_s" => cfg.duration_s = parse_f64(value)?,

            "cpu.name" => cfg.cpu.name = value.to_string(),
            "cpu.sampler" => {
                cfg.cpu.sampler = match value {
                    "host" => CpuSampler::Host,
                    "injected" => CpuSampler::Injected,
                    "off" => CpuSampler::Off,
                    v => match v.strip_prefix("replay:") {
                        Some(path) if !path.is_empty() => CpuSampler::Replay(path.into()),
                        _ => return Err(bad(format!("invalid cpu sampler `{v}`"))),
                    },
                }
            }
            "cpu.period_ms" => cfg.cpu.period_ms = parse_u64(value)?,
            "cpu.staleness_s" => cfg.cpu.staleness_s = parse_f64(value)?,
            "cpu.reference" => cfg.cpu.reference = parse_f64(value)?,
            "cpu.scale" => cfg.cpu.scale = parse_f64(value)?,

            "exec.name" => cfg.exec.name = value.to_string(),
            "exec.sampler" => {
                cfg.exec.sampler = match value {
                    "udp" => ExecSampler::Udp,
                    "injected" => ExecSampler::Injected,
                    "off" => ExecSampler::Off,
                    v => match v.strip_prefix("replay:") {
                        Some(path) if !path.is_empty() => ExecSampler::Replay(path.into()),
                        _ => return Err(bad(format!("invalid exec sampler `{v}`"))),
                    },
                }
            }
            "exec.staleness_s" => cfg.exec.staleness_s = parse_f64(value)?,
            "exec.penalty.stop" => cfg.exec.penalties.stop = parse_f64(value)?,
            "exec.penalty.slow" => cfg.exec.penalties.slow = parse_f64(value)?,
            "exec.penalty.paused" => cfg.exec.penalties.paused = parse_f64(value)?,
            "exec.penalty.start" => cfg.exec.penalties.start = parse_f64(value)?,
            "exec.penalty.signal" => cfg.exec.penalties.signal = parse_f64(value)?,

            "ui.name" => cfg.ui.name = value.to_string(),
            "ui.sampler" => {
                cfg.ui.sampler = match value {
                    "injected" => UiSampler::Injected,
                    "off" => UiSampler::Off,
                    v => match v.strip_prefix("trace:") {
                        Some(path) if !path.is_empty() => UiSampler::Trace(path.into()),
                        _ => return Err(bad(format!("invalid ui sampler `{v}`"))),
                    },
                }
            }
            "ui.window_s" => cfg.ui.window_s = parse_f64(value)?,
            "ui.tau" => cfg.ui.tau = parse_f64(value)?,
            "ui.staleness_s" => cfg.ui.staleness_s = parse_f64(value)?,
            "ui.mu" => ui_mu = Some(parse_f64(value)?),
            "ui.sigma" => ui_sigma = Some(parse_f64(value)?),
            "ui.reference" => ui_reference = Some(value.into()),

            "weights.cpu" => w_cpu = parse_f64(value)?,
            "weights.exec" => w_exec = parse_f64(value)?,
            "trust.theta_hi" => theta_hi = parse_f64(value)?,
            "trust.theta_lo" => theta_lo = parse_f64(value)?,
            "trust.debounce_ticks" => cfg.debounce_ticks = parse_u64(value)? as u32,
            "drift.bound" => cfg.drift_bound = parse_f64(value)?,

            "policy.trustworthy" | "policy.unstable" | "policy.unsafe"
            | "policy.untrustworthy" => {
                let state = match key {
                    "policy.trustworthy" => TrustState::Trustworthy,
                    "policy.unstable" => TrustState::Unstable,
                    "policy.unsafe" => TrustState::Unsafe,
                    _ => TrustState::Untrustworthy,
                };
                let actions = parse_actions(value).map_err(bad)?;
                policy_by_state.insert(state, actions);
            }

            "log.trust" | "log.actions" => {
                let target = if value == "-" {
                    LogTarget::Stdout
                } else {
                    LogTarget::File(value.into())
                };
                if key == "log.trust" {
                    cfg.trust_log = target;
                } else {
                    cfg.action_log = target;
                }
            }

            _ => {
                if let Some(name) = key.strip_prefix("hook.") {
                    if name.is_empty() {
                        return Err(bad("empty hook name".to_string()));
                    }
                    cfg.hook_commands
                        .insert(name.to_string(), value.to_string());
                } else {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    });
                }
            }
        }
    }

    cfg.weights =
        MachineWeights::new(w_cpu, w_exec).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    cfg.thresholds = TrustThresholds::new(theta_hi, theta_lo)
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;

    if !policy_by_state.is_empty() {
        // Unstated states keep their defaults.
        let default = ActionPolicy::default();
        for state in TrustState::ALL {
            policy_by_state
                .entry(state)
                .or_insert_with(|| default.actions_for(state).to_vec());
        }
        cfg.policy =
            ActionPolicy::new(policy_by_state).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    }

    cfg.ui.profile = match (ui_reference, ui_mu, ui_sigma) {
        (Some(path), _, _) => Some(ProfileSource::Reference(path)),
        (None, Some(mu), Some(sigma)) => Some(ProfileSource::Numeric { mu, sigma }),
        (None, None, None) => None,
        _ => {
            return Err(ConfigError::Invalid(
                "ui.mu and ui.sigma must be given together".into(),
            ))
        }
    };

    cfg.validate()?;
    Ok(cfg)
}

/// Renders a config as text that [`parse_config`] reads back equivalently.
pub fn render_config(cfg: &AppConfig) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    kv("monitor.bind", cfg.bind.clone());
    kv("monitor.period_ms", cfg.period_ms.to_string());
    kv("monitor.duration_s", cfg.duration_s.to_string());

    kv("cpu.name", cfg.cpu.name.clone());
    kv(
        "cpu.sampler",
        match &cfg.cpu.sampler {
            CpuSampler::Host => "host".to_string(),
            CpuSampler::Replay(p) => format!("replay:{}", p.display()),
            CpuSampler::Injected => "injected".to_string(),
            CpuSampler::Off => "off".to_string(),
        },
    );
    kv("cpu.period_ms", cfg.cpu.period_ms.to_string());
    kv("cpu.staleness_s", cfg.cpu.staleness_s.to_string());
    kv("cpu.reference", cfg.cpu.reference.to_string());
    kv("cpu.scale", cfg.cpu.scale.to_string());

    kv("exec.name", cfg.exec.name.clone());
    kv(
        "exec.sampler",
        match &cfg.exec.sampler {
            ExecSampler::Udp => "udp".to_string(),
            ExecSampler::Replay(p) => format!("replay:{}", p.display()),
            ExecSampler::Injected => "injected".to_string(),
            ExecSampler::Off => "off".to_string(),
        },
    );
    kv("exec.staleness_s", cfg.exec.staleness_s.to_string());
    kv("exec.penalty.stop", cfg.exec.penalties.stop.to_string());
    kv("exec.penalty.slow", cfg.exec.penalties.slow.to_string());
    kv("exec.penalty.paused", cfg.exec.penalties.paused.to_string());
    kv("exec.penalty.start", cfg.exec.penalties.start.to_string());
    kv("exec.penalty.signal", cfg.exec.penalties.signal.to_string());

    kv("ui.name", cfg.ui.name.clone());
    kv(
        "ui.sampler",
        match &cfg.ui.sampler {
            UiSampler::Trace(p) => format!("trace:{}", p.display()),
            UiSampler::Injected => "injected".to_string(),
            UiSampler::Off => "off".to_string(),
        },
    );
    kv("ui.window_s", cfg.ui.window_s.to_string());
    kv("ui.tau", cfg.ui.tau.to_string());
    kv("ui.staleness_s", cfg.ui.staleness_s.to_string());
    match &cfg.ui.profile {
        Some(ProfileSource::Reference(path)) => kv("ui.reference", path.display().to_string()),
        Some(ProfileSource::Numeric { mu, sigma }) => {
            kv("ui.mu", mu.to_string());
            kv("ui.sigma", sigma.to_string());
        }
        None => {}
    }

    kv("weights.cpu", cfg.weights.w_cpu().to_string());
    kv("weights.exec", cfg.weights.w_exec().to_string());
    kv("trust.theta_hi", cfg.thresholds.theta_hi().to_string());
    kv("trust.theta_lo", cfg.thresholds.theta_lo().to_string());
    kv("trust.debounce_ticks", cfg.debounce_ticks.to_string());
    kv("drift.bound", cfg.drift_bound.to_string());

    kv(
        "policy.trustworthy",
        render_actions(cfg.policy.actions_for(TrustState::Trustworthy)),
    );
    kv(
        "policy.unstable",
        render_actions(cfg.policy.actions_for(TrustState::Unstable)),
    );
    kv(
        "policy.unsafe",
        render_actions(cfg.policy.actions_for(TrustState::Unsafe)),
    );
    kv(
        "policy.untrustworthy",
        render_actions(cfg.policy.actions_for(TrustState::Untrustworthy)),
    );

    for (name, command) in &cfg.hook_commands {
        kv(&format!("hook.{name}"), command.clone());
    }
    kv("log.trust", cfg.trust_log.to_string());
    kv("log.actions", cfg.action_log.to_string());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        AppConfig::default().validate().unwrap();
    }

    #[test]
    fn minimal_config_parses() {
        let cfg = parse_config("# empty is fine\n").unwrap();
        assert_eq!(cfg, AppConfig::default());
    }

    #[test]
    fn full_roundtrip_through_render() {
        let text = "\
monitor.bind = 127.0.0.1:9999
monitor.period_ms = 250
cpu.sampler = replay:/tmp/cpu.trace
cpu.reference = 5
cpu.scale = 0.02
exec.sampler = udp
exec.penalty.slow = 4.5
ui.sampler = injected
ui.mu = 1.5
ui.sigma = 0.25
weights.cpu = 0.25
weights.exec = 0.75
trust.theta_hi = 0.7
trust.theta_lo = 0.4
drift.bound = 0.5
policy.unsafe = log,alarm:pager
hook.rejuvenate = echo reset
log.trust = /tmp/trust.log
";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.period_ms, 250);
        assert_eq!(cfg.cpu.sampler, CpuSampler::Replay("/tmp/cpu.trace".into()));
        assert_eq!(cfg.exec.penalties.slow, 4.5);
        assert_eq!(
            cfg.ui.profile,
            Some(ProfileSource::Numeric {
                mu: 1.5,
                sigma: 0.25
            })
        );
        assert_eq!(cfg.weights.w_exec(), 0.75);
        assert_eq!(
            cfg.policy.actions_for(TrustState::Unsafe),
            &[Action::Log, Action::Alarm("pager".to_string())]
        );
        assert_eq!(
            cfg.hook_commands.get("rejuvenate"),
            Some(&"echo reset".to_string())
        );
        assert_eq!(cfg.trust_log, LogTarget::File("/tmp/trust.log".into()));

        let reparsed = parse_config(&render_config(&cfg)).unwrap();
        assert_eq!(reparsed, cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_config("monitor.typo = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { line: 1, .. }));
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let err = parse_config("drift.bound = 0.1\ndrift.bound = 0.2\n").unwrap_err();
        assert!(matches!(err, ConfigError::DuplicateKey { line: 2, .. }));
    }

    #[test]
    fn malformed_lines_carry_line_numbers() {
        assert!(matches!(
            parse_config("just words\n").unwrap_err(),
            ConfigError::Line { line: 1, .. }
        ));
        assert!(matches!(
            parse_config("\n\nmonitor.period_ms = abc\n").unwrap_err(),
            ConfigError::Line { line: 3, .. }
        ));
    }

    #[test]
    fn duplicate_rrvar_names_fail_validation() {
        let err = parse_config("cpu.name = same\nexec.name = same\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
    }

    #[test]
    fn bad_weights_and_thresholds_are_rejected() {
        assert!(parse_config("weights.cpu = 0.9\n").is_err());
        assert!(parse_config("trust.theta_hi = 0.2\n").is_err());
    }

    #[test]
    fn active_ui_needs_a_profile() {
        assert!(parse_config("ui.sampler = injected\n").is_err());
        assert!(parse_config("ui.sampler = injected\nui.mu = 1\n").is_err());
        assert!(parse_config("ui.sampler = injected\nui.mu = 1\nui.sigma = 0.1\n").is_ok());
    }

    #[test]
    fn policy_parse_rejects_nonsense() {
        assert!(parse_config("policy.unstable = dance\n").is_err());
        assert!(parse_config("policy.unstable = reconfigure:\n").is_err());
        // Stripping the safe stop from the untrustworthy state is
        // structurally invalid.
        assert!(parse_config("policy.untrustworthy = log\n").is_err());
    }

    #[test]
    fn comments_and_whitespace_are_tolerated() {
        let cfg = parse_config("  drift.bound = 0.5  # tighter\n").unwrap();
        assert_eq!(cfg.drift_bound, 0.5);
    }

    #[test]
    fn small_periods_fail_validation() {
        assert!(parse_config("monitor.period_ms = 5\n").is_err());
        assert!(parse_config("cpu.period_ms = 1\n").is_err());
    }
}
