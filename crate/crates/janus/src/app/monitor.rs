//! The monitor: registers the reflective variables, feeds them from their
//! configured sources, and runs the control loop.
//!
//! One `Monitor` drives three channels (cpu, exec/process-state, ui) into
//! drift inputs each tick. Channels switched off contribute zero drift;
//! channels that are on but have never produced a value make the tick fail
//! with a missing-input error, which the live loop treats as "not yet".

use std::io::Write;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

use crate::app::config::{
    AppConfig, CpuSampler, ExecSampler, LogTarget, ProfileSource, UiSampler,
};
use crate::app::AppError;
use crate::behavior::{build_profile, parse_ui_trace, score_window, BehaviorProfile, UiEvent};
use crate::model::{DriftSeries, QualiaClassId};
use crate::rrvar::{
    cpu_percent_from_proc_stat, parse_replay_trace, CpuStatSample, Registry, RrVarDescriptor,
    RrVarHandle, SamplerSpec, TraceSample,
};
use crate::time::Clock;
use crate::trust::{
    ActionRecord, FidelityVector, HookRegistry, MapeCore, MapeInputs, TrustError, TrustState,
};
use crate::wire::{serve, ProcessEvent, ServerHandle};

pub const CPU_CLASS: QualiaClassId = QualiaClassId::new(1);
pub const EXEC_CLASS: QualiaClassId = QualiaClassId::new(2);

/// What one tick produced, for embedding code and tests.
#[derive(Debug, Clone, PartialEq)]
pub struct TickSummary {
    pub t: f64,
    pub state: TrustState,
    pub state_changed: bool,
    pub fidelity: FidelityVector,
    pub records: Vec<ActionRecord>,
    pub delta_ui: f64,
    pub delta_cpu: f64,
    pub delta_exec: f64,
}

struct Feed<T> {
    items: Vec<T>,
    pos: usize,
}

impl<T> Feed<T> {
    fn new(items: Vec<T>) -> Self {
        Self { items, pos: 0 }
    }

    fn empty() -> Self {
        Self::new(Vec::new())
    }

    fn due(&mut self, is_due: impl Fn(&T) -> bool) -> &[T] {
        let start = self.pos;
        while self.pos < self.items.len() && is_due(&self.items[self.pos]) {
            self.pos += 1;
        }
        &self.items[start..self.pos]
    }
}

pub struct Monitor {
    cfg: AppConfig,
    clock: Arc<dyn Clock>,
    registry: Registry,
    cpu: Option<RrVarHandle>,
    exec: Option<RrVarHandle>,
    ui: Option<RrVarHandle>,
    core: MapeCore,
    profile: Option<BehaviorProfile>,
    cpu_feed: Feed<TraceSample>,
    exec_feed: Feed<TraceSample>,
    ui_feed: Feed<UiEvent>,
    ui_events: Arc<Mutex<Vec<UiEvent>>>,
    trust_lines: Vec<String>,
    action_lines: Vec<String>,
    transitions: Vec<(f64, TrustState)>,
    cpu_series: DriftSeries,
    exec_series: DriftSeries,
    ui_series: DriftSeries,
    stale_reads: u64,
    server: Option<ServerHandle>,
}

impl Monitor {
    /// Validates the config, registers the reflective variables, loads
    /// replay feeds and builds the control core. Hooks named by the policy
    /// but not configured get no-op callbacks; embedding code replaces them
    /// through [`Monitor::hooks_mut`].
    pub fn new(cfg: AppConfig, clock: Arc<dyn Clock>) -> Result<Self, AppError> {
        cfg.validate()?;
        let registry = Registry::new(Arc::clone(&clock));

        let cpu = match &cfg.cpu.sampler {
            CpuSampler::Off => None,
            _ => Some(registry.register(RrVarDescriptor {
                name: cfg.cpu.name.clone(),
                class_id: CPU_CLASS,
                sampler: SamplerSpec::CpuPercentHost,
                period_ms: cfg.cpu.period_ms,
                staleness_limit_s: cfg.cpu.staleness_s,
            })?),
        };
        let exec = match &cfg.exec.sampler {
            ExecSampler::Off => None,
            sampler => Some(registry.register(RrVarDescriptor {
                name: cfg.exec.name.clone(),
                class_id: EXEC_CLASS,
                sampler: match sampler {
                    ExecSampler::Udp => SamplerSpec::UdpEventFeed,
                    _ => SamplerSpec::SyntheticReplay {
                        path: Default::default(),
                    },
                },
                period_ms: cfg.period_ms,
                staleness_limit_s: cfg.exec.staleness_s,
            })?),
        };
        let ui = match &cfg.ui.sampler {
            UiSampler::Off => None,
            _ => Some(registry.register(RrVarDescriptor {
                name: cfg.ui.name.clone(),
                class_id: crate::behavior::UI_DRIFT_CLASS,
                sampler: SamplerSpec::UiEventFeed,
                period_ms: cfg.period_ms,
                staleness_limit_s: cfg.ui.staleness_s,
            })?),
        };

        let cpu_feed = match &cfg.cpu.sampler {
            CpuSampler::Replay(path) => Feed::new(load_trace(path, "cpu")?),
            _ => Feed::empty(),
        };
        let exec_feed = match &cfg.exec.sampler {
            ExecSampler::Replay(path) => Feed::new(load_trace(path, "exec")?),
            _ => Feed::empty(),
        };
        let ui_feed = match &cfg.ui.sampler {
            UiSampler::Trace(path) => Feed::new(load_ui_trace(path)?),
            _ => Feed::empty(),
        };

        let profile = match (&cfg.ui.sampler, &cfg.ui.profile) {
            (UiSampler::Off, _) => None,
            (_, Some(ProfileSource::Numeric { mu, sigma })) => Some(BehaviorProfile {
                mu_rate: *mu,
                sigma_rate: *sigma,
                window_w: cfg.ui.window_s,
            }),
            (_, Some(ProfileSource::Reference(path))) => {
                let text = std::fs::read_to_string(path).map_err(AppError::Io)?;
                let events = parse_ui_trace(&text).map_err(|source| AppError::UiTrace {
                    channel: "ui reference",
                    source,
                })?;
                Some(
                    build_profile(&events, cfg.ui.window_s).map_err(|source| {
                        AppError::UiTrace {
                            channel: "ui reference",
                            source,
                        }
                    })?,
                )
            }
            (_, None) => unreachable!("validate() requires a profile for an active ui channel"),
        };

        let mut hooks = HookRegistry::new();
        for (name, command) in &cfg.hook_commands {
            let command = command.clone();
            hooks.register(name.clone(), move || run_hook_command(&command));
        }
        for name in cfg.policy.required_hooks() {
            if !hooks.contains(name) {
                hooks.register(name.to_string(), || Ok(()));
            }
        }

        let core = MapeCore::new(cfg.weights, cfg.thresholds, cfg.policy.clone(), hooks)
            .with_debounce(cfg.debounce_ticks);

        Ok(Self {
            clock,
            registry,
            cpu,
            exec,
            ui,
            core,
            profile,
            cpu_feed,
            exec_feed,
            ui_feed,
            ui_events: Arc::new(Mutex::new(Vec::new())),
            trust_lines: Vec::new(),
            action_lines: Vec::new(),
            transitions: Vec::new(),
            cpu_series: DriftSeries::new(CPU_CLASS),
            exec_series: DriftSeries::new(EXEC_CLASS),
            ui_series: DriftSeries::new(crate::behavior::UI_DRIFT_CLASS),
            stale_reads: 0,
            server: None,
            cfg,
        })
    }

    pub fn config(&self) -> &AppConfig {
        &self.cfg
    }

    pub fn clock(&self) -> Arc<dyn Clock> {
        Arc::clone(&self.clock)
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn cpu_handle(&self) -> Option<RrVarHandle> {
        self.cpu.clone()
    }

    pub fn exec_handle(&self) -> Option<RrVarHandle> {
        self.exec.clone()
    }

    pub fn ui_handle(&self) -> Option<RrVarHandle> {
        self.ui.clone()
    }

    pub fn hooks_mut(&mut self) -> &mut HookRegistry {
        self.core.hooks_mut()
    }

    pub fn profile(&self) -> Option<BehaviorProfile> {
        self.profile
    }

    pub fn trust_lines(&self) -> &[String] {
        &self.trust_lines
    }

    pub fn action_lines(&self) -> &[String] {
        &self.action_lines
    }

    /// Trust-state timeline: one entry per state change.
    pub fn transitions(&self) -> &[(f64, TrustState)] {
        &self.transitions
    }

    pub fn cpu_series(&self) -> &DriftSeries {
        &self.cpu_series
    }

    pub fn exec_series(&self) -> &DriftSeries {
        &self.exec_series
    }

    pub fn ui_series(&self) -> &DriftSeries {
        &self.ui_series
    }

    pub fn stale_reads(&self) -> u64 {
        self.stale_reads
    }

    /// Appends a live user-interface event (keypress demo, tests).
    pub fn push_ui_event(&self, event: UiEvent) {
        self.ui_events.lock().unwrap().push(event);
    }

    /// Binds the UDP event server and wires it into the exec cell. Only
    /// meaningful when the exec channel listens to the wire.
    pub fn start_server(&mut self) -> Result<SocketAddr, AppError> {
        let exec = match (&self.cfg.exec.sampler, &self.exec) {
            (ExecSampler::Udp, Some(handle)) => handle.clone(),
            _ => {
                return Err(AppError::Config(crate::app::ConfigError::Invalid(
                    "exec.sampler is not `udp`, nothing to serve".into(),
                )))
            }
        };
        let server = serve(self.cfg.bind.as_str(), self.clock(), move |envelope| {
            // Equal receive timestamps are fine; out-of-range codes cannot
            // happen past decode. A commit error is counted by the cell.
            let _ = exec.commit(envelope.event.code() as f64, envelope.received_at);
        })?;
        let addr = server.local_addr();
        self.server = Some(server);
        Ok(addr)
    }

    pub fn server_counters(&self) -> Option<Arc<crate::wire::ServerCounters>> {
        self.server.as_ref().map(|s| s.counters_arc())
    }

    /// Commits every replay-fed sample that is due at `now`.
    pub fn pump(&mut self, now: f64) {
        if let Some(cpu) = &self.cpu {
            for sample in self.cpu_feed.due(|s| s.t <= now) {
                // Out-of-range trace values are rejected and counted by the
                // cell, mirroring live sampler behavior.
                let _ = cpu.commit(sample.value, sample.t);
            }
        }
        if let Some(exec) = &self.exec {
            for sample in self.exec_feed.due(|s| s.t <= now) {
                let _ = exec.commit(sample.value, sample.t);
            }
        }
        let due: Vec<UiEvent> = self.ui_feed.due(|e| e.t <= now).to_vec();
        if !due.is_empty() {
            self.ui_events.lock().unwrap().extend(due);
        }
    }

    /// One control-loop pass at time `now`: snapshot the channels, analyze,
    /// classify, plan and execute.
    pub fn tick(&mut self, now: f64) -> Result<TickSummary, AppError> {
        let delta_cpu = match (&self.cfg.cpu.sampler, &self.cpu) {
            (CpuSampler::Off, _) | (_, None) => Some(0.0),
            (_, Some(handle)) => {
                let snap = handle.read();
                if snap.freshness.is_stale() {
                    self.stale_reads += 1;
                }
                snap.has_committed()
                    .then(|| (snap.quale.value - self.cfg.cpu.reference) * self.cfg.cpu.scale)
            }
        };
        let delta_exec = match (&self.cfg.exec.sampler, &self.exec) {
            (ExecSampler::Off, _) | (_, None) => Some(0.0),
            (sampler, Some(handle)) => {
                let snap = handle.read();
                if snap.freshness.is_stale() {
                    self.stale_reads += 1;
                }
                if !snap.has_committed() {
                    None
                } else if matches!(sampler, ExecSampler::Udp) {
                    // Commit validation pins the value to a known code.
                    Some(
                        ProcessEvent::from_code(snap.quale.value as i32)
                            .map(|e| self.cfg.exec.penalties.for_event(e))
                            .unwrap_or(0.0),
                    )
                } else {
                    Some(snap.quale.value)
                }
            }
        };
        let delta_ui = match (&self.cfg.ui.sampler, &self.ui, &self.profile) {
            (UiSampler::Off, _, _) | (_, None, _) | (_, _, None) => Some(0.0),
            (_, Some(handle), Some(profile)) => {
                let delta = {
                    let events = self.ui_events.lock().unwrap();
                    score_window(profile, &events, now).delta
                };
                let _ = handle.commit(delta, now);
                Some(delta)
            }
        };

        let outcome = self.core.tick(
            MapeInputs {
                delta_ui,
                delta_cpu,
                delta_exec,
            },
            now,
        )?;

        let (du, dc, de) = (
            delta_ui.expect("checked by core"),
            delta_cpu.expect("checked by core"),
            delta_exec.expect("checked by core"),
        );
        self.cpu_series.push(now, dc)?;
        self.exec_series.push(now, de)?;
        self.ui_series.push(now, du)?;

        let f = outcome.fidelity;
        self.trust_lines.push(format!(
            "t={} state={} phi_u={} phi_m={} s_u={} s_m={}",
            now, outcome.state, f.phi_u, f.phi_m, f.s_u, f.s_m
        ));
        for record in &outcome.records {
            self.action_lines.push(format!(
                "t={} action={} hook={} result={}",
                record.t,
                record.action.kind(),
                record.action.hook_name().unwrap_or("-"),
                if record.result.is_ok() { "ok" } else { "fail" }
            ));
        }
        if outcome.state_changed {
            self.transitions.push((now, outcome.state));
        }

        Ok(TickSummary {
            t: now,
            state: outcome.state,
            state_changed: outcome.state_changed,
            fidelity: outcome.fidelity,
            records: outcome.records,
            delta_ui: du,
            delta_cpu: dc,
            delta_exec: de,
        })
    }

    /// Runs the live loop on the wall clock until the shutdown flag rises or
    /// the configured duration elapses. Spawns the host CPU sampler when
    /// configured; the UDP server must have been started by the caller if
    /// the exec channel needs it.
    pub fn run_live(&mut self, shutdown: Arc<AtomicBool>) -> Result<(), AppError> {
        let mut trust_out = open_log(&self.cfg.trust_log)?;
        let mut action_out = open_log(&self.cfg.action_log)?;

        let cpu_thread = if matches!(self.cfg.cpu.sampler, CpuSampler::Host) {
            self.cpu.clone().map(|handle| {
                let period = std::time::Duration::from_millis(self.cfg.cpu.period_ms);
                let stop = Arc::clone(&shutdown);
                let clock = self.clock();
                std::thread::spawn(move || host_cpu_loop(handle, clock, period, stop))
            })
        } else {
            None
        };

        let period = std::time::Duration::from_millis(self.cfg.period_ms);
        let deadline = (self.cfg.duration_s > 0.0).then_some(self.cfg.duration_s);
        let mut written_trust = 0;
        let mut written_actions = 0;
        while !shutdown.load(Ordering::SeqCst) {
            std::thread::sleep(period);
            let now = self.clock.now();
            self.pump(now);
            match self.tick(now) {
                Ok(_) => {}
                // Channels that have not produced yet: wait, do not die.
                Err(AppError::Trust(TrustError::MissingInput(_))) => continue,
                Err(e) => return Err(e),
            }
            for line in &self.trust_lines[written_trust..] {
                writeln!(trust_out, "{line}")?;
            }
            written_trust = self.trust_lines.len();
            for line in &self.action_lines[written_actions..] {
                writeln!(action_out, "{line}")?;
            }
            written_actions = self.action_lines.len();
            trust_out.flush()?;
            action_out.flush()?;
            if deadline.is_some_and(|d| now >= d) {
                break;
            }
        }
        shutdown.store(true, Ordering::SeqCst);
        if let Some(thread) = cpu_thread {
            let _ = thread.join();
        }
        if let Some(server) = &mut self.server {
            server.shutdown();
        }
        Ok(())
    }
}

fn open_log(target: &LogTarget) -> Result<Box<dyn Write>, AppError> {
    Ok(match target {
        LogTarget::Stdout => Box::new(std::io::stdout()),
        LogTarget::File(path) => Box::new(std::fs::File::create(path)?),
    })
}

fn load_trace(path: &std::path::Path, channel: &'static str) -> Result<Vec<TraceSample>, AppError> {
    let text = std::fs::read_to_string(path)?;
    parse_replay_trace(&text).map_err(|source| AppError::Trace { channel, source })
}

fn load_ui_trace(path: &std::path::Path) -> Result<Vec<UiEvent>, AppError> {
    let text = std::fs::read_to_string(path)?;
    parse_ui_trace(&text).map_err(|source| AppError::UiTrace {
        channel: "ui",
        source,
    })
}

fn run_hook_command(command: &str) -> Result<(), String> {
    let output = std::process::Command::new("sh")
        .arg("-c")
        .arg(command)
        .output()
        .map_err(|e| format!("spawn failed: {e}"))?;
    if output.status.success() {
        Ok(())
    } else {
        Err(format!(
            "exit {}: {}",
            output.status.code().unwrap_or(-1),
            String::from_utf8_lossy(&output.stderr).trim()
        ))
    }
}

fn host_cpu_loop(
    handle: RrVarHandle,
    clock: Arc<dyn Clock>,
    period: std::time::Duration,
    stop: Arc<AtomicBool>,
) {
    let mut previous = CpuStatSample::from_host();
    while !stop.load(Ordering::SeqCst) {
        std::thread::sleep(period);
        let current = CpuStatSample::from_host();
        if let (Some(a), Some(b)) = (previous, current) {
            if let Some(pct) = cpu_percent_from_proc_stat(a, b) {
                let _ = handle.commit(pct, clock.now());
            }
        }
        previous = current;
    }
}
