//! Offline replay: drives the identical computation path as the live
//! monitor from recorded traces, under a virtual clock.

use std::path::PathBuf;

use crate::app::config::{AppConfig, CpuSampler, ExecSampler, UiSampler};
use crate::app::monitor::Monitor;
use crate::app::report::{ScenarioReport, ScenarioTraces};
use crate::app::AppError;
use crate::behavior::{detect_anomalies, parse_ui_trace, UiEvent};
use crate::model::{classify_drift, DriftClassifyParams};
use crate::rrvar::{parse_replay_trace, TraceSample};
use crate::time::VirtualClock;
use crate::trust::TrustError;

/// The three trace files of a recorded run. An empty trace switches its
/// channel off.
#[derive(Debug, Clone)]
pub struct ReplayInput {
    pub cpu: PathBuf,
    pub exec: PathBuf,
    pub ui: PathBuf,
}

/// Replays the traces against the config. Deterministic; a trace emitted by
/// `simulate` reproduces the simulation's trust timeline exactly.
pub fn replay(input: &ReplayInput, cfg: &AppConfig) -> Result<ScenarioReport, AppError> {
    let cpu_samples = load_trace(&input.cpu, "cpu")?;
    let exec_samples = load_trace(&input.exec, "exec")?;
    let ui_events = load_ui(&input.ui)?;

    let mut cfg = cfg.clone();
    cfg.cpu.sampler = if cpu_samples.is_empty() {
        CpuSampler::Off
    } else {
        CpuSampler::Replay(input.cpu.clone())
    };
    cfg.exec.sampler = if exec_samples.is_empty() {
        ExecSampler::Off
    } else {
        ExecSampler::Replay(input.exec.clone())
    };
    cfg.ui.sampler = if ui_events.is_empty() {
        UiSampler::Off
    } else {
        UiSampler::Trace(input.ui.clone())
    };

    let period_s = cfg.period_s();
    let end = last_time(&cpu_samples)
        .max(last_time(&exec_samples))
        .max(ui_events.last().map(|e| e.t).unwrap_or(0.0));
    let ticks = ((end / period_s) + 1e-9).floor() as u64;

    let clock = VirtualClock::new();
    let mut monitor = Monitor::new(cfg.clone(), clock.clone())?;
    for tick in 1..=ticks {
        let t = tick as f64 * period_s;
        clock.set(t);
        monitor.pump(t);
        match monitor.tick(t) {
            Ok(_) => {}
            // A channel whose first sample lies beyond this tick: skip,
            // exactly like the live loop does while waiting.
            Err(AppError::Trust(TrustError::MissingInput(_))) => continue,
            Err(e) => return Err(e),
        }
    }

    let drift = if !exec_samples.is_empty() {
        monitor.exec_series().clone()
    } else if !ui_events.is_empty() {
        monitor.ui_series().clone()
    } else {
        monitor.cpu_series().clone()
    };
    let params = DriftClassifyParams::new(cfg.drift_bound).expect("validated bound");
    let classification = classify_drift(&drift, &params).ok();
    let behavior = monitor
        .profile()
        .filter(|_| !ui_events.is_empty())
        .map(|profile| detect_anomalies(&profile, &ui_events, cfg.ui.tau));

    Ok(ScenarioReport::from_monitor(
        "replay",
        0,
        end,
        &cfg,
        &monitor,
        drift,
        params,
        classification,
        behavior,
        ScenarioTraces {
            cpu: cpu_samples,
            exec: exec_samples,
            ui: ui_events,
        },
    ))
}

fn last_time(samples: &[TraceSample]) -> f64 {
    samples.last().map(|s| s.t).unwrap_or(0.0)
}

fn load_trace(path: &PathBuf, channel: &'static str) -> Result<Vec<TraceSample>, AppError> {
    let text = std::fs::read_to_string(path)?;
    parse_replay_trace(&text).map_err(|source| AppError::Trace { channel, source })
}

fn load_ui(path: &PathBuf) -> Result<Vec<UiEvent>, AppError> {
    let text = std::fs::read_to_string(path)?;
    parse_ui_trace(&text).map_err(|source| AppError::UiTrace {
        channel: "ui",
        source,
    })
}
