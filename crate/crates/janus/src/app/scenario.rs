//! Executable scenarios: deterministic end-to-end runs of the whole loop
//! against synthesized inputs under a virtual clock.
//!
//! Four kinds, one per drift class:
//!
//! * `patriot-clock` — a clock quale accumulating a fixed-point truncation
//!   error every tick, the unbounded-trend case; optionally wired to a
//!   rejuvenation hook that resets the accumulator when the loop goes
//!   unstable.
//! * `keystroke-burst` — a uniform typing baseline with a rapid burst, the
//!   sudden behavioral-drift case.
//! * `bounded-noise` — i.i.d. Gaussian drift, the statistically-bound case.
//! * `random-walk` — cumulative Gaussian steps, the unbound-random case.

use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::app::config::{
    AppConfig, ConfigError, CpuSampler, ExecSampler, ProfileSource, UiSampler,
};
use crate::app::monitor::{Monitor, EXEC_CLASS};
use crate::app::report::{ScenarioReport, ScenarioTraces};
use crate::app::AppError;
use crate::behavior::{build_profile, detect_anomalies, UiEvent};
use crate::model::{classify_drift, DriftClassifyParams, DriftSeries, QualiaClassId};
use crate::rrvar::TraceSample;
use crate::time::{Clock, VirtualClock};

/// Defaults match the classic account of the incident: tenth-of-a-second
/// ticks accumulated in a 24-bit fixed-point register (sign bit plus 23
/// fraction bits), so every tick drops the tail of 0.1 beyond 2^-23.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatriotParams {
    pub tick_s: f64,
    /// Acceptable clock error; the drift fed to the machine side is the raw
    /// error divided by this tolerance.
    pub time_tolerance_s: f64,
    /// Wire the rejuvenation hook to actually reset the accumulator.
    pub rejuvenate: bool,
}

impl Default for PatriotParams {
    fn default() -> Self {
        Self {
            tick_s: 0.1,
            time_tolerance_s: 1e-4,
            rejuvenate: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurstParams {
    pub baseline_rate: f64,
    pub burst_rate: f64,
    pub burst_start: f64,
    pub burst_end: f64,
}

impl Default for BurstParams {
    fn default() -> Self {
        Self {
            baseline_rate: 1.0,
            burst_rate: 10.0,
            burst_start: 50.0,
            burst_end: 60.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub sigma: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self { sigma: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkParams {
    pub step_sigma: f64,
}

impl Default for WalkParams {
    fn default() -> Self {
        Self { step_sigma: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioKind {
    PatriotClock(PatriotParams),
    KeystrokeBurst(BurstParams),
    BoundedNoise(NoiseParams),
    RandomWalk(WalkParams),
}

impl ScenarioKind {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "patriot-clock" => Some(Self::PatriotClock(PatriotParams::default())),
            "keystroke-burst" => Some(Self::KeystrokeBurst(BurstParams::default())),
            "bounded-noise" => Some(Self::BoundedNoise(NoiseParams::default())),
            "random-walk" => Some(Self::RandomWalk(WalkParams::default())),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::PatriotClock(_) => "patriot-clock",
            Self::KeystrokeBurst(_) => "keystroke-burst",
            Self::BoundedNoise(_) => "bounded-noise",
            Self::RandomWalk(_) => "random-walk",
        }
    }

    pub fn default_duration_s(&self) -> f64 {
        match self {
            Self::PatriotClock(_) => 7200.0,
            Self::KeystrokeBurst(_) => 100.0,
            Self::BoundedNoise(_) => 500.0,
            Self::RandomWalk(_) => 500.0,
        }
    }

    /// Seed under which the scenario exhibits its nominal drift class; the
    /// deterministic kinds ignore it.
    pub fn default_seed(&self) -> u64 {
        match self {
            Self::PatriotClock(_) | Self::KeystrokeBurst(_) => 0,
            Self::BoundedNoise(_) => 11,
            Self::RandomWalk(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub duration_s: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind) -> Self {
        Self {
            kind,
            duration_s: kind.default_duration_s(),
            seed: kind.default_seed(),
        }
    }

    pub fn with_duration(mut self, duration_s: f64) -> Self {
        self.duration_s = duration_s;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// The configuration a scenario runs under when none is supplied.
    pub fn recommended_config(&self) -> AppConfig {
        let mut cfg = AppConfig {
            cpu: crate::app::config::CpuConfig {
                sampler: CpuSampler::Off,
                ..Default::default()
            },
            exec: crate::app::config::ExecConfig {
                sampler: ExecSampler::Off,
                ..Default::default()
            },
            ui: crate::app::config::UiConfig {
                sampler: UiSampler::Off,
                ..Default::default()
            },
            ..Default::default()
        };
        match &self.kind {
            ScenarioKind::PatriotClock(p) => {
                cfg.exec.sampler = ExecSampler::Injected;
                cfg.drift_bound = p.time_tolerance_s;
            }
            ScenarioKind::KeystrokeBurst(b) => {
                cfg.ui.sampler = UiSampler::Injected;
                // One full window per loop period, so the trust timeline
                // recovers as soon as the burst leaves the window.
                cfg.period_ms = (cfg.ui.window_s * 1000.0) as u64;
                cfg.ui.profile = Some(ProfileSource::Numeric {
                    mu: b.baseline_rate,
                    sigma: 0.1 * b.baseline_rate,
                });
                cfg.drift_bound = cfg.ui.tau;
            }
            ScenarioKind::BoundedNoise(n) => {
                cfg.exec.sampler = ExecSampler::Injected;
                cfg.drift_bound = 4.0 * n.sigma;
            }
            ScenarioKind::RandomWalk(_) => {
                cfg.exec.sampler = ExecSampler::Injected;
                cfg.drift_bound = 0.2;
            }
        }
        cfg
    }
}

/// Chops `x` to a fixed-point representation with the given number of
/// fractional bits, discarding the tail.
pub fn truncate_fixed_point(x: f64, fraction_bits: u32) -> f64 {
    let scale = (1u64 << fraction_bits) as f64;
    (x * scale).floor() / scale
}

/// Fraction bits of the emulated 24-bit register (one bit of sign).
pub const PATRIOT_FRACTION_BITS: u32 = 23;

const SYNTH_CLASS: QualiaClassId = QualiaClassId::new(9);

/// I.i.d. Gaussian drift samples at `t = dt, 2dt, ...`.
pub fn gaussian_series(seed: u64, n: usize, sigma: f64, dt: f64) -> DriftSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma is positive");
    let mut series = DriftSeries::new(SYNTH_CLASS);
    for k in 0..n {
        series
            .push((k + 1) as f64 * dt, normal.sample(&mut rng))
            .expect("grid is increasing");
    }
    series
}

/// Cumulative Gaussian steps at `t = dt, 2dt, ...`.
pub fn random_walk_series(seed: u64, n: usize, step_sigma: f64, dt: f64) -> DriftSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, step_sigma).expect("sigma is positive");
    let mut series = DriftSeries::new(SYNTH_CLASS);
    let mut level = 0.0;
    for k in 0..n {
        level += normal.sample(&mut rng);
        series
            .push((k + 1) as f64 * dt, level)
            .expect("grid is increasing");
    }
    series
}

/// Exact line `delta = slope * t` at `t = dt, 2dt, ...`.
pub fn ramp_series(slope: f64, n: usize, dt: f64) -> DriftSeries {
    let mut series = DriftSeries::new(SYNTH_CLASS);
    for k in 0..n {
        let t = (k + 1) as f64 * dt;
        series.push(t, slope * t).expect("grid is increasing");
    }
    series
}

/// Constant drift at `t = dt, 2dt, ...`.
pub fn constant_series(value: f64, n: usize, dt: f64) -> DriftSeries {
    let mut series = DriftSeries::new(SYNTH_CLASS);
    for k in 0..n {
        series
            .push((k + 1) as f64 * dt, value)
            .expect("grid is increasing");
    }
    series
}

/// Uniform event stream at `rate` events per second covering exactly
/// `windows` windows of length `w`, for building reference profiles.
pub fn uniform_reference_events(rate: f64, w: f64, windows: usize) -> Vec<UiEvent> {
    let n = (rate * w * windows as f64).round() as usize;
    (0..=n)
        .map(|j| UiEvent::key((j as f64 + 0.5) / rate))
        .collect()
}

/// Piecewise-uniform event stream: baseline rate everywhere, burst rate on
/// `[burst_start, burst_end)`.
pub fn burst_events(params: &BurstParams, duration_s: f64) -> Vec<UiEvent> {
    let mut events = Vec::new();
    let mut segment = |a: f64, b: f64, rate: f64| {
        let count = ((b - a) * rate).round() as usize;
        for j in 0..count {
            events.push(UiEvent::key(a + (j as f64 + 0.5) / rate));
        }
    };
    segment(0.0, params.burst_start, params.baseline_rate);
    segment(params.burst_start, params.burst_end, params.burst_rate);
    segment(params.burst_end, duration_s, params.baseline_rate);
    events
}

/// Runs the scenario against the supplied configuration under a virtual
/// clock. Deterministic: a fixed spec yields a byte-identical report.
pub fn simulate(spec: &ScenarioSpec, cfg: &AppConfig) -> Result<ScenarioReport, AppError> {
    match &spec.kind {
        ScenarioKind::PatriotClock(p) => simulate_patriot(spec, *p, cfg),
        ScenarioKind::KeystrokeBurst(b) => simulate_burst(spec, *b, cfg),
        ScenarioKind::BoundedNoise(n) => {
            let ticks = tick_count(spec.duration_s, cfg.period_s());
            let series = gaussian_series(spec.seed, ticks, n.sigma, cfg.period_s());
            simulate_exec_series(spec, cfg, series)
        }
        ScenarioKind::RandomWalk(w) => {
            let ticks = tick_count(spec.duration_s, cfg.period_s());
            let series = random_walk_series(spec.seed, ticks, w.step_sigma, cfg.period_s());
            simulate_exec_series(spec, cfg, series)
        }
    }
}

fn tick_count(duration_s: f64, period_s: f64) -> usize {
    (duration_s / period_s).round() as usize
}

fn classify_native(
    native: &DriftSeries,
    bound: f64,
) -> (DriftClassifyParams, Option<crate::model::DriftClassification>) {
    let params = DriftClassifyParams::new(bound).expect("configured bound is positive");
    let classification = classify_drift(native, &params).ok();
    (params, classification)
}

fn simulate_patriot(
    spec: &ScenarioSpec,
    p: PatriotParams,
    cfg: &AppConfig,
) -> Result<ScenarioReport, AppError> {
    let period_s = cfg.period_s();
    let subs_per_tick = period_s / p.tick_s;
    if (subs_per_tick - subs_per_tick.round()).abs() > 1e-9 || subs_per_tick < 1.0 {
        return Err(AppError::Config(ConfigError::Invalid(format!(
            "loop period {period_s}s is not a multiple of the clock tick {}s",
            p.tick_s
        ))));
    }
    let subs_per_tick = subs_per_tick.round() as u64;
    let total_ticks = tick_count(spec.duration_s, period_s) as u64;

    let clock = VirtualClock::new();
    let mut monitor = Monitor::new(cfg.clone(), clock.clone())?;
    let exec = monitor
        .exec_handle()
        .expect("patriot config drives the exec channel");

    // The buggy quale: a clock advanced by the truncated tick increment.
    let quale_time = Arc::new(Mutex::new(0.0f64));
    let increment = truncate_fixed_point(p.tick_s, PATRIOT_FRACTION_BITS);
    {
        let quale_time = Arc::clone(&quale_time);
        let clock = Arc::clone(&clock);
        let rejuvenate = p.rejuvenate;
        monitor.hooks_mut().register("rejuvenate", move || {
            if rejuvenate {
                *quale_time.lock().unwrap() = clock.now();
            }
            Ok(())
        });
    }

    let mut native = DriftSeries::new(EXEC_CLASS);
    let mut exec_trace = Vec::new();
    for tick in 1..=total_ticks {
        for sub in 1..=subs_per_tick {
            let t = ((tick - 1) * subs_per_tick + sub) as f64 * p.tick_s;
            clock.set(t);
            *quale_time.lock().unwrap() += increment;
        }
        // Loop boundaries land on exact period multiples.
        let t = tick as f64 * period_s;
        clock.set(t);
        let delta_time = *quale_time.lock().unwrap() - t;
        let scaled = delta_time / p.time_tolerance_s;
        exec.commit(scaled, t)?;
        exec_trace.push(TraceSample { t, value: scaled });
        native.push(t, delta_time)?;
        monitor.tick(t)?;
    }

    let (params, classification) = classify_native(&native, cfg.drift_bound);
    Ok(ScenarioReport::from_monitor(
        spec.kind.name(),
        spec.seed,
        spec.duration_s,
        cfg,
        &monitor,
        native,
        params,
        classification,
        None,
        ScenarioTraces {
            exec: exec_trace,
            ..Default::default()
        },
    ))
}

fn simulate_burst(
    spec: &ScenarioSpec,
    b: BurstParams,
    cfg: &AppConfig,
) -> Result<ScenarioReport, AppError> {
    // The profile comes from a clean baseline reference stream, the run
    // from the burst-carrying stream.
    let reference = uniform_reference_events(b.baseline_rate, cfg.ui.window_s, 20);
    let profile = build_profile(&reference, cfg.ui.window_s).map_err(|source| {
        AppError::UiTrace {
            channel: "scenario reference",
            source,
        }
    })?;
    let mut cfg = cfg.clone();
    cfg.ui.profile = Some(ProfileSource::Numeric {
        mu: profile.mu_rate,
        sigma: profile.sigma_rate,
    });

    let events = burst_events(&b, spec.duration_s);
    let clock = VirtualClock::new();
    let mut monitor = Monitor::new(cfg.clone(), clock.clone())?;
    for event in &events {
        monitor.push_ui_event(*event);
    }

    let period_s = cfg.period_s();
    for tick in 1..=tick_count(spec.duration_s, period_s) as u64 {
        let t = tick as f64 * period_s;
        clock.set(t);
        monitor.tick(t)?;
    }

    let behavior = detect_anomalies(&profile, &events, cfg.ui.tau);
    let native = monitor.ui_series().clone();
    let (params, classification) = classify_native(&native, cfg.drift_bound);
    Ok(ScenarioReport::from_monitor(
        spec.kind.name(),
        spec.seed,
        spec.duration_s,
        &cfg,
        &monitor,
        native,
        params,
        classification,
        Some(behavior),
        ScenarioTraces {
            ui: events,
            ..Default::default()
        },
    ))
}

/// Drives a precomputed drift series through the exec channel, one sample
/// per loop tick.
fn simulate_exec_series(
    spec: &ScenarioSpec,
    cfg: &AppConfig,
    series: DriftSeries,
) -> Result<ScenarioReport, AppError> {
    let clock = VirtualClock::new();
    let mut monitor = Monitor::new(cfg.clone(), clock.clone())?;
    let exec = monitor
        .exec_handle()
        .expect("series scenarios drive the exec channel");

    let mut exec_trace = Vec::new();
    for sample in series.samples() {
        clock.set(sample.t);
        exec.commit(sample.delta, sample.t)?;
        exec_trace.push(TraceSample {
            t: sample.t,
            value: sample.delta,
        });
        monitor.tick(sample.t)?;
    }

    let (params, classification) = classify_native(&series, cfg.drift_bound);
    Ok(ScenarioReport::from_monitor(
        spec.kind.name(),
        spec.seed,
        spec.duration_s,
        cfg,
        &monitor,
        series,
        params,
        classification,
        None,
        ScenarioTraces {
            exec: exec_trace,
            ..Default::default()
        },
    ))
}
