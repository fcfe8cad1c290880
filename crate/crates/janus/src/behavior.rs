//! User-behavior qualia: windowed event-rate profiling and anomaly
//! detection.
//!
//! The stream of user-interface events is compared against a reference
//! profile (mean and spread of the windowed event rate) and each window
//! yields a drift value: the absolute z-score of the observed rate. Windows
//! whose drift exceeds a threshold are merged into anomalous intervals, and
//! the overall drift series separates gradual drifting (a trend in the
//! z-scores) from sudden drifting (a step jump, e.g. a keystroke burst).
//!
//! Reported intervals estimate when the anomalous behavior happened, not
//! which windows saw it: a window lags the events it contains by up to its
//! own length, so an interval starts one step before the first flagged
//! window end and stops where the last flagged window stops covering new
//! data.

use thiserror::Error;

use crate::model::{
    classify_drift, DriftClass, DriftClassifyParams, DriftSample, DriftSeries, QualiaClassId,
};

/// Qualia class of behavior-drift values.
pub const UI_DRIFT_CLASS: QualiaClassId = QualiaClassId::new(3);

/// Sliding windows advance by this fraction of the window length.
pub const WINDOW_STEP_DIVISOR: f64 = 5.0;

/// Reference profiles need at least this many complete windows.
pub const MIN_REFERENCE_WINDOWS: usize = 10;

/// Default anomaly threshold, in sigmas.
pub const DEFAULT_TAU: f64 = 3.0;

#[derive(Debug, Error, PartialEq)]
pub enum BehaviorError {
    #[error("reference stream spans {windows} complete windows, need {required}")]
    InsufficientReference { windows: usize, required: usize },
    #[error("window length must be positive, got {0}")]
    InvalidWindow(f64),
    #[error("line {line}: {reason}")]
    TraceMalformed { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UiEventKind {
    Keystroke,
    Command,
}

/// One user-interface event. Streams are ordered by `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UiEvent {
    pub t: f64,
    pub kind: UiEventKind,
}

impl UiEvent {
    pub fn key(t: f64) -> Self {
        Self {
            t,
            kind: UiEventKind::Keystroke,
        }
    }

    pub fn command(t: f64) -> Self {
        Self {
            t,
            kind: UiEventKind::Command,
        }
    }
}

/// Reference behavior: mean and spread of the windowed event rate. Both
/// event kinds count equally.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BehaviorProfile {
    /// Mean event rate over the reference windows, events per second.
    pub mu_rate: f64,
    /// Sample standard deviation of the windowed rate, floored at
    /// `0.1 * mu_rate` so a perfectly regular reference cannot blow up the
    /// z-scores.
    pub sigma_rate: f64,
    /// Window length in seconds.
    pub window_w: f64,
}

/// How the observed behavior departs from the reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BehaviorMode {
    None,
    Gradual,
    Sudden,
}

impl BehaviorMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BehaviorMode::None => "none",
            BehaviorMode::Gradual => "gradual",
            BehaviorMode::Sudden => "sudden",
        }
    }
}

/// Full anomaly report over an event stream.
#[derive(Debug, Clone)]
pub struct BehaviorDriftReport {
    /// Drift value of every inspected window, indexed by window end time.
    pub series: DriftSeries,
    /// Maximal, disjoint, ordered intervals of anomalous behavior.
    pub anomalous_windows: Vec<(f64, f64)>,
    pub mode: BehaviorMode,
}

/// Builds a reference profile from consecutive complete windows of the
/// reference stream, anchored at its first event.
pub fn build_profile(
    reference_events: &[UiEvent],
    window_w: f64,
) -> Result<BehaviorProfile, BehaviorError> {
    if !(window_w.is_finite() && window_w > 0.0) {
        return Err(BehaviorError::InvalidWindow(window_w));
    }
    let times = sorted_times(reference_events);
    let windows = match (times.first(), times.last()) {
        (Some(first), Some(last)) => ((last - first) / window_w + 1e-9).floor() as usize,
        _ => 0,
    };
    if windows < MIN_REFERENCE_WINDOWS {
        return Err(BehaviorError::InsufficientReference {
            windows,
            required: MIN_REFERENCE_WINDOWS,
        });
    }

    let t0 = times[0];
    let mut counts = vec![0usize; windows];
    for &t in &times {
        let idx = ((t - t0) / window_w).floor() as usize;
        if idx < windows {
            counts[idx] += 1;
        }
    }
    let rates: Vec<f64> = counts.iter().map(|&c| c as f64 / window_w).collect();
    let n = rates.len() as f64;
    let mu_rate = rates.iter().sum::<f64>() / n;
    let var = rates.iter().map(|r| (r - mu_rate).powi(2)).sum::<f64>() / (n - 1.0);
    let sigma_rate = var.sqrt().max(0.1 * mu_rate);

    Ok(BehaviorProfile {
        mu_rate,
        sigma_rate,
        window_w,
    })
}

/// Drift of the window ending at `t_end`: the absolute z-score of the event
/// rate over `(t_end - w, t_end]`. An empty window scores as rate zero.
pub fn score_window(profile: &BehaviorProfile, events: &[UiEvent], t_end: f64) -> DriftSample {
    let w = profile.window_w;
    let count = events
        .iter()
        .filter(|e| e.t > t_end - w && e.t <= t_end)
        .count();
    let rate = count as f64 / w;
    DriftSample {
        class_id: UI_DRIFT_CLASS,
        t: t_end,
        delta: (rate - profile.mu_rate).abs() / profile.sigma_rate,
    }
}

/// Scores every sliding window over the stream, merges windows whose drift
/// exceeds `tau` into anomalous intervals, and labels the overall mode:
/// sudden if an interval opens with a step jump in drift, gradual if the
/// drift series carries a trend, none otherwise.
pub fn detect_anomalies(
    profile: &BehaviorProfile,
    events: &[UiEvent],
    tau: f64,
) -> BehaviorDriftReport {
    let w = profile.window_w;
    let step = w / WINDOW_STEP_DIVISOR;
    let mut sorted: Vec<UiEvent> = events.to_vec();
    sorted.sort_by(|a, b| a.t.total_cmp(&b.t));

    let mut series = DriftSeries::new(UI_DRIFT_CLASS);
    let mut deltas: Vec<(f64, f64)> = Vec::new();
    if let (Some(first), Some(last)) = (sorted.first(), sorted.last()) {
        // Start at the first complete window so a partially covered leading
        // window cannot masquerade as a rate drop.
        let t0 = first.t;
        let mut idx = 0u64;
        loop {
            let t_end = t0 + w + idx as f64 * step;
            if t_end > last.t + 1e-9 {
                break;
            }
            let sample = score_window(profile, &sorted, t_end);
            series
                .push(t_end, sample.delta)
                .expect("window grid is strictly increasing");
            deltas.push((t_end, sample.delta));
            idx += 1;
        }
    }

    let mut intervals: Vec<(f64, f64)> = Vec::new();
    let mut sudden = false;
    let mut run_start: Option<usize> = None;
    for i in 0..=deltas.len() {
        let flagged = i < deltas.len() && deltas[i].1 > tau;
        match (flagged, run_start) {
            (true, None) => {
                run_start = Some(i);
                // A step change at the interval opening marks it sudden.
                if i > 0 && deltas[i].1 - deltas[i - 1].1 > tau {
                    sudden = true;
                }
            }
            (false, Some(start)) => {
                intervals.push(interval_estimate(&deltas, start, i - 1, w, step));
                run_start = None;
            }
            _ => {}
        }
    }

    let mode = if intervals.is_empty() {
        BehaviorMode::None
    } else if sudden {
        BehaviorMode::Sudden
    } else if is_trending(&series, tau) {
        BehaviorMode::Gradual
    } else {
        BehaviorMode::None
    };

    BehaviorDriftReport {
        series,
        anomalous_windows: intervals,
        mode,
    }
}

/// Onset/offset estimate for a run of flagged windows: the run's first
/// window picked up anomalous events within its final step, and its last
/// window stopped covering them `w - step` before its end.
fn interval_estimate(
    deltas: &[(f64, f64)],
    first: usize,
    last: usize,
    w: f64,
    step: f64,
) -> (f64, f64) {
    let start = deltas[first].0 - step;
    let end = (deltas[last].0 - w + step).max(start + step);
    (start, end)
}

fn is_trending(series: &DriftSeries, tau: f64) -> bool {
    let params = match DriftClassifyParams::new(tau) {
        Ok(p) => p,
        Err(_) => return false,
    };
    match classify_drift(series, &params) {
        Ok(out) => out.class == DriftClass::UnboundTrend,
        Err(_) => false,
    }
}

fn sorted_times(events: &[UiEvent]) -> Vec<f64> {
    let mut times: Vec<f64> = events.iter().map(|e| e.t).collect();
    times.sort_by(f64::total_cmp);
    times
}

/// Parses a UI event trace: one `<t_seconds> <K|C>` record per line, `#`
/// starts a comment, time must not decrease.
pub fn parse_ui_trace(text: &str) -> Result<Vec<UiEvent>, BehaviorError> {
    let mut events: Vec<UiEvent> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let mut fields = line.split_whitespace();
        let (t_field, kind_field) = match (fields.next(), fields.next()) {
            (None, _) => continue,
            (Some(t), Some(k)) => (t, k),
            (Some(_), None) => {
                return Err(BehaviorError::TraceMalformed {
                    line: line_no,
                    reason: "expected `<t_seconds> <K|C>`".to_string(),
                })
            }
        };
        if let Some(extra) = fields.next() {
            return Err(BehaviorError::TraceMalformed {
                line: line_no,
                reason: format!("unexpected trailing field `{extra}`"),
            });
        }
        let t: f64 = t_field.parse().map_err(|_| BehaviorError::TraceMalformed {
            line: line_no,
            reason: format!("invalid time `{t_field}`"),
        })?;
        if !t.is_finite() {
            return Err(BehaviorError::TraceMalformed {
                line: line_no,
                reason: "non-finite time".to_string(),
            });
        }
        let kind = match kind_field {
            "K" => UiEventKind::Keystroke,
            "C" => UiEventKind::Command,
            other => {
                return Err(BehaviorError::TraceMalformed {
                    line: line_no,
                    reason: format!("unknown event kind `{other}`"),
                })
            }
        };
        if let Some(last) = events.last() {
            if t < last.t {
                return Err(BehaviorError::TraceMalformed {
                    line: line_no,
                    reason: format!("time {t} decreases past {}", last.t),
                });
            }
        }
        events.push(UiEvent { t, kind });
    }
    Ok(events)
}

/// Renders events in the trace format.
pub fn ui_trace_to_string(events: &[UiEvent]) -> String {
    let mut out = String::new();
    for e in events {
        let kind = match e.kind {
            UiEventKind::Keystroke => "K",
            UiEventKind::Command => "C",
        };
        out.push_str(&format!("{} {}\n", e.t, kind));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// One event per second at integer times, inclusive of both ends.
    fn uniform_events(from: u64, to: u64) -> Vec<UiEvent> {
        (from..=to).map(|t| UiEvent::key(t as f64)).collect()
    }

    fn uniform_profile() -> BehaviorProfile {
        build_profile(&uniform_events(0, 100), 5.0).unwrap()
    }

    #[test]
    fn uniform_reference_gives_unit_rate_and_floored_sigma() {
        // 101 events spanning 100 s: 20 complete windows of 5 events each.
        let profile = uniform_profile();
        assert_eq!(profile.mu_rate, 1.0);
        assert_eq!(profile.sigma_rate, 0.1);
        assert_eq!(profile.window_w, 5.0);
    }

    #[test]
    fn alternating_windows_average_out() {
        // Bursts of 10 events in even 5 s windows, silence in odd ones.
        let mut events = Vec::new();
        for j in 0..10 {
            for k in 0..10 {
                events.push(UiEvent::key(10.0 * j as f64 + 0.5 * k as f64));
            }
        }
        events.push(UiEvent::command(100.0));
        let profile = build_profile(&events, 5.0).unwrap();
        assert_eq!(profile.mu_rate, 1.0);
        assert!(profile.sigma_rate > 1.0);
    }

    #[test]
    fn short_or_empty_references_are_rejected() {
        assert_eq!(
            build_profile(&[], 5.0).unwrap_err(),
            BehaviorError::InsufficientReference {
                windows: 0,
                required: 10,
            }
        );
        assert_eq!(
            build_profile(&uniform_events(0, 40), 5.0).unwrap_err(),
            BehaviorError::InsufficientReference {
                windows: 8,
                required: 10,
            }
        );
        assert!(build_profile(&uniform_events(0, 100), 0.0).is_err());
    }

    #[test]
    fn score_window_examples() {
        let profile = uniform_profile();
        // Rate matches the reference exactly.
        let sample = score_window(&profile, &uniform_events(0, 100), 50.0);
        assert_eq!(sample.delta, 0.0);
        assert_eq!(sample.t, 50.0);

        // 50 events in a 5 s window: 10 ev/s against mu 1, sigma 0.1.
        let burst: Vec<UiEvent> = (0..50)
            .map(|k| UiEvent::key(45.05 + 0.1 * k as f64))
            .collect();
        assert_eq!(score_window(&profile, &burst, 50.0).delta, 90.0);

        // Empty window: rate 0 scores (0 - 1) / 0.1 in absolute value.
        assert_eq!(score_window(&profile, &[], 50.0).delta, 10.0);
    }

    #[test]
    fn score_window_is_translation_invariant() {
        let profile = uniform_profile();
        let events = uniform_events(10, 60);
        let shifted: Vec<UiEvent> = events
            .iter()
            .map(|e| UiEvent { t: e.t + 1234.5, ..*e })
            .collect();
        for t_end in [20.0, 33.7, 60.0] {
            assert_eq!(
                score_window(&profile, &events, t_end).delta,
                score_window(&profile, &shifted, t_end + 1234.5).delta,
            );
        }
    }

    /// Baseline 1 ev/s, a 10 ev/s burst across [50, 60), baseline after.
    fn burst_events() -> Vec<UiEvent> {
        let mut events = Vec::new();
        for k in 0..50 {
            events.push(UiEvent::key(k as f64 + 0.5));
        }
        for k in 0..100 {
            events.push(UiEvent::key(50.05 + 0.1 * k as f64));
        }
        for k in 60..100 {
            events.push(UiEvent::key(k as f64 + 0.5));
        }
        events
    }

    #[test]
    fn burst_yields_one_sudden_interval() {
        let profile = uniform_profile();
        let report = detect_anomalies(&profile, &burst_events(), DEFAULT_TAU);
        assert_eq!(report.mode, BehaviorMode::Sudden);
        assert_eq!(report.anomalous_windows.len(), 1);
        let (start, end) = report.anomalous_windows[0];
        assert!((start - 50.0).abs() <= 1.0, "start {start}");
        assert!((end - 60.0).abs() <= 1.0, "end {end}");
    }

    #[test]
    fn uniform_stream_is_unremarkable() {
        let profile = uniform_profile();
        let report = detect_anomalies(&profile, &uniform_events(0, 100), DEFAULT_TAU);
        assert!(report.anomalous_windows.is_empty());
        assert_eq!(report.mode, BehaviorMode::None);
        assert!(report.series.samples().iter().all(|s| s.delta == 0.0));
    }

    /// Event times for a rate ramping linearly from 1 to 5 ev/s over 200 s:
    /// event k fires when the integrated rate t + t^2/100 reaches k.
    fn ramp_events() -> Vec<UiEvent> {
        let mut events = Vec::new();
        let mut k = 1u32;
        loop {
            let c = k as f64;
            let t = 50.0 * ((1.0 + c / 25.0).sqrt() - 1.0);
            if t > 200.0 {
                break;
            }
            events.push(UiEvent::key(t));
            k += 1;
        }
        events
    }

    #[test]
    fn ramp_is_gradual() {
        let profile = uniform_profile();
        let report = detect_anomalies(&profile, &ramp_events(), DEFAULT_TAU);
        assert_eq!(report.mode, BehaviorMode::Gradual);
        assert!(!report.anomalous_windows.is_empty());
    }

    #[test]
    fn deltas_are_nonnegative_and_intervals_cover_flags() {
        let profile = uniform_profile();
        for events in [burst_events(), ramp_events(), uniform_events(0, 100)] {
            let report = detect_anomalies(&profile, &events, DEFAULT_TAU);
            let w = profile.window_w;
            for s in report.series.samples() {
                assert!(s.delta >= 0.0);
                let flagged = s.delta > DEFAULT_TAU;
                let covered = report
                    .anomalous_windows
                    .iter()
                    .any(|&(a, b)| s.t - w < b && s.t > a);
                assert_eq!(flagged, flagged && covered, "flagged window not covered");
            }
            // Disjoint and sorted.
            for pair in report.anomalous_windows.windows(2) {
                assert!(pair[0].1 <= pair[1].0);
            }
        }
    }

    #[test]
    fn ui_trace_parses_and_roundtrips() {
        let text = "# log\n0.5 K\n1 C # enter\n1 K\n2.25 K\n";
        let events = parse_ui_trace(text).unwrap();
        assert_eq!(events.len(), 4);
        assert_eq!(events[1].kind, UiEventKind::Command);
        assert_eq!(parse_ui_trace(&ui_trace_to_string(&events)).unwrap(), events);
    }

    #[test]
    fn ui_trace_rejections() {
        assert!(matches!(
            parse_ui_trace("1 X\n").unwrap_err(),
            BehaviorError::TraceMalformed { line: 1, .. }
        ));
        assert!(parse_ui_trace("abc K\n").is_err());
        assert!(parse_ui_trace("1 K extra\n").is_err());
        assert!(parse_ui_trace("1\n").is_err());
        assert!(matches!(
            parse_ui_trace("2 K\n1 K\n").unwrap_err(),
            BehaviorError::TraceMalformed { line: 2, .. }
        ));
        assert!(parse_ui_trace("nan K\n").is_err());
        assert_eq!(parse_ui_trace("").unwrap(), vec![]);
    }
}
