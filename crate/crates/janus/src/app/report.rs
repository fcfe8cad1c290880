//! Scenario/replay reports: a canonical text rendering and an on-disk
//! layout whose traces feed straight back into `replay`.

use std::io;
use std::path::Path;

use crate::app::config::{render_config, AppConfig};
use crate::app::monitor::Monitor;
use crate::behavior::{ui_trace_to_string, BehaviorDriftReport, UiEvent};
use crate::model::{DriftClassification, DriftClassifyParams, DriftSeries};
use crate::rrvar::{trace_to_string, TraceSample};
use crate::trust::TrustState;

/// Input traces of a run, echoed into the report so a simulation can be
/// replayed bit-for-bit.
#[derive(Debug, Clone, Default)]
pub struct ScenarioTraces {
    pub cpu: Vec<TraceSample>,
    pub exec: Vec<TraceSample>,
    pub ui: Vec<UiEvent>,
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub scenario: String,
    pub seed: u64,
    pub duration_s: f64,
    pub period_ms: u64,
    pub config_text: String,
    pub trust_lines: Vec<String>,
    pub action_lines: Vec<String>,
    pub transitions: Vec<(f64, TrustState)>,
    /// The run's native drift series (unscaled, in its own units).
    pub drift: DriftSeries,
    pub classify_params: DriftClassifyParams,
    pub classification: Option<DriftClassification>,
    pub behavior: Option<BehaviorDriftReport>,
    pub max_abs_drift: f64,
    pub traces: ScenarioTraces,
}

impl ScenarioReport {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_monitor(
        scenario: &str,
        seed: u64,
        duration_s: f64,
        cfg: &AppConfig,
        monitor: &Monitor,
        drift: DriftSeries,
        classify_params: DriftClassifyParams,
        classification: Option<DriftClassification>,
        behavior: Option<BehaviorDriftReport>,
        traces: ScenarioTraces,
    ) -> Self {
        Self {
            scenario: scenario.to_string(),
            seed,
            duration_s,
            period_ms: cfg.period_ms,
            config_text: render_config(cfg),
            trust_lines: monitor.trust_lines().to_vec(),
            action_lines: monitor.action_lines().to_vec(),
            transitions: monitor.transitions().to_vec(),
            max_abs_drift: drift.max_abs_delta(),
            drift,
            classify_params,
            classification,
            behavior,
            traces,
        }
    }

    /// Summary header: everything but the per-tick log bodies.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("scenario = {}\n", self.scenario));
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!("duration_s = {}\n", self.duration_s));
        out.push_str(&format!("period_ms = {}\n", self.period_ms));
        out.push_str(&format!("ticks = {}\n", self.trust_lines.len()));
        out.push_str(&format!("max_abs_drift = {}\n", self.max_abs_drift));
        out.push_str(&format!(
            "classify_bound = {}\n",
            self.classify_params.bound
        ));
        match &self.classification {
            Some(c) => {
                out.push_str(&format!("drift_class = {}\n", c.class));
                out.push_str(&format!("slope = {}\n", c.slope));
                out.push_str(&format!("intercept = {}\n", c.intercept));
                out.push_str(&format!("r2 = {}\n", c.r2));
                out.push_str(&format!("in_bound_fraction = {}\n", c.in_bound_fraction));
            }
            None => out.push_str("drift_class = unclassified\n"),
        }
        if let Some(behavior) = &self.behavior {
            out.push_str(&format!("behavior_mode = {}\n", behavior.mode.as_str()));
            let intervals = behavior
                .anomalous_windows
                .iter()
                .map(|(a, b)| format!("({a},{b})"))
                .collect::<Vec<_>>()
                .join(" ");
            out.push_str(&format!("anomalous_intervals = {intervals}\n"));
        }
        out.push_str("transitions:\n");
        for (t, state) in &self.transitions {
            out.push_str(&format!("t={t} state={state}\n"));
        }
        out
    }

    /// Canonical full rendering; byte-identical for identical runs.
    pub fn render(&self) -> String {
        let mut out = self.summary();
        out.push_str("trust:\n");
        for line in &self.trust_lines {
            out.push_str(line);
            out.push('\n');
        }
        out.push_str("actions:\n");
        for line in &self.action_lines {
            out.push_str(line);
            out.push('\n');
        }
        out
    }

    /// Writes `summary.txt`, the two logs, the three input traces and the
    /// effective config. `replay` consumes the traces and config untouched.
    pub fn write_to_dir(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("summary.txt"), self.summary())?;
        std::fs::write(dir.join("trust.log"), lines_to_text(&self.trust_lines))?;
        std::fs::write(dir.join("actions.log"), lines_to_text(&self.action_lines))?;
        std::fs::write(dir.join("cpu.trace"), trace_to_string(&self.traces.cpu))?;
        std::fs::write(dir.join("exec.trace"), trace_to_string(&self.traces.exec))?;
        std::fs::write(dir.join("ui.trace"), ui_trace_to_string(&self.traces.ui))?;
        std::fs::write(dir.join("scenario.config"), &self.config_text)?;
        Ok(())
    }
}

fn lines_to_text(lines: &[String]) -> String {
    let mut out = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for line in lines {
        out.push_str(line);
        out.push('\n');
    }
    out
}
