//! Fidelity scores, the resilience scale, and the Analyze/Plan/Execute core
//! of the control loop.
//!
//! Drift on the user side and on the machine side is turned into fidelity
//! values (the reciprocal of drift, capped) and into normalized trust scores
//! in (0, 1] used for thresholding. The pair of scores maps onto a
//! four-state resilience scale; each state carries a planned action list
//! which the executor runs through named hooks, producing one audit record
//! per action.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Fidelity values are capped here, where drift approaches zero.
pub const PHI_CAP: f64 = 1e9;

#[derive(Debug, Error, PartialEq)]
pub enum TrustError {
    #[error("thresholds must satisfy 0 < lo < hi < 1, got lo={lo} hi={hi}")]
    InvalidThresholds { lo: f64, hi: f64 },
    #[error("weights must be in [0, 1] and sum to 1, got cpu={w_cpu} exec={w_exec}")]
    InvalidWeights { w_cpu: f64, w_exec: f64 },
    #[error("action references unknown hook `{0}`")]
    UnknownHook(String),
    #[error("policy invalid: {0}")]
    InvalidPolicy(String),
    #[error("drift input `{0}` has never been produced")]
    MissingInput(&'static str),
}

/// User-side fidelity of one drift value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserFidelity {
    /// Reciprocal drift, capped at [`PHI_CAP`].
    pub phi_u: f64,
    /// Normalized score 1 / (1 + |drift|), in (0, 1].
    pub s_u: f64,
}

/// Machine-side fidelity of the weighted drift combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineFidelity {
    pub phi_m: f64,
    pub s_m: f64,
}

/// Weights of the machine-side drift combination; they must sum to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineWeights {
    w_cpu: f64,
    w_exec: f64,
}

impl MachineWeights {
    pub fn new(w_cpu: f64, w_exec: f64) -> Result<Self, TrustError> {
        let in_range = (0.0..=1.0).contains(&w_cpu) && (0.0..=1.0).contains(&w_exec);
        if !in_range || (w_cpu + w_exec - 1.0).abs() > 1e-9 {
            return Err(TrustError::InvalidWeights { w_cpu, w_exec });
        }
        Ok(Self { w_cpu, w_exec })
    }

    pub fn w_cpu(&self) -> f64 {
        self.w_cpu
    }

    pub fn w_exec(&self) -> f64 {
        self.w_exec
    }
}

impl Default for MachineWeights {
    fn default() -> Self {
        Self {
            w_cpu: 0.5,
            w_exec: 0.5,
        }
    }
}

/// Score thresholds of the resilience scale: high is at or above `theta_hi`,
/// low is strictly below `theta_lo`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustThresholds {
    theta_hi: f64,
    theta_lo: f64,
}

impl TrustThresholds {
    pub fn new(theta_hi: f64, theta_lo: f64) -> Result<Self, TrustError> {
        if !(0.0 < theta_lo && theta_lo < theta_hi && theta_hi < 1.0) {
            return Err(TrustError::InvalidThresholds {
                lo: theta_lo,
                hi: theta_hi,
            });
        }
        Ok(Self { theta_hi, theta_lo })
    }

    pub fn theta_hi(&self) -> f64 {
        self.theta_hi
    }

    pub fn theta_lo(&self) -> f64 {
        self.theta_lo
    }
}

impl Default for TrustThresholds {
    fn default() -> Self {
        Self {
            theta_hi: 0.66,
            theta_lo: 0.33,
        }
    }
}

/// The four-state resilience scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrustState {
    Untrustworthy,
    Unstable,
    Unsafe,
    Trustworthy,
}

impl TrustState {
    pub const ALL: [TrustState; 4] = [
        TrustState::Untrustworthy,
        TrustState::Unstable,
        TrustState::Unsafe,
        TrustState::Trustworthy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TrustState::Trustworthy => "Trustworthy",
            TrustState::Unstable => "Unstable",
            TrustState::Unsafe => "Unsafe",
            TrustState::Untrustworthy => "Untrustworthy",
        }
    }

    /// Coarse severity ordering: both bad < one side bad < both good.
    pub fn rank(self) -> u8 {
        match self {
            TrustState::Untrustworthy => 0,
            TrustState::Unstable | TrustState::Unsafe => 1,
            TrustState::Trustworthy => 2,
        }
    }
}

impl fmt::Display for TrustState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fidelity values and scores of one analysis instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityVector {
    pub t: f64,
    pub phi_u: f64,
    pub phi_m: f64,
    pub s_u: f64,
    pub s_m: f64,
}

/// User-side fidelity per the reciprocal-drift rule, with the normalized
/// score used for thresholding.
pub fn fidelity_user(delta_ui: f64) -> UserFidelity {
    let d = delta_ui.abs();
    UserFidelity {
        phi_u: reciprocal_capped(d),
        s_u: 1.0 / (1.0 + d),
    }
}

/// Machine-side fidelity: the drifts combine as a weighted absolute sum
/// before the same reciprocal rule.
pub fn fidelity_machine(
    delta_cpu: f64,
    delta_exec: f64,
    weights: &MachineWeights,
) -> MachineFidelity {
    let f = weights.w_cpu * delta_cpu.abs() + weights.w_exec * delta_exec.abs();
    MachineFidelity {
        phi_m: reciprocal_capped(f),
        s_m: 1.0 / (1.0 + f),
    }
}

fn reciprocal_capped(x: f64) -> f64 {
    if x == 0.0 {
        PHI_CAP
    } else {
        (1.0 / x).min(PHI_CAP)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Level {
    Low,
    Medium,
    High,
}

fn level(score: f64, thresholds: &TrustThresholds) -> Level {
    if score >= thresholds.theta_hi {
        Level::High
    } else if score >= thresholds.theta_lo {
        Level::Medium
    } else {
        Level::Low
    }
}

/// Maps the score pair onto the resilience scale. Total: every pair lands in
/// exactly one state.
pub fn classify_trust(s_u: f64, s_m: f64, thresholds: &TrustThresholds) -> TrustState {
    match (level(s_u, thresholds), level(s_m, thresholds)) {
        (Level::Low, Level::Low) => TrustState::Untrustworthy,
        (_, Level::Low) => TrustState::Unstable,
        (Level::Low, _) => TrustState::Unsafe,
        _ => TrustState::Trustworthy,
    }
}

/// An action the planner can emit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    /// Write the current state to the trust log.
    Log,
    /// Run the named reconfiguration hook.
    Reconfigure(String),
    /// Raise an alarm on the named channel; a hook registered under the
    /// channel name is invoked when present.
    Alarm(String),
    /// Run the named stop hook; the last resort.
    SafeStop(String),
}

impl Action {
    pub fn kind(&self) -> &'static str {
        match self {
            Action::Log => "Log",
            Action::Reconfigure(_) => "Reconfigure",
            Action::Alarm(_) => "Alarm",
            Action::SafeStop(_) => "SafeStop",
        }
    }

    pub fn hook_name(&self) -> Option<&str> {
        match self {
            Action::Log => None,
            Action::Reconfigure(name) | Action::Alarm(name) | Action::SafeStop(name) => {
                Some(name)
            }
        }
    }

    /// Whether the hook must be registered before execution.
    fn requires_hook(&self) -> bool {
        matches!(self, Action::Reconfigure(_) | Action::SafeStop(_))
    }
}

/// Ordered action lists per trust state.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionPolicy {
    by_state: BTreeMap<TrustState, Vec<Action>>,
}

impl ActionPolicy {
    /// Validates the structural rules: the trustworthy state may at most
    /// log, and the untrustworthy state must include a stop.
    pub fn new(by_state: BTreeMap<TrustState, Vec<Action>>) -> Result<Self, TrustError> {
        let trustworthy = by_state.get(&TrustState::Trustworthy);
        if trustworthy
            .map(|actions| actions.iter().any(|a| *a != Action::Log))
            .unwrap_or(false)
        {
            return Err(TrustError::InvalidPolicy(
                "the trustworthy state may at most log".to_string(),
            ));
        }
        let has_stop = by_state
            .get(&TrustState::Untrustworthy)
            .map(|actions| actions.iter().any(|a| matches!(a, Action::SafeStop(_))))
            .unwrap_or(false);
        if !has_stop {
            return Err(TrustError::InvalidPolicy(
                "the untrustworthy state must include a safe stop".to_string(),
            ));
        }
        Ok(Self { by_state })
    }

    pub fn actions_for(&self, state: TrustState) -> &[Action] {
        self.by_state
            .get(&state)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Hook names that must be registered for this policy to execute.
    pub fn required_hooks(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self
            .by_state
            .values()
            .flatten()
            .filter(|a| a.requires_hook())
            .filter_map(Action::hook_name)
            .collect();
        names.sort_unstable();
        names.dedup();
        names
    }
}

impl Default for ActionPolicy {
    fn default() -> Self {
        let mut by_state = BTreeMap::new();
        by_state.insert(TrustState::Trustworthy, vec![Action::Log]);
        by_state.insert(
            TrustState::Unstable,
            vec![Action::Log, Action::Reconfigure("rejuvenate".to_string())],
        );
        by_state.insert(
            TrustState::Unsafe,
            vec![Action::Log, Action::Alarm("operator".to_string())],
        );
        by_state.insert(
            TrustState::Untrustworthy,
            vec![
                Action::Log,
                Action::Alarm("operator".to_string()),
                Action::SafeStop("halt".to_string()),
            ],
        );
        Self::new(by_state).expect("default policy is valid")
    }
}

/// The planner: the policy's list for the state, unmodified and in order.
pub fn plan(state: TrustState, policy: &ActionPolicy) -> Vec<Action> {
    policy.actions_for(state).to_vec()
}

/// Outcome of one executed action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HookResult {
    Ok,
    Failed(String),
}

impl HookResult {
    pub fn is_ok(&self) -> bool {
        matches!(self, HookResult::Ok)
    }
}

/// Audit record of one executed action.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionRecord {
    pub t: f64,
    pub trust_state: TrustState,
    pub action: Action,
    pub result: HookResult,
    pub audit_seq: u64,
}

type Hook = Box<dyn FnMut() -> Result<(), String> + Send>;

/// Named callbacks the executor can run.
#[derive(Default)]
pub struct HookRegistry {
    hooks: BTreeMap<String, Hook>,
}

impl HookRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(
        &mut self,
        name: impl Into<String>,
        hook: impl FnMut() -> Result<(), String> + Send + 'static,
    ) {
        self.hooks.insert(name.into(), Box::new(hook));
    }

    pub fn contains(&self, name: &str) -> bool {
        self.hooks.contains_key(name)
    }

    fn run(&mut self, name: &str) -> Option<Result<(), String>> {
        self.hooks.get_mut(name).map(|hook| hook())
    }
}

/// Runs the planned actions in order, one audit record each. Hook names are
/// validated up front, before anything runs; a hook failure is recorded and
/// does not abort the remaining actions.
pub fn execute(
    actions: &[Action],
    hooks: &mut HookRegistry,
    t: f64,
    trust_state: TrustState,
    audit_seq: &mut u64,
) -> Result<Vec<ActionRecord>, TrustError> {
    for action in actions {
        if action.requires_hook() {
            let name = action.hook_name().expect("hooked action has a name");
            if !hooks.contains(name) {
                return Err(TrustError::UnknownHook(name.to_string()));
            }
        }
    }

    let mut records = Vec::with_capacity(actions.len());
    for action in actions {
        let result = match action {
            Action::Log => HookResult::Ok,
            Action::Alarm(channel) => match hooks.run(channel) {
                // An alarm without a registered channel hook still counts:
                // the record itself is the alarm.
                None | Some(Ok(())) => HookResult::Ok,
                Some(Err(e)) => HookResult::Failed(e),
            },
            Action::Reconfigure(name) | Action::SafeStop(name) => {
                match hooks.run(name).expect("validated above") {
                    Ok(()) => HookResult::Ok,
                    Err(e) => HookResult::Failed(e),
                }
            }
        };
        *audit_seq += 1;
        records.push(ActionRecord {
            t,
            trust_state,
            action: action.clone(),
            result,
            audit_seq: *audit_seq,
        });
    }
    Ok(records)
}

/// Drift inputs of one loop tick. `None` marks a signal that has never been
/// produced; a stale-but-present signal is simply its last value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapeInputs {
    pub delta_ui: Option<f64>,
    pub delta_cpu: Option<f64>,
    pub delta_exec: Option<f64>,
}

/// Result of one loop tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TickOutcome {
    pub fidelity: FidelityVector,
    pub state: TrustState,
    pub state_changed: bool,
    pub records: Vec<ActionRecord>,
}

/// The Analyze/Plan/Execute core, ticked by the monitor.
///
/// Each tick turns the drift inputs into a [`FidelityVector`], classifies
/// the resilience state, plans per the policy and executes through the
/// hooks. State transitions are edge-logged via `state_changed`. With a
/// debounce of `k > 0` ticks, actions (beyond logging) fire only once the
/// state has persisted `k` consecutive ticks; off by default.
pub struct MapeCore {
    weights: MachineWeights,
    thresholds: TrustThresholds,
    policy: ActionPolicy,
    hooks: HookRegistry,
    debounce_ticks: u32,
    history: Vec<FidelityVector>,
    last_state: Option<TrustState>,
    persisted: u32,
    audit_seq: u64,
}

impl MapeCore {
    pub fn new(
        weights: MachineWeights,
        thresholds: TrustThresholds,
        policy: ActionPolicy,
        hooks: HookRegistry,
    ) -> Self {
        Self {
            weights,
            thresholds,
            policy,
            hooks,
            debounce_ticks: 0,
            history: Vec::new(),
            last_state: None,
            persisted: 0,
            audit_seq: 0,
        }
    }

    /// Requires `k` consecutive ticks in a state before its non-log actions
    /// fire. Zero disables debouncing.
    pub fn with_debounce(mut self, k: u32) -> Self {
        self.debounce_ticks = k;
        self
    }

    pub fn hooks_mut(&mut self) -> &mut HookRegistry {
        &mut self.hooks
    }

    /// Apperception history: every fidelity vector analyzed so far.
    pub fn history(&self) -> &[FidelityVector] {
        &self.history
    }

    pub fn last_state(&self) -> Option<TrustState> {
        self.last_state
    }

    /// Validates that every hook the policy may demand is registered.
    pub fn validate_hooks(&self) -> Result<(), TrustError> {
        for name in self.policy.required_hooks() {
            if !self.hooks.contains(name) {
                return Err(TrustError::UnknownHook(name.to_string()));
            }
        }
        Ok(())
    }

    /// One Monitor-Analyze-Plan-Execute pass over the given inputs.
    pub fn tick(&mut self, inputs: MapeInputs, t: f64) -> Result<TickOutcome, TrustError> {
        let delta_ui = inputs.delta_ui.ok_or(TrustError::MissingInput("ui"))?;
        let delta_cpu = inputs.delta_cpu.ok_or(TrustError::MissingInput("cpu"))?;
        let delta_exec = inputs.delta_exec.ok_or(TrustError::MissingInput("exec"))?;

        let user = fidelity_user(delta_ui);
        let machine = fidelity_machine(delta_cpu, delta_exec, &self.weights);
        let fidelity = FidelityVector {
            t,
            phi_u: user.phi_u,
            phi_m: machine.phi_m,
            s_u: user.s_u,
            s_m: machine.s_m,
        };
        self.history.push(fidelity);

        let state = classify_trust(user.s_u, machine.s_m, &self.thresholds);
        let state_changed = self.last_state != Some(state);
        if state_changed {
            self.persisted = 1;
        } else {
            self.persisted = self.persisted.saturating_add(1);
        }
        self.last_state = Some(state);

        let mut actions = plan(state, &self.policy);
        if self.debounce_ticks > 0 && self.persisted < self.debounce_ticks {
            actions.retain(|a| matches!(a, Action::Log));
        }
        let records = execute(&actions, &mut self.hooks, t, state, &mut self.audit_seq)?;

        Ok(TickOutcome {
            fidelity,
            state,
            state_changed,
            records,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn user_fidelity_examples() {
        let f = fidelity_user(1.0);
        assert_eq!(f.phi_u, 1.0);
        assert_eq!(f.s_u, 0.5);

        let f = fidelity_user(0.0);
        assert_eq!(f.phi_u, PHI_CAP);
        assert_eq!(f.s_u, 1.0);

        let f = fidelity_user(4.0);
        assert_eq!(f.phi_u, 0.25);
        assert_eq!(f.s_u, 0.2);

        // Sign of the drift is irrelevant.
        assert_eq!(fidelity_user(-4.0), fidelity_user(4.0));
    }

    #[test]
    fn machine_fidelity_examples() {
        let w = MachineWeights::default();
        let f = fidelity_machine(0.5, 1.5, &w);
        assert_eq!(f.phi_m, 1.0);
        assert_eq!(f.s_m, 0.5);

        let f = fidelity_machine(0.0, 0.0, &w);
        assert_eq!(f.phi_m, PHI_CAP);
        assert_eq!(f.s_m, 1.0);

        let w = MachineWeights::new(1.0, 0.0).unwrap();
        let f = fidelity_machine(2.0, 0.0, &w);
        assert_eq!(f.phi_m, 0.5);
        assert_eq!(f.s_m, 1.0 / 3.0);
    }

    #[test]
    fn weights_are_validated() {
        assert!(MachineWeights::new(0.3, 0.7).is_ok());
        assert!(MachineWeights::new(0.3, 0.6).is_err());
        assert!(MachineWeights::new(-0.1, 1.1).is_err());
        assert!(MachineWeights::new(1.5, -0.5).is_err());
    }

    #[test]
    fn thresholds_are_validated() {
        assert!(TrustThresholds::new(0.66, 0.33).is_ok());
        assert!(TrustThresholds::new(0.33, 0.66).is_err());
        assert!(TrustThresholds::new(0.5, 0.5).is_err());
        assert!(TrustThresholds::new(1.0, 0.3).is_err());
        assert!(TrustThresholds::new(0.7, 0.0).is_err());
    }

    #[test]
    fn trust_quadrants() {
        let th = TrustThresholds::default();
        assert_eq!(classify_trust(0.9, 0.9, &th), TrustState::Trustworthy);
        assert_eq!(classify_trust(0.9, 0.1, &th), TrustState::Unstable);
        assert_eq!(classify_trust(0.1, 0.9, &th), TrustState::Unsafe);
        assert_eq!(classify_trust(0.1, 0.1, &th), TrustState::Untrustworthy);
        // The uncovered middle band counts as trustworthy: neither side is
        // low.
        assert_eq!(classify_trust(0.5, 0.5, &th), TrustState::Trustworthy);
    }

    #[test]
    fn default_policy_lists() {
        let policy = ActionPolicy::default();
        assert_eq!(plan(TrustState::Trustworthy, &policy), vec![Action::Log]);
        assert_eq!(
            plan(TrustState::Unstable, &policy),
            vec![Action::Log, Action::Reconfigure("rejuvenate".to_string())]
        );
        assert_eq!(
            plan(TrustState::Untrustworthy, &policy),
            vec![
                Action::Log,
                Action::Alarm("operator".to_string()),
                Action::SafeStop("halt".to_string()),
            ]
        );
    }

    #[test]
    fn policy_structural_rules() {
        let mut by_state = BTreeMap::new();
        by_state.insert(TrustState::Trustworthy, vec![Action::Log]);
        by_state.insert(TrustState::Untrustworthy, vec![Action::Log]);
        assert!(ActionPolicy::new(by_state.clone()).is_err());

        by_state.insert(
            TrustState::Untrustworthy,
            vec![Action::SafeStop("halt".to_string())],
        );
        assert!(ActionPolicy::new(by_state.clone()).is_ok());

        by_state.insert(
            TrustState::Trustworthy,
            vec![Action::Reconfigure("x".to_string())],
        );
        assert!(ActionPolicy::new(by_state).is_err());
    }

    #[test]
    fn execute_runs_in_order_and_does_not_abort() {
        let mut hooks = HookRegistry::new();
        hooks.register("operator", || Err("channel down".to_string()));
        hooks.register("halt", || Ok(()));
        let mut seq = 0;
        let records = execute(
            &[
                Action::Alarm("operator".to_string()),
                Action::SafeStop("halt".to_string()),
            ],
            &mut hooks,
            1.5,
            TrustState::Untrustworthy,
            &mut seq,
        )
        .unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(
            records[0].result,
            HookResult::Failed("channel down".to_string())
        );
        assert_eq!(records[1].result, HookResult::Ok);
        assert_eq!(records[0].audit_seq, 1);
        assert_eq!(records[1].audit_seq, 2);
    }

    #[test]
    fn unknown_hook_fails_before_anything_runs() {
        let mut hooks = HookRegistry::new();
        let ran = std::sync::Arc::new(std::sync::atomic::AtomicBool::new(false));
        let ran2 = std::sync::Arc::clone(&ran);
        hooks.register("present", move || {
            ran2.store(true, std::sync::atomic::Ordering::SeqCst);
            Ok(())
        });
        let mut seq = 0;
        let err = execute(
            &[
                Action::Reconfigure("present".to_string()),
                Action::SafeStop("absent".to_string()),
            ],
            &mut hooks,
            0.0,
            TrustState::Untrustworthy,
            &mut seq,
        )
        .unwrap_err();
        assert_eq!(err, TrustError::UnknownHook("absent".to_string()));
        assert!(!ran.load(std::sync::atomic::Ordering::SeqCst));
        assert_eq!(seq, 0);
    }

    #[test]
    fn alarm_without_registered_channel_succeeds() {
        let mut hooks = HookRegistry::new();
        let mut seq = 0;
        let records = execute(
            &[Action::Log, Action::Alarm("operator".to_string())],
            &mut hooks,
            0.0,
            TrustState::Unsafe,
            &mut seq,
        )
        .unwrap();
        assert!(records.iter().all(|r| r.result.is_ok()));
    }

    fn default_core() -> MapeCore {
        let mut hooks = HookRegistry::new();
        hooks.register("rejuvenate", || Ok(()));
        hooks.register("halt", || Ok(()));
        MapeCore::new(
            MachineWeights::default(),
            TrustThresholds::default(),
            ActionPolicy::default(),
            hooks,
        )
    }

    fn inputs(ui: f64, cpu: f64, exec: f64) -> MapeInputs {
        MapeInputs {
            delta_ui: Some(ui),
            delta_cpu: Some(cpu),
            delta_exec: Some(exec),
        }
    }

    #[test]
    fn perfect_inputs_are_trustworthy() {
        let mut core = default_core();
        let out = core.tick(inputs(0.0, 0.0, 0.0), 0.0).unwrap();
        assert_eq!(out.state, TrustState::Trustworthy);
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].action, Action::Log);
        assert!(out.state_changed);
        assert_eq!(out.fidelity.s_u, 1.0);
        assert_eq!(out.fidelity.s_m, 1.0);
    }

    #[test]
    fn slow_machine_goes_unstable_and_reconfigures() {
        let mut core = default_core();
        let out = core.tick(inputs(0.1, 0.2, 9.8), 1.0).unwrap();
        assert!((out.fidelity.s_u - 1.0 / 1.1).abs() < 1e-12);
        assert!((out.fidelity.phi_m - 0.2).abs() < 1e-12); // f = 5.0
        assert!((out.fidelity.s_m - 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(out.state, TrustState::Unstable);
        assert!(out
            .records
            .iter()
            .any(|r| matches!(r.action, Action::Reconfigure(_)) && r.result.is_ok()));
    }

    #[test]
    fn deviant_user_goes_unsafe_and_alarms() {
        let mut core = default_core();
        let out = core.tick(inputs(9.0, 0.0, 0.0), 2.0).unwrap();
        assert_eq!(out.fidelity.s_u, 0.1);
        assert_eq!(out.fidelity.s_m, 1.0);
        assert_eq!(out.state, TrustState::Unsafe);
        assert!(out
            .records
            .iter()
            .any(|r| matches!(r.action, Action::Alarm(_))));
    }

    #[test]
    fn missing_input_is_an_error() {
        let mut core = default_core();
        let err = core
            .tick(
                MapeInputs {
                    delta_ui: Some(0.0),
                    delta_cpu: None,
                    delta_exec: Some(0.0),
                },
                0.0,
            )
            .unwrap_err();
        assert_eq!(err, TrustError::MissingInput("cpu"));
        assert!(core.history().is_empty());
    }

    #[test]
    fn ticks_are_deterministic_and_fully_audited() {
        let mut a = default_core();
        let mut b = default_core();
        for k in 0..5 {
            let i = inputs(0.1 * k as f64, 0.0, 4.0);
            let out_a = a.tick(i, k as f64).unwrap();
            let out_b = b.tick(i, k as f64).unwrap();
            assert_eq!(out_a, out_b);
            assert_eq!(
                out_a.records.len(),
                plan(out_a.state, &ActionPolicy::default()).len()
            );
        }
        assert_eq!(a.history().len(), 5);
    }

    #[test]
    fn state_changes_are_edge_flagged() {
        let mut core = default_core();
        assert!(core.tick(inputs(0.0, 0.0, 0.0), 0.0).unwrap().state_changed);
        assert!(!core.tick(inputs(0.0, 0.0, 0.0), 1.0).unwrap().state_changed);
        let out = core.tick(inputs(0.0, 0.0, 9.8), 2.0).unwrap();
        assert!(out.state_changed);
        assert_eq!(out.state, TrustState::Unstable);
    }

    #[test]
    fn debounce_suppresses_actions_until_state_persists() {
        let mut hooks = HookRegistry::new();
        hooks.register("rejuvenate", || Ok(()));
        hooks.register("halt", || Ok(()));
        let mut core = MapeCore::new(
            MachineWeights::default(),
            TrustThresholds::default(),
            ActionPolicy::default(),
            hooks,
        )
        .with_debounce(3);
        let slow = inputs(0.0, 0.0, 9.8);
        for t in 0..2 {
            let out = core.tick(slow, t as f64).unwrap();
            assert_eq!(out.records.len(), 1, "only the log before persistence");
        }
        let out = core.tick(slow, 2.0).unwrap();
        assert_eq!(out.records.len(), 2, "third consecutive tick fires");
    }

    #[test]
    fn weight_invariance_when_drifts_agree() {
        for w_cpu in [0.0, 0.25, 0.5, 0.9, 1.0] {
            let w = MachineWeights::new(w_cpu, 1.0 - w_cpu).unwrap();
            let f = fidelity_machine(1.7, 1.7, &w);
            let f_half = fidelity_machine(1.7, 1.7, &MachineWeights::default());
            assert!((f.phi_m - f_half.phi_m).abs() < 1e-12);
            assert!((f.s_m - f_half.s_m).abs() < 1e-12);
        }
    }

    #[test]
    fn validate_hooks_catches_missing_names() {
        let core = MapeCore::new(
            MachineWeights::default(),
            TrustThresholds::default(),
            ActionPolicy::default(),
            HookRegistry::new(),
        );
        assert!(matches!(
            core.validate_hooks(),
            Err(TrustError::UnknownHook(_))
        ));
    }
}
