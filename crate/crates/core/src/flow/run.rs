//! Driving the stepper to a final time or to convergence.

use super::stepper::{cfl_dt, Stepper, StepperConfig};
use super::{GeomFields, GraphState};
use crate::diagnostics::{DiagnosticsRecorder, DiagnosticsRow};
use crate::error::FlowError;

/// Sampling controls for [`run_flow`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    /// Sample a diagnostics row every `cadence` steps (and at the end).
    pub cadence: usize,
    /// Monitored levels `k` for the sets `{Q > k}`.
    pub levels: Vec<f64>,
    /// Hard cap on the number of steps, if any.
    pub max_steps: Option<usize>,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            cadence: 10,
            levels: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
            max_steps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    /// Oscillation fell below `osc_tol`.
    Converged,
    /// Reached `t_final`.
    TFinal,
    /// Hit `max_steps`.
    StepLimit,
    /// A step failed; the state is the last good one.
    Aborted(FlowError),
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::TFinal => "t_final",
            Termination::StepLimit => "step_limit",
            Termination::Aborted(_) => "aborted",
        }
    }

    pub fn is_abort(&self) -> bool {
        matches!(self, Termination::Aborted(_))
    }
}

/// Hooks called by [`run_flow`].
pub trait FlowObserver {
    /// After every accepted step.
    fn on_step(&mut self, _state: &GraphState, _step: usize) {}

    /// At every sampled row, with the derived fields of that state.
    fn on_sample(&mut self, _state: &GraphState, _row: &DiagnosticsRow, _fields: &GeomFields) {}
}

/// Observer that does nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoObserver;

impl FlowObserver for NoObserver {}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: GraphState,
    pub termination: Termination,
    pub rows: Vec<DiagnosticsRow>,
    pub steps: usize,
    pub dt: f64,
}

/// Integrates from `initial` until convergence, `t_final`, the step limit,
/// or an abort. Only configuration errors are returned as `Err`.
pub fn run_flow(
    initial: GraphState,
    cfg: &StepperConfig,
    settings: &RunSettings,
    observer: &mut dyn FlowObserver,
) -> Result<RunOutcome, FlowError> {
    let mut stepper = Stepper::new(cfg.clone())?;
    let dt = cfl_dt(&initial, cfg)?;
    let cadence = settings.cadence.max(1);
    let mut state = initial;
    let mut rec = DiagnosticsRecorder::new(settings.levels.clone());
    let sample = |rec: &mut DiagnosticsRecorder, state: &GraphState, step: usize, obs: &mut dyn FlowObserver| {
        let (row, fields) = rec.record(state, step);
        obs.on_sample(state, row, &fields);
    };
    sample(&mut rec, &state, 0, observer);

    let mut steps = 0usize;
    // remaining time below this is treated as reaching t_final
    let t_eps = 1e-12 * cfg.t_final.max(dt);
    let termination = loop {
        if state.oscillation() < cfg.osc_tol {
            break Termination::Converged;
        }
        if cfg.t_final - state.t <= t_eps {
            break Termination::TFinal;
        }
        if settings.max_steps.is_some_and(|m| steps >= m) {
            break Termination::StepLimit;
        }
        let h = dt.min(cfg.t_final - state.t);
        if let Err(e) = stepper.advance(&mut state, h) {
            break Termination::Aborted(e);
        }
        steps += 1;
        observer.on_step(&state, steps);
        if steps % cadence == 0 {
            sample(&mut rec, &state, steps, observer);
        }
    };
    if rec.last().map(|r| r.step) != Some(steps) {
        sample(&mut rec, &state, steps, observer);
    }
    Ok(RunOutcome {
        state,
        termination,
        rows: rec.into_rows(),
        steps,
        dt,
    })
}
