//! Explicit time stepping.

use super::stencil::{fill_ghosts, rhs_into, GhostRule, RhsStats};
use super::GraphState;
use crate::error::FlowError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Euler,
    Rk4,
    /// Second-order Runge-Kutta-Legendre super step with `stages` right-hand
    /// side evaluations. One super step spans `(s² + s - 2) / 4` explicit
    /// steps.
    Rkl2 { stages: usize },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Euler => "euler",
            Scheme::Rk4 => "rk4",
            Scheme::Rkl2 { .. } => "rkl2",
        }
    }

    /// Step length in units of the explicit CFL step.
    pub fn step_factor(&self) -> f64 {
        match *self {
            Scheme::Euler | Scheme::Rk4 => 1.0,
            Scheme::Rkl2 { stages } => {
                let s = stages as f64;
                (s * s + s - 2.0) / 4.0
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepperConfig {
    /// Parabolic CFL factor: `dt = sigma * h_min²`.
    pub sigma: f64,
    pub scheme: Scheme,
    pub t_final: f64,
    /// Abort once `max ṽ` exceeds this.
    pub vtilde_cap: f64,
    /// Stop once `max u - min u` drops below this.
    pub osc_tol: f64,
    pub ghost_rule: GhostRule,
    /// Evaluate the right-hand side on the rayon pool.
    pub parallel: bool,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            sigma: 0.2,
            scheme: Scheme::Euler,
            t_final: 1.0,
            vtilde_cap: 1e3,
            osc_tol: 1e-4,
            ghost_rule: GhostRule::Neumann,
            parallel: false,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<(), FlowError> {
        if !(self.sigma > 0.0 && self.sigma <= 0.5) {
            return Err(FlowError::SigmaOutOfRange(self.sigma));
        }
        if !(self.t_final > 0.0) {
            return Err(FlowError::NonPositiveFinalTime(self.t_final));
        }
        if !(self.vtilde_cap > 1.0) {
            return Err(FlowError::VtildeCapTooSmall(self.vtilde_cap));
        }
        if let Scheme::Rkl2 { stages } = self.scheme {
            if stages < 3 {
                return Err(FlowError::TooFewStages(stages));
            }
        }
        Ok(())
    }
}

/// `dt = sigma * h_min²`. The principal coefficients satisfy `g^{ii} ≤ 1`,
/// so this bound holds uniformly in the gradient. For [`Scheme::Rkl2`] the
/// result is the super step.
pub fn cfl_dt(state: &GraphState, cfg: &StepperConfig) -> Result<f64, FlowError> {
    if !(cfg.sigma > 0.0 && cfg.sigma <= 0.5) {
        return Err(FlowError::SigmaOutOfRange(cfg.sigma));
    }
    let h = state.grid().h_min();
    Ok(cfg.sigma * h * h * cfg.scheme.step_factor())
}

/// Reusable stepping workspace.
#[derive(Debug, Clone)]
pub struct Stepper {
    cfg: StepperConfig,
    k: [Vec<f64>; 4],
    stage_u: Vec<f64>,
    stage_ghost: Vec<f64>,
    // RKL2 history: Y_{j-1} and Y_{j-2}
    y1: Vec<f64>,
    y2: Vec<f64>,
    last_vtilde_max: f64,
}

impl Stepper {
    pub fn new(cfg: StepperConfig) -> Result<Self, FlowError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            k: Default::default(),
            stage_u: Vec::new(),
            stage_ghost: Vec::new(),
            y1: Vec::new(),
            y2: Vec::new(),
            last_vtilde_max: 1.0,
        })
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    /// `max ṽ` of the state at the start of the last step.
    pub fn last_vtilde_max(&self) -> f64 {
        self.last_vtilde_max
    }

    fn ensure_len(&mut self, n: usize, ng: usize) {
        for k in self.k.iter_mut() {
            k.resize(n, 0.0);
        }
        self.stage_u.resize(n, 0.0);
        self.stage_ghost.resize(ng, 0.0);
        if matches!(self.cfg.scheme, Scheme::Rkl2 { .. }) {
            self.y1.resize(n, 0.0);
            self.y2.resize(n, 0.0);
        }
    }

    fn check(&self, state: &GraphState, stats: RhsStats, first_stage: bool) -> Result<(), FlowError> {
        let grid = state.grid();
        if let Some(node) = stats.first_nonfinite {
            let p = grid.node(node).pos;
            return Err(FlowError::NonFinite {
                t: state.t,
                node,
                y: p[0],
                r: p[1],
            });
        }
        if first_stage && stats.vtilde_max > self.cfg.vtilde_cap {
            let node = stats.vtilde_argmax;
            let p = grid.node(node).pos;
            return Err(FlowError::GradientBlowUp {
                t: state.t,
                node,
                y: p[0],
                r: p[1],
                vtilde: stats.vtilde_max,
            });
        }
        Ok(())
    }

    /// `stage_u = u + a * k[src]`, ghosts refreshed, then `k[dst] = f(stage_u)`.
    fn stage(&mut self, state: &GraphState, a: f64, src: usize, dst: usize) -> Result<(), FlowError> {
        let grid = state.grid();
        for ((s, &u), &k) in self.stage_u.iter_mut().zip(&state.u).zip(&self.k[src]) {
            *s = u + a * k;
        }
        fill_ghosts(grid, &self.stage_u, &mut self.stage_ghost, self.cfg.ghost_rule);
        let stats = rhs_into(grid, &self.stage_u, &self.stage_ghost, &mut self.k[dst], self.cfg.parallel);
        self.check(state, stats, false)
    }

    /// Advances `state` by `dt`. On error the state is left untouched.
    pub fn advance(&mut self, state: &mut GraphState, dt: f64) -> Result<(), FlowError> {
        let n = state.u.len();
        self.ensure_len(n, state.ghost.len());
        let grid = state.grid_arc().clone();
        let stats = rhs_into(&grid, &state.u, &state.ghost, &mut self.k[0], self.cfg.parallel);
        self.last_vtilde_max = stats.vtilde_max;
        self.check(state, stats, true)?;

        match self.cfg.scheme {
            Scheme::Euler => {
                for ((s, &u), &k) in self.stage_u.iter_mut().zip(&state.u).zip(&self.k[0]) {
                    *s = u + dt * k;
                }
            }
            Scheme::Rk4 => {
                self.stage(state, 0.5 * dt, 0, 1)?;
                self.stage(state, 0.5 * dt, 1, 2)?;
                self.stage(state, dt, 2, 3)?;
                let [k1, k2, k3, k4] = &self.k;
                for (i, s) in self.stage_u.iter_mut().enumerate() {
                    *s = state.u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
            Scheme::Rkl2 { stages } => self.rkl2(state, dt, stages)?,
        }

        if let Some(node) = self.stage_u.iter().position(|x| !x.is_finite()) {
            let p = grid.node(node).pos;
            return Err(FlowError::NonFinite {
                t: state.t,
                node,
                y: p[0],
                r: p[1],
            });
        }
        std::mem::swap(&mut state.u, &mut self.stage_u);
        fill_ghosts(&grid, &state.u, &mut state.ghost, self.cfg.ghost_rule);
        state.t += dt;
        Ok(())
    }
}

impl Stepper {
    /// Runge-Kutta-Legendre recursion (Meyer, Balsara and Aslam). Expects
    /// `k[0] = L(u)`; leaves the result in `stage_u`.
    fn rkl2(&mut self, state: &GraphState, dt: f64, s: usize) -> Result<(), FlowError> {
        let grid = state.grid_arc().clone();
        let sf = s as f64;
        let w1 = 4.0 / (sf * sf + sf - 2.0);
        let b = |j: usize| {
            if j <= 2 {
                1.0 / 3.0
            } else {
                let j = j as f64;
                (j * j + j - 2.0) / (2.0 * j * (j + 1.0))
            }
        };
        let mu1 = b(1) * w1;
        self.y2.copy_from_slice(&state.u);
        for ((y, &u), &k) in self.y1.iter_mut().zip(&state.u).zip(&self.k[0]) {
            *y = u + mu1 * dt * k;
        }
        for j in 2..=s {
            fill_ghosts(&grid, &self.y1, &mut self.stage_ghost, self.cfg.ghost_rule);
            let stats = rhs_into(&grid, &self.y1, &self.stage_ghost, &mut self.k[1], self.cfg.parallel);
            self.check(state, stats, false)?;
            let jf = j as f64;
            let mu = (2.0 * jf - 1.0) / jf * b(j) / b(j - 1);
            let nu = -(jf - 1.0) / jf * b(j) / b(j - 2);
            let mut_ = mu * w1;
            let gam = -(1.0 - b(j - 1)) * mut_;
            let c0 = 1.0 - mu - nu;
            for i in 0..self.stage_u.len() {
                self.stage_u[i] = mu * self.y1[i]
                    + nu * self.y2[i]
                    + c0 * state.u[i]
                    + mut_ * dt * self.k[1][i]
                    + gam * dt * self.k[0][i];
            }
            // rotate: y2 <- y1 <- new
            std::mem::swap(&mut self.y2, &mut self.y1);
            std::mem::swap(&mut self.y1, &mut self.stage_u);
        }
        std::mem::swap(&mut self.stage_u, &mut self.y1);
        Ok(())
    }
}

/// One step of size [`cfl_dt`].
pub fn step(state: &GraphState, cfg: &StepperConfig) -> Result<GraphState, FlowError> {
    let dt = cfl_dt(state, cfg)?;
    let mut stepper = Stepper::new(cfg.clone())?;
    let mut next = state.clone();
    stepper.advance(&mut next, dt)?;
    Ok(next)
}
