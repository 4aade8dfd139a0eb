//! Manufactured solutions and the closed-form operator oracle.
//!
//! The oracle evaluates the right side of the graphical equation from
//! hand-differentiated derivatives of a closed-form field. It shares no code
//! with the stencils in [`crate::flow`].

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::error::{FlowError, GeometryError};
use crate::flow::{fill_ghosts, rhs_into, GhostRule, GraphState};
use crate::geometry::{build_grid, DomainGrid, HalfPlanePoint, ProfileCurve, Resolution};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MmsError {
    #[error("levels ≥ 3, got {0}")]
    TooFewLevels(usize),
    #[error("radial fields need an interval or circle profile")]
    UnsupportedProfile,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// Value, derivatives and time derivative of a field at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub du: HalfPlanePoint,
    pub hess: [[f64; 2]; 2],
    pub dt: f64,
}

/// A closed-form space-time field with hand-coded derivatives.
pub trait AnalyticField: Send + Sync + fmt::Debug {
    fn jet(&self, p: HalfPlanePoint, t: f64) -> Jet;

    fn value(&self, p: HalfPlanePoint, t: f64) -> f64 {
        self.jet(p, t).value
    }
}

/// `u ≡ c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl AnalyticField for Constant {
    fn jet(&self, _p: HalfPlanePoint, _t: f64) -> Jet {
        Jet {
            value: self.0,
            du: [0.0, 0.0],
            hess: [[0.0; 2]; 2],
            dt: 0.0,
        }
    }
}

/// `u = y²` (first half-plane coordinate squared).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareY;

impl AnalyticField for SquareY {
    fn jet(&self, p: HalfPlanePoint, _t: f64) -> Jet {
        Jet {
            value: p[0] * p[0],
            du: [2.0 * p[0], 0.0],
            hess: [[2.0, 0.0], [0.0, 0.0]],
            dt: 0.0,
        }
    }
}

/// Where a radial field measures its normalized coordinate `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialFrame {
    /// `s = (r - r0) / (r1 - r0)`.
    Interval { r0: f64, r1: f64 },
    /// `s = |x - c| / a`.
    Disk { center: HalfPlanePoint, a: f64 },
}

impl RadialFrame {
    pub fn for_profile(profile: &ProfileCurve) -> Result<Self, MmsError> {
        match *profile {
            ProfileCurve::Interval { r0, r1 } => Ok(RadialFrame::Interval { r0, r1 }),
            ProfileCurve::Circle { center, a } => Ok(RadialFrame::Disk { center, a }),
            ProfileCurve::Star { .. } => Err(MmsError::UnsupportedProfile),
        }
    }
}

/// `u = amp (1 + growth t) cos(k π s)`. Integer `k` gives zero normal slope
/// at `s = 1`; in a disk the field is smooth through the centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialCos {
    pub frame: RadialFrame,
    pub amp: f64,
    pub k: f64,
    pub growth: f64,
}

impl AnalyticField for RadialCos {
    fn jet(&self, p: HalfPlanePoint, t: f64) -> Jet {
        let w = self.k * std::f64::consts::PI;
        let amp = self.amp * (1.0 + self.growth * t);
        match self.frame {
            RadialFrame::Interval { r0, r1 } => {
                let l = r1 - r0;
                let a = w * (p[1] - r0) / l;
                let (sn, cs) = a.sin_cos();
                Jet {
                    value: amp * cs,
                    du: [0.0, -amp * w / l * sn],
                    hess: [[0.0, 0.0], [0.0, -amp * w * w / (l * l) * cs]],
                    dt: self.amp * self.growth * cs,
                }
            }
            RadialFrame::Disk { center, a } => {
                let d = [p[0] - center[0], p[1] - center[1]];
                let rho = d[0].hypot(d[1]);
                let (sn, cs) = (w * rho / a).sin_cos();
                let g1 = -amp * w / a * sn;
                let g2 = -amp * w * w / (a * a) * cs;
                // g'(ρ)/ρ, continuous at the centre
                let g1_over_rho = if rho > 0.0 { g1 / rho } else { g2 };
                let n = if rho > 0.0 { [d[0] / rho, d[1] / rho] } else { [0.0, 0.0] };
                let mut hess = [[0.0; 2]; 2];
                for (i, row) in hess.iter_mut().enumerate() {
                    for (j, h) in row.iter_mut().enumerate() {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        *h = g2 * n[i] * n[j] + g1_over_rho * (delta - n[i] * n[j]);
                    }
                }
                Jet {
                    value: amp * cs,
                    du: [g1 * n[0], g1 * n[1]],
                    hess,
                    dt: self.amp * self.growth * cs,
                }
            }
        }
    }
}

/// Right side of the graphical equation for `field` at `p`, from the
/// closed-form derivatives.
pub fn oracle_operator(field: &dyn AnalyticField, p: HalfPlanePoint, t: f64) -> f64 {
    oracle_from_jet(p[1], &field.jet(p, t))
}

fn oracle_from_jet(r: f64, j: &Jet) -> f64 {
    let (uy, ur) = (j.du[0], j.du[1]);
    let r2 = r * r;
    let vt2 = 1.0 + r2 * (uy * uy + ur * ur);
    let gyy = 1.0 - r2 * uy * uy / vt2;
    let grr = 1.0 - r2 * ur * ur / vt2;
    let gyr = -r2 * uy * ur / vt2;
    gyy * j.hess[0][0] + 2.0 * gyr * j.hess[0][1] + grr * j.hess[1][1] + ur / r * (1.0 + 1.0 / vt2)
}

/// A closed-form solution of the forced equation `∂u/∂t = N(u) + f` with
/// `f = ∂u*/∂t - N(u*)`.
#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    pub u_star: Arc<dyn AnalyticField>,
    pub t_final: f64,
    pub description: String,
}

impl ManufacturedCase {
    pub fn new(u_star: Arc<dyn AnalyticField>, t_final: f64, description: impl Into<String>) -> Self {
        Self {
            u_star,
            t_final,
            description: description.into(),
        }
    }

    pub fn forcing(&self, p: HalfPlanePoint, t: f64) -> f64 {
        let j = self.u_star.jet(p, t);
        j.dt - oracle_from_jet(p[1], &j)
    }

    /// The steady 1D cosine case on `[r0, r1]`.
    pub fn steady_cos_1d(r0: f64, r1: f64, t_final: f64) -> Self {
        let f = RadialCos {
            frame: RadialFrame::Interval { r0, r1 },
            amp: 1.0,
            k: 1.0,
            growth: 0.0,
        };
        Self::new(Arc::new(f), t_final, format!("cos(pi (r - {r0}) / {}), steady", r1 - r0))
    }

    /// A growing radial cosine on a round cross-section.
    pub fn radial_disk(center: HalfPlanePoint, a: f64, amp: f64, t_final: f64) -> Self {
        let f = RadialCos {
            frame: RadialFrame::Disk { center, a },
            amp,
            k: 1.0,
            growth: 1.0,
        };
        Self::new(Arc::new(f), t_final, format!("(1 + t) {amp} cos(pi |x - c| / {a})"))
    }
}

/// Consecutive-level order estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    Value(f64),
    /// Both errors vanish.
    Exact,
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Value(v) => write!(f, "{v:?}"),
            Order::Exact => f.write_str("exact"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelResult {
    pub resolution: Resolution,
    pub h_min: f64,
    pub steps: usize,
    pub error: f64,
    /// Order against the previous level; `None` on the first.
    pub order: Option<Order>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub levels: Vec<LevelResult>,
}

impl ConvergenceReport {
    /// Level pairs `(i, i + 1, order)` whose order lies outside `[lo, hi]`.
    pub fn out_of_window(&self, lo: f64, hi: f64) -> Vec<(usize, usize, f64)> {
        self.levels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| match l.order {
                Some(Order::Value(p)) if !(lo..=hi).contains(&p) => Some((i - 1, i, p)),
                _ => None,
            })
            .collect()
    }
}

/// Resolution of level `i` when refining `base` by halving.
pub fn refine(base: Resolution, i: usize) -> Resolution {
    match base {
        Resolution::Interval(n) => Resolution::Interval((n - 1) * (1 << i) + 1),
        Resolution::Polar { ns, nphi } => Resolution::Polar {
            ns: ns << i,
            nphi: nphi << i,
        },
    }
}

/// L∞ error of one forced run at a fixed grid.
pub fn forced_run(case: &ManufacturedCase, grid: Arc<DomainGrid>, sigma: f64) -> Result<(f64, usize), MmsError> {
    if !(sigma > 0.0 && sigma <= 0.5) {
        return Err(FlowError::SigmaOutOfRange(sigma).into());
    }
    let n = grid.len();
    let pos: Vec<HalfPlanePoint> = grid.nodes().iter().map(|nd| nd.pos).collect();
    let mut state = GraphState::new(grid.clone(), pos.iter().map(|&p| case.u_star.value(p, 0.0)).collect())?;
    let h = grid.h_min();
    let dt = sigma * h * h;
    let mut k = vec![0.0; n];
    let mut steps = 0;
    let t_eps = 1e-12 * case.t_final;
    while case.t_final - state.t > t_eps {
        let step = dt.min(case.t_final - state.t);
        let stats = rhs_into(&grid, &state.u, &state.ghost, &mut k, false);
        if let Some(node) = stats.first_nonfinite {
            let p = pos[node];
            return Err(FlowError::NonFinite { t: state.t, node, y: p[0], r: p[1] }.into());
        }
        for ((u, &kk), &p) in state.u.iter_mut().zip(&k).zip(&pos) {
            *u += step * (kk + case.forcing(p, state.t));
        }
        fill_ghosts(&grid, &state.u, &mut state.ghost, GhostRule::Neumann);
        state.t += step;
        steps += 1;
    }
    let err = state
        .u
        .iter()
        .zip(&pos)
        .map(|(&u, &p)| (u - case.u_star.value(p, state.t)).abs())
        .fold(0.0, f64::max);
    Ok((err, steps))
}

/// Runs the forced equation on `levels` successively halved meshes and
/// reports L∞ errors at `case.t_final` with consecutive orders.
pub fn convergence_study(
    case: &ManufacturedCase,
    profile: &ProfileCurve,
    base: Resolution,
    levels: usize,
    sigma: f64,
) -> Result<ConvergenceReport, MmsError> {
    if levels < 3 {
        return Err(MmsError::TooFewLevels(levels));
    }
    let mut out: Vec<LevelResult> = Vec::with_capacity(levels);
    for i in 0..levels {
        let resolution = refine(base, i);
        let grid = Arc::new(build_grid(profile, resolution)?);
        let (error, steps) = forced_run(case, grid.clone(), sigma)?;
        let order = out.last().map(|prev| {
            if prev.error == 0.0 && error == 0.0 {
                Order::Exact
            } else {
                Order::Value((prev.error / error).log2())
            }
        });
        out.push(LevelResult {
            resolution,
            h_min: grid.h_min(),
            steps,
            error,
            order,
        });
    }
    Ok(ConvergenceReport { levels: out })
}
