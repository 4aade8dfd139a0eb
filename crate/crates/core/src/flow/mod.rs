//! The graphical flow: the angle field `u` over the cross-section and the
//! quasilinear equation it satisfies,
//!
//! ```text
//! ∂u/∂t = g^{ij} D_ij u + (D_r u / r)(1 + 1/ṽ²) = -H ṽ / r,   γ · Du = 0 on ∂Ω,
//! ```
//!
//! with `g_ij = δ_ij + r² D_i u D_j u` and `ṽ = √(1 + r²|Du|²)`.
//!
//! Half-plane vectors are always stored as `(y, r)` pairs. In one dimension
//! the `y` slot is zero, so `Du = (0, u')` and the same pointwise formulas
//! serve both layouts.

use std::sync::Arc;

use crate::error::FlowError;
use crate::geometry::{DomainGrid, HalfPlanePoint};

mod run;
mod stencil;
mod stepper;

pub use run::{run_flow, FlowObserver, NoObserver, RunOutcome, RunSettings, Termination};
pub use stencil::{
    apply_neumann, apply_neumann_with, boundary_normal_derivative, derivatives, gradient,
    GhostRule, NodeDerivatives,
};
pub use stepper::{cfl_dt, step, Scheme, Stepper, StepperConfig};
pub(crate) use stencil::{fill_ghosts, rhs_into};

/// Angle field on a grid at one instant.
#[derive(Debug, Clone)]
pub struct GraphState {
    grid: Arc<DomainGrid>,
    /// One value per grid node.
    pub u: Vec<f64>,
    /// Exterior layer: `[u(r0 - h), u(r1 + h)]` in 1D, the row `s = 1 + Δs/2` in 2D.
    pub ghost: Vec<f64>,
    pub t: f64,
}

impl GraphState {
    /// Wraps `u` and fills the ghost layer from the Neumann condition.
    pub fn new(grid: Arc<DomainGrid>, u: Vec<f64>) -> Result<Self, FlowError> {
        if u.len() != grid.len() {
            return Err(FlowError::LengthMismatch {
                expected: grid.len(),
                got: u.len(),
            });
        }
        let ghost = vec![0.0; grid.ghost_len()];
        let mut state = Self {
            grid,
            u,
            ghost,
            t: 0.0,
        };
        apply_neumann(&mut state);
        Ok(state)
    }

    /// Samples `f(node)` at every node.
    pub fn from_fn(grid: Arc<DomainGrid>, f: impl Fn(&crate::geometry::NodeGeometry) -> f64) -> Self {
        let u = grid.nodes().iter().map(f).collect();
        Self::new(grid, u).expect("length matches by construction")
    }

    pub fn constant(grid: Arc<DomainGrid>, value: f64) -> Self {
        let n = grid.len();
        Self::new(grid, vec![value; n]).expect("length matches by construction")
    }

    pub fn grid(&self) -> &DomainGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<DomainGrid> {
        &self.grid
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.u
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
    }

    /// `max u - min u`.
    pub fn oscillation(&self) -> f64 {
        let (lo, hi) = self.min_max();
        hi - lo
    }

    /// Same grid and time, field mapped pointwise; ghosts are recomputed.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        out.u.iter_mut().for_each(|x| *x = f(*x));
        apply_neumann(&mut out);
        out
    }
}

/// `ṽ = √(1 + r²|Du|²)`.
#[inline]
pub fn vtilde_at(r: f64, du: HalfPlanePoint) -> f64 {
    (1.0 + r * r * (du[0] * du[0] + du[1] * du[1])).sqrt()
}

/// `g^{ij} = δ_ij - r² D_i u D_j u / ṽ²`, the inverse of `δ_ij + r² D_i u D_j u`.
#[inline]
pub fn inverse_metric_at(r: f64, du: HalfPlanePoint) -> [[f64; 2]; 2] {
    let q = [r * du[0], r * du[1]];
    let vt2 = 1.0 + q[0] * q[0] + q[1] * q[1];
    // (ṽ² δ - q qᵀ) / ṽ², written without the cancellation in 1 - q²/ṽ²
    let off = -q[0] * q[1] / vt2;
    [[(1.0 + q[1] * q[1]) / vt2, off], [off, (1.0 + q[0] * q[0]) / vt2]]
}

/// `g_ij = δ_ij + r² D_i u D_j u`.
#[inline]
pub fn metric_at(r: f64, du: HalfPlanePoint) -> [[f64; 2]; 2] {
    let q = [r * du[0], r * du[1]];
    [[1.0 + q[0] * q[0], q[0] * q[1]], [q[0] * q[1], 1.0 + q[1] * q[1]]]
}

/// Right-hand side of the graphical equation from pointwise derivatives.
#[inline]
pub fn rhs_at(r: f64, du: HalfPlanePoint, hess: &[[f64; 2]; 2]) -> f64 {
    let gi = inverse_metric_at(r, du);
    let vt2 = 1.0 + r * r * (du[0] * du[0] + du[1] * du[1]);
    let principal = gi[0][0] * hess[0][0] + 2.0 * gi[0][1] * hess[0][1] + gi[1][1] * hess[1][1];
    principal + du[1] / r * (1.0 + 1.0 / vt2)
}

/// Per-node `ṽ`, `v = ṽ / r` and `Q = log v`.
#[derive(Debug, Clone, PartialEq)]
pub struct VtildeFields {
    pub vtilde: Vec<f64>,
    pub v: Vec<f64>,
    pub q: Vec<f64>,
}

pub fn vtilde(grid: &DomainGrid, du: &[HalfPlanePoint]) -> VtildeFields {
    let vtilde: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(du)
        .map(|(n, &d)| vtilde_at(n.r, d))
        .collect();
    let v: Vec<f64> = vtilde.iter().zip(grid.nodes()).map(|(vt, n)| vt / n.r).collect();
    let q = v.iter().map(|x| x.ln()).collect();
    VtildeFields { vtilde, v, q }
}

pub fn inverse_metric(grid: &DomainGrid, du: &[HalfPlanePoint]) -> Vec<[[f64; 2]; 2]> {
    grid.nodes()
        .iter()
        .zip(du)
        .map(|(n, &d)| inverse_metric_at(n.r, d))
        .collect()
}

/// Per-node right-hand side of the flow. Ghosts must be current.
pub fn flow_rhs(state: &GraphState) -> Vec<f64> {
    let mut out = vec![0.0; state.u.len()];
    stencil::rhs_into(state.grid(), &state.u, &state.ghost, &mut out, false);
    out
}

/// `H = -(r/ṽ) ∂u/∂t`.
pub fn mean_curvature(state: &GraphState) -> Vec<f64> {
    GeomFields::compute(state).h
}

/// Derived geometric fields of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct GeomFields {
    pub du: Vec<HalfPlanePoint>,
    pub vtilde: Vec<f64>,
    pub ginv: Vec<[[f64; 2]; 2]>,
    /// `∂u/∂t` as given by the flow.
    pub rhs: Vec<f64>,
    pub h: Vec<f64>,
    /// `w = r / ṽ = ⟨rτ, ν⟩`.
    pub w: Vec<f64>,
    /// `Q = log(ṽ / r)`.
    pub q: Vec<f64>,
}

impl GeomFields {
    pub fn compute(state: &GraphState) -> Self {
        let grid = state.grid();
        let n = grid.len();
        let mut out = GeomFields {
            du: Vec::with_capacity(n),
            vtilde: Vec::with_capacity(n),
            ginv: Vec::with_capacity(n),
            rhs: Vec::with_capacity(n),
            h: Vec::with_capacity(n),
            w: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
        };
        for (idx, node) in grid.nodes().iter().enumerate() {
            let d = derivatives(state, idx);
            let vt = vtilde_at(node.r, d.du);
            let rhs = rhs_at(node.r, d.du, &d.hess);
            out.du.push(d.du);
            out.vtilde.push(vt);
            out.ginv.push(inverse_metric_at(node.r, d.du));
            out.rhs.push(rhs);
            out.h.push(-(node.r / vt) * rhs);
            out.w.push(node.r / vt);
            out.q.push((vt / node.r).ln());
        }
        out
    }
}

/// A vector in the ambient space `ℝ^{n+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbientVector {
    dim: usize,
    c: [f64; 3],
}

impl AmbientVector {
    pub fn new2(x: f64, y: f64) -> Self {
        Self {
            dim: 2,
            c: [x, y, 0.0],
        }
    }

    pub fn new3(x: f64, y: f64, z: f64) -> Self {
        Self { dim: 3, c: [x, y, z] }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.c[..self.dim]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.c.iter().zip(other.c.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            c: [self.c[0] * s, self.c[1] * s, self.c[2] * s],
        }
    }

    fn add_scaled(&self, other: &Self, s: f64) -> Self {
        Self {
            dim: self.dim,
            c: [
                self.c[0] + s * other.c[0],
                self.c[1] + s * other.c[1],
                self.c[2] + s * other.c[2],
            ],
        }
    }

    fn cross(&self, o: &Self) -> Self {
        let (a, b) = (self.c, o.c);
        Self::new3(
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        )
    }
}

/// Unit radial field `r̂` and rotational field `τ` at angle `u`.
fn rotation_frame(dim: usize, u: f64) -> (AmbientVector, AmbientVector) {
    let (s, c) = u.sin_cos();
    if dim == 1 {
        (AmbientVector::new2(c, s), AmbientVector::new2(-s, c))
    } else {
        (AmbientVector::new3(0.0, c, s), AmbientVector::new3(0.0, -s, c))
    }
}

/// Ambient position `F(x) = y + r (cos u e_n + sin u e_{n+1})` of a node.
pub fn embed(state: &GraphState, node: usize) -> AmbientVector {
    let geo = state.grid().node(node);
    embed_point(state.grid().dimension(), geo.pos, state.u[node])
}

pub fn embed_point(dim: usize, pos: HalfPlanePoint, u: f64) -> AmbientVector {
    let (rhat, _) = rotation_frame(dim, u);
    let p = rhat.scale(pos[1]);
    if dim == 1 {
        p
    } else {
        AmbientVector::new3(pos[0], p.c[1], p.c[2])
    }
}

/// Rotational unit field `τ` evaluated at `F(x)`.
pub fn rotational_field(state: &GraphState, node: usize) -> AmbientVector {
    rotation_frame(state.grid().dimension(), state.u[node]).1
}

/// Unit normal built from the tangent frame, oriented so `⟨ν, τ⟩ > 0`.
pub fn normal_vector(state: &GraphState, node: usize) -> AmbientVector {
    let d = derivatives(state, node);
    normal_from_gradient(
        state.grid().dimension(),
        state.grid().node(node).r,
        state.u[node],
        d.du,
    )
}

pub fn normal_from_gradient(dim: usize, r: f64, u: f64, du: HalfPlanePoint) -> AmbientVector {
    let (rhat, tau) = rotation_frame(dim, u);
    // F_r = r̂ + r D_r u τ
    let f_r = rhat.add_scaled(&tau, r * du[1]);
    let nu = if dim == 1 {
        AmbientVector::new2(-f_r.c[1], f_r.c[0])
    } else {
        let f_y = AmbientVector::new3(1.0, 0.0, 0.0).add_scaled(&tau, r * du[0]);
        f_y.cross(&f_r)
    };
    let nu = nu.scale(1.0 / nu.norm());
    if nu.dot(&tau) < 0.0 {
        nu.scale(-1.0)
    } else {
        nu
    }
}

#[cfg(test)]
mod tests;
