//! Discrete operators: ghost layer, mapped central differences, and the
//! chain rule back to half-plane coordinates.

use rayon::prelude::*;

use super::{rhs_at, vtilde_at, GraphState};
use crate::geometry::{DomainGrid, HalfPlanePoint, Layout, NodeGeometry};

/// How the ghost layer is filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GhostRule {
    /// Discrete `γ · Du = 0` on the boundary.
    #[default]
    Neumann,
    /// Deliberately inconsistent ghosts, used to check that the invariant
    /// battery notices a broken boundary rule.
    #[doc(hidden)]
    Faulty,
}

/// Refreshes the ghost layer so the discrete normal derivative vanishes.
pub fn apply_neumann(state: &mut GraphState) {
    apply_neumann_with(state, GhostRule::Neumann)
}

pub fn apply_neumann_with(state: &mut GraphState, rule: GhostRule) {
    let grid = state.grid_arc().clone();
    fill_ghosts(&grid, &state.u, &mut state.ghost, rule);
}

pub(crate) fn fill_ghosts(grid: &DomainGrid, u: &[f64], ghost: &mut [f64], rule: GhostRule) {
    match grid.layout() {
        Layout::Interval { n, .. } => {
            // centred difference at the end node: mirror image
            ghost[0] = u[1];
            ghost[1] = u[n - 2];
        }
        Layout::Polar { ns, nphi, ds, dphi } => {
            let row = |j: usize| &u[j * nphi..(j + 1) * nphi];
            let (last, prev) = (row(ns - 1), row(ns - 2));
            for (k, (g, b)) in ghost.iter_mut().zip(grid.boundary()).enumerate() {
                let (kp, km) = ((k + 1) % nphi, (k + nphi - 1) % nphi);
                let [alpha, beta] = b.neumann;
                // tangential derivative extrapolated to the face s = 1
                let dphi_last = (last[kp] - last[km]) / (2.0 * dphi);
                let dphi_prev = (prev[kp] - prev[km]) / (2.0 * dphi);
                let dphi_face = 1.5 * dphi_last - 0.5 * dphi_prev;
                *g = last[k] - ds * (beta / alpha) * dphi_face;
            }
        }
    }
    if rule == GhostRule::Faulty {
        let h = grid.h_min();
        ghost.iter_mut().for_each(|g| *g += h);
    }
}

/// Discrete `γ · Du` at each boundary location, evaluated from the current
/// ghosts (1D: centred difference at the end node, 2D: face difference).
pub fn boundary_normal_derivative(state: &GraphState) -> Vec<f64> {
    let grid = state.grid();
    let u = &state.u;
    match grid.layout() {
        Layout::Interval { n, h } => vec![
            -(u[1] - state.ghost[0]) / (2.0 * h),
            (state.ghost[1] - u[n - 2]) / (2.0 * h),
        ],
        Layout::Polar { ns, nphi, ds, dphi } => {
            let row = |j: usize| &u[j * nphi..(j + 1) * nphi];
            let (last, prev) = (row(ns - 1), row(ns - 2));
            grid.boundary()
                .iter()
                .enumerate()
                .map(|(k, b)| {
                    let (kp, km) = ((k + 1) % nphi, (k + nphi - 1) % nphi);
                    let dp = 1.5 * (last[kp] - last[km]) / (2.0 * dphi)
                        - 0.5 * (prev[kp] - prev[km]) / (2.0 * dphi);
                    let ds_face = (state.ghost[k] - last[k]) / ds;
                    b.neumann[0] * ds_face + b.neumann[1] * dp
                })
                .collect()
        }
    }
}

/// Half-plane gradient and Hessian of `u` at a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeDerivatives {
    pub du: HalfPlanePoint,
    pub hess: [[f64; 2]; 2],
}

#[inline]
fn value_polar(u: &[f64], ghost: &[f64], ns: usize, nphi: usize, j: isize, k: usize) -> f64 {
    if j < 0 {
        // across the pole: (-s, φ) is the node (s, φ + π)
        u[(k + nphi / 2) % nphi]
    } else if j as usize == ns {
        ghost[k]
    } else {
        u[j as usize * nphi + k]
    }
}

#[inline]
fn derivs_interval(u: &[f64], ghost: &[f64], n: usize, h: f64, j: usize) -> NodeDerivatives {
    let left = if j == 0 { ghost[0] } else { u[j - 1] };
    let right = if j + 1 == n { ghost[1] } else { u[j + 1] };
    let d1 = (right - left) / (2.0 * h);
    let d2 = (right - 2.0 * u[j] + left) / (h * h);
    NodeDerivatives {
        du: [0.0, d1],
        hess: [[0.0, 0.0], [0.0, d2]],
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn derivs_polar(
    u: &[f64],
    ghost: &[f64],
    node: &NodeGeometry,
    ns: usize,
    nphi: usize,
    ds: f64,
    dphi: f64,
    idx: usize,
) -> NodeDerivatives {
    let (j, k) = ((idx / nphi) as isize, idx % nphi);
    let (kp, km) = ((k + 1) % nphi, (k + nphi - 1) % nphi);
    let at = |jj: isize, kk: usize| value_polar(u, ghost, ns, nphi, jj, kk);
    let c = u[idx];
    let (sp, sm) = (at(j + 1, k), at(j - 1, k));
    let (pp, pm) = (at(j, kp), at(j, km));
    let us = (sp - sm) / (2.0 * ds);
    let up = (pp - pm) / (2.0 * dphi);
    let uss = (sp - 2.0 * c + sm) / (ds * ds);
    let upp = (pp - 2.0 * c + pm) / (dphi * dphi);
    let usp = (at(j + 1, kp) - at(j + 1, km) - at(j - 1, kp) + at(j - 1, km)) / (4.0 * ds * dphi);

    let inv = &node.metric_inv;
    let du = [
        inv[0][0] * us + inv[1][0] * up,
        inv[0][1] * us + inv[1][1] * up,
    ];
    let [xss, xsp, xpp] = &node.map_hessian;
    let dot = |x: &HalfPlanePoint| du[0] * x[0] + du[1] * x[1];
    let m = [[uss - dot(xss), usp - dot(xsp)], [usp - dot(xsp), upp - dot(xpp)]];
    let mut hess = [[0.0; 2]; 2];
    for (i, row) in hess.iter_mut().enumerate() {
        for (l, h) in row.iter_mut().enumerate() {
            *h = inv[0][i] * (m[0][0] * inv[0][l] + m[0][1] * inv[1][l])
                + inv[1][i] * (m[1][0] * inv[0][l] + m[1][1] * inv[1][l]);
        }
    }
    NodeDerivatives { du, hess }
}

#[inline]
fn derivs_raw(grid: &DomainGrid, u: &[f64], ghost: &[f64], idx: usize) -> NodeDerivatives {
    match grid.layout() {
        Layout::Interval { n, h } => derivs_interval(u, ghost, n, h, idx),
        Layout::Polar { ns, nphi, ds, dphi } => {
            derivs_polar(u, ghost, grid.node(idx), ns, nphi, ds, dphi, idx)
        }
    }
}

/// Second-order central derivatives at one node. Ghosts must be current.
pub fn derivatives(state: &GraphState, idx: usize) -> NodeDerivatives {
    derivs_raw(state.grid(), &state.u, &state.ghost, idx)
}

/// `Du` at every node.
pub fn gradient(state: &GraphState) -> Vec<HalfPlanePoint> {
    (0..state.u.len()).map(|i| derivatives(state, i).du).collect()
}

/// Extremes seen while evaluating the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RhsStats {
    pub vtilde_max: f64,
    pub vtilde_argmax: usize,
    pub first_nonfinite: Option<usize>,
}

impl RhsStats {
    fn empty() -> Self {
        Self {
            vtilde_max: 0.0,
            vtilde_argmax: 0,
            first_nonfinite: None,
        }
    }

    fn merge(self, other: Self) -> Self {
        let (vtilde_max, vtilde_argmax) = if other.vtilde_max > self.vtilde_max {
            (other.vtilde_max, other.vtilde_argmax)
        } else {
            (self.vtilde_max, self.vtilde_argmax)
        };
        Self {
            vtilde_max,
            vtilde_argmax,
            first_nonfinite: self.first_nonfinite.or(other.first_nonfinite),
        }
    }
}

fn rhs_chunk(grid: &DomainGrid, u: &[f64], ghost: &[f64], start: usize, out: &mut [f64]) -> RhsStats {
    let mut stats = RhsStats::empty();
    for (off, o) in out.iter_mut().enumerate() {
        let idx = start + off;
        let r = grid.node(idx).r;
        let d = derivs_raw(grid, u, ghost, idx);
        let vt = vtilde_at(r, d.du);
        let val = rhs_at(r, d.du, &d.hess);
        *o = val;
        if vt > stats.vtilde_max {
            stats.vtilde_max = vt;
            stats.vtilde_argmax = idx;
        }
        if !val.is_finite() && stats.first_nonfinite.is_none() {
            stats.first_nonfinite = Some(idx);
        }
    }
    stats
}

/// Evaluates the flow right-hand side into `out`.
///
/// The parallel path splits the nodes into fixed chunks and merges the
/// per-chunk statistics in chunk order, so the result is identical to the
/// sequential path.
pub(crate) fn rhs_into(grid: &DomainGrid, u: &[f64], ghost: &[f64], out: &mut [f64], parallel: bool) -> RhsStats {
    if !parallel {
        return rhs_chunk(grid, u, ghost, 0, out);
    }
    const CHUNK: usize = 256;
    let stats: Vec<RhsStats> = out
        .par_chunks_mut(CHUNK)
        .enumerate()
        .map(|(c, chunk)| rhs_chunk(grid, u, ghost, c * CHUNK, chunk))
        .collect();
    stats.into_iter().fold(RhsStats::empty(), RhsStats::merge)
}
