//! Monitored integrals and extrema along a run.
//!
//! All spatial integrals use the grid quadrature weights (`∫ φ dx ≈ Σ φ_i
//! vol_i`); integrals against the surface measure `dμ = ṽ dx` carry the
//! extra factor `ṽ`. Time integrals are trapezoidal over the sampled rows.

use std::f64::consts::SQRT_2;

use thiserror::Error;

use crate::flow::{normal_from_gradient, GeomFields, GraphState};
use crate::geometry::{sigma_rotational_curvature, Layout};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("boundary curvature residual is only available on 1D grids")]
    RequiresInterval,
    #[error("series is empty")]
    EmptySeries,
}

/// One time sample of the monitored quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRow {
    pub step: usize,
    pub t: f64,
    /// `|M_t| = ∫ ṽ dx`.
    pub area: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub vtilde_max: f64,
    pub q_max: f64,
    /// `max H² v²` with `v = ṽ / r`.
    pub h2v2_max: f64,
    /// `∫ H r dx`, which equals `∫ H / v dμ`.
    pub flux_hr: f64,
    /// `∫ |H| r dx`, the natural scale for `flux_hr`.
    pub flux_abs_hr: f64,
    /// `∫ |τ^⊤|² dμ`.
    pub tau_top: f64,
    /// `∫ u² r² dμ`.
    pub kappa: f64,
    /// `∫ H² dμ`.
    pub h2_integral: f64,
    /// Trapezoidal `∫_0^t ∫ H² dμ dt` over the sampled rows.
    pub energy_accum: f64,
    /// `(k, μ̌({Q > k}))` for each monitored level.
    pub level_measures: Vec<(f64, f64)>,
}

impl DiagnosticsRow {
    pub fn oscillation(&self) -> f64 {
        self.u_max - self.u_min
    }
}

/// Instantaneous sample. `energy_accum` is left at zero; see
/// [`DiagnosticsRecorder`] for the accumulated form.
pub fn sample(state: &GraphState, levels: &[f64]) -> DiagnosticsRow {
    sample_with_fields(state, levels).0
}

pub fn sample_with_fields(state: &GraphState, levels: &[f64]) -> (DiagnosticsRow, GeomFields) {
    let f = GeomFields::compute(state);
    let grid = state.grid();
    let (u_min, u_max) = state.min_max();
    let mut row = DiagnosticsRow {
        step: 0,
        t: state.t,
        area: 0.0,
        u_min,
        u_max,
        vtilde_max: f64::NEG_INFINITY,
        q_max: f64::NEG_INFINITY,
        h2v2_max: 0.0,
        flux_hr: 0.0,
        flux_abs_hr: 0.0,
        tau_top: 0.0,
        kappa: 0.0,
        h2_integral: 0.0,
        energy_accum: 0.0,
        level_measures: levels.iter().map(|&k| (k, 0.0)).collect(),
    };
    for (i, node) in grid.nodes().iter().enumerate() {
        let (r, vol, vt, h) = (node.r, node.volume, f.vtilde[i], f.h[i]);
        let du2 = f.du[i][0] * f.du[i][0] + f.du[i][1] * f.du[i][1];
        let dmu = vt * vol;
        row.area += dmu;
        row.vtilde_max = row.vtilde_max.max(vt);
        row.q_max = row.q_max.max(f.q[i]);
        let hv = h * vt / r;
        row.h2v2_max = row.h2v2_max.max(hv * hv);
        row.flux_hr += h * r * vol;
        row.flux_abs_hr += h.abs() * r * vol;
        row.tau_top += r * r * du2 / (vt * vt) * dmu;
        row.kappa += state.u[i] * state.u[i] * r * r * dmu;
        row.h2_integral += h * h * dmu;
        for (k, m) in row.level_measures.iter_mut() {
            if f.q[i] > *k {
                *m += dmu;
            }
        }
    }
    (row, f)
}

/// `∫ |τ^⊤|² dμ` computed through the normal vector, `|τ^⊤|² = 1 - ⟨ν, τ⟩²`.
/// Agrees with [`DiagnosticsRow::tau_top`] up to rounding.
pub fn tau_top_via_normal(state: &GraphState) -> f64 {
    let f = GeomFields::compute(state);
    let grid = state.grid();
    let dim = grid.dimension();
    grid.nodes()
        .iter()
        .enumerate()
        .map(|(i, node)| {
            let u = state.u[i];
            let nu = normal_from_gradient(dim, node.r, u, f.du[i]);
            let tau = crate::flow::rotational_field(state, i);
            let c = nu.dot(&tau);
            (1.0 - c * c) * f.vtilde[i] * node.volume
        })
        .sum()
}

/// `|∫ H r dx|` with its normalizer `∫ |H| r dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxResidual {
    pub residual: f64,
    pub normalizer: f64,
}

impl FluxResidual {
    /// Residual relative to the normalizer (zero when `H ≡ 0`).
    pub fn relative(&self) -> f64 {
        if self.normalizer == 0.0 {
            0.0
        } else {
            self.residual / self.normalizer
        }
    }
}

/// The boundary condition forces `∫_M H / v dμ = 0`; in graph coordinates
/// this is `∫_Ω H r dx = 0`.
pub fn flux_identity_residual(state: &GraphState) -> FluxResidual {
    let row = sample(state, &[]);
    FluxResidual {
        residual: row.flux_hr.abs(),
        normalizer: row.flux_abs_hr,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyCheck {
    /// `|area(t_end) - area(t_0) + ∫∫ H² dμ dt|`.
    pub residual: f64,
    pub area_drop: f64,
    pub accum: f64,
    pub area0: f64,
    /// `accum ≤ area0 (1 + tol)`.
    pub bound_ok: bool,
}

impl EnergyCheck {
    pub fn relative(&self) -> f64 {
        if self.area_drop == 0.0 {
            if self.residual == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.residual / self.area_drop.abs()
        }
    }
}

/// Area decay against accumulated `∫ H² dμ` over a recorded series.
pub fn energy_identity_residual(series: &[DiagnosticsRow], tol: f64) -> Result<EnergyCheck, DiagnosticsError> {
    let (first, last) = match (series.first(), series.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(DiagnosticsError::EmptySeries),
    };
    let accum = last.energy_accum - first.energy_accum;
    let area_drop = first.area - last.area;
    Ok(EnergyCheck {
        residual: (last.area - first.area + accum).abs(),
        area_drop,
        accum,
        area0: first.area,
        bound_ok: accum <= first.area * (1.0 + tol),
    })
}

/// Boundary relation between the normal derivative of `H` and the torus
/// curvature: `∇_μ H + H A^Σ(ν, ν) = 0`. Returns the larger of the two
/// endpoint residuals. Only defined on 1D grids.
pub fn stahl_boundary_residual(state: &GraphState) -> Result<f64, DiagnosticsError> {
    let grid = state.grid();
    let (n, h) = match grid.layout() {
        Layout::Interval { n, h } => (n, h),
        Layout::Polar { .. } => return Err(DiagnosticsError::RequiresInterval),
    };
    let f = GeomFields::compute(state);
    let hc = &f.h;
    let ends = [
        (0usize, (-3.0 * hc[0] + 4.0 * hc[1] - hc[2]) / (2.0 * h)),
        (n - 1, (3.0 * hc[n - 1] - 4.0 * hc[n - 2] + hc[n - 3]) / (2.0 * h)),
    ];
    let mut worst: f64 = 0.0;
    for (b, (idx, dh_dr)) in grid.boundary().iter().zip(ends) {
        // arclength along the curve is ṽ dr; μ = γ r̂ at the endpoints
        let grad_mu = b.gamma[1] * dh_dr / f.vtilde[idx];
        let nu = normal_from_gradient(1, grid.node(idx).r, state.u[idx], f.du[idx]);
        let tau = crate::flow::rotational_field(state, idx);
        // TΣ is spanned by τ in 1D
        let nu_tau = nu.dot(&tau);
        let a_nu_nu = nu_tau * nu_tau * sigma_rotational_curvature(grid.profile(), b.phi);
        worst = worst.max((grad_mu + hc[idx] * a_nu_nu).abs());
    }
    Ok(worst)
}

/// Trapezoidal time integral of `f(row)` over a series.
pub fn time_integral(series: &[DiagnosticsRow], f: impl Fn(&DiagnosticsRow) -> f64) -> f64 {
    series
        .windows(2)
        .map(|w| 0.5 * (w[1].t - w[0].t) * (f(&w[0]) + f(&w[1])))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelAccum {
    pub k: f64,
    /// `∥A(k)∥ = ∫∫_{Q > k} dμ dt`.
    pub measure: f64,
    /// `e^k r_min ≥ √2`, i.e. `⟨ν, τ⟩ ≤ 1/√2` on `A(k)`.
    pub above_threshold: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetReport {
    pub levels: Vec<LevelAccum>,
    /// `∫∫ |τ^⊤|² dμ dt`.
    pub tau_top_spacetime: f64,
}

impl LevelSetReport {
    /// Largest `∥A(k)∥ - 2 ∫∫|τ^⊤|²` over levels above the threshold
    /// (negative when the inequality holds with room).
    pub fn worst_excess(&self) -> Option<f64> {
        self.levels
            .iter()
            .filter(|l| l.above_threshold)
            .map(|l| l.measure - 2.0 * self.tau_top_spacetime)
            .reduce(f64::max)
    }
}

/// Space-time measures of the superlevel sets of `Q`.
pub fn level_set_accumulate(series: &[DiagnosticsRow], r_min: f64) -> LevelSetReport {
    let n_levels = series.first().map_or(0, |r| r.level_measures.len());
    let levels = (0..n_levels)
        .map(|i| {
            let k = series[0].level_measures[i].0;
            LevelAccum {
                k,
                measure: time_integral(series, |row| row.level_measures[i].1),
                above_threshold: k.exp() * r_min >= SQRT_2,
            }
        })
        .collect();
    LevelSetReport {
        levels,
        tau_top_spacetime: time_integral(series, |row| row.tau_top),
    }
}

/// Samples rows and accumulates the energy integral between them.
#[derive(Debug, Clone, Default)]
pub struct DiagnosticsRecorder {
    levels: Vec<f64>,
    rows: Vec<DiagnosticsRow>,
}

impl DiagnosticsRecorder {
    pub fn new(mut levels: Vec<f64>) -> Self {
        levels.sort_by(f64::total_cmp);
        Self {
            levels,
            rows: Vec::new(),
        }
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn record(&mut self, state: &GraphState, step: usize) -> (&DiagnosticsRow, GeomFields) {
        let (mut row, fields) = sample_with_fields(state, &self.levels);
        row.step = step;
        if let Some(prev) = self.rows.last() {
            row.energy_accum =
                prev.energy_accum + 0.5 * (row.t - prev.t) * (prev.h2_integral + row.h2_integral);
        }
        self.rows.push(row);
        (self.rows.last().unwrap(), fields)
    }

    pub fn rows(&self) -> &[DiagnosticsRow] {
        &self.rows
    }

    pub fn last(&self) -> Option<&DiagnosticsRow> {
        self.rows.last()
    }

    pub fn into_rows(self) -> Vec<DiagnosticsRow> {
        self.rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, make_circle_profile, make_interval_profile, Resolution};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn interval(n: usize) -> Arc<crate::geometry::DomainGrid> {
        Arc::new(build_grid(&make_interval_profile(1.0, 2.0).unwrap(), Resolution::Interval(n)).unwrap())
    }

    #[test]
    fn flat_interval_state() {
        let s = GraphState::constant(interval(33), 0.3);
        let row = sample(&s, &[0.5, 1.0]);
        assert!((row.area - 1.0).abs() < 1e-15);
        assert_eq!(row.tau_top, 0.0);
        assert_eq!(row.flux_hr, 0.0);
        assert_eq!(row.vtilde_max, 1.0);
        assert_eq!(row.oscillation(), 0.0);
        // Q = -log r < 0.5 everywhere
        assert!(row.level_measures.iter().all(|&(_, m)| m == 0.0));
        assert_eq!(flux_identity_residual(&s).relative(), 0.0);
        assert_eq!(stahl_boundary_residual(&s).unwrap(), 0.0);
    }

    #[test]
    fn flat_disk_area() {
        let p = make_circle_profile([0.0, 2.0], 0.5).unwrap();
        let g = Arc::new(build_grid(&p, Resolution::Polar { ns: 16, nphi: 16 }).unwrap());
        let row = sample(&GraphState::constant(g.clone(), 1.0), &[]);
        assert!((row.area - PI * 0.25).abs() < 1e-12);
        assert_eq!(
            stahl_boundary_residual(&GraphState::constant(g, 0.0)),
            Err(DiagnosticsError::RequiresInterval)
        );
    }

    #[test]
    fn mirrored_state_has_same_residuals() {
        let g = interval(65);
        let s = GraphState::from_fn(g.clone(), |n| 0.5 * (PI * (n.r - 1.0)).cos());
        let m = s.map(|x| -x);
        let (a, b) = (flux_identity_residual(&s), flux_identity_residual(&m));
        assert_eq!(a.residual, b.residual);
        assert_eq!(a.normalizer, b.normalizer);
        assert_eq!(stahl_boundary_residual(&s).unwrap(), stahl_boundary_residual(&m).unwrap());
    }

    #[test]
    fn tau_top_two_paths_agree() {
        let g = interval(65);
        let s = GraphState::from_fn(g, |n| 2.0 * (PI * (n.r - 1.0)).cos());
        let a = sample(&s, &[]).tau_top;
        let b = tau_top_via_normal(&s);
        assert!((a - b).abs() <= 1e-13 * a.max(1.0), "{a} vs {b}");
    }

    #[test]
    fn level_measures_nest() {
        let g = interval(65);
        let s = GraphState::from_fn(g, |n| 2.0 * PI * (PI * (n.r - 1.0)).cos());
        let row = sample(&s, &[0.5, 1.0, 2.0, 3.0, 10.0]);
        for w in row.level_measures.windows(2) {
            assert!(w[1].1 <= w[0].1);
        }
        assert_eq!(row.level_measures.last().unwrap().1, 0.0);
    }

    #[test]
    fn energy_check_of_constant_series() {
        let s = GraphState::constant(interval(17), 0.0);
        let mut rec = DiagnosticsRecorder::new(vec![1.0]);
        rec.record(&s, 0);
        let mut later = s.clone();
        later.t = 1.0;
        rec.record(&later, 10);
        let e = energy_identity_residual(rec.rows(), 0.02).unwrap();
        assert_eq!(e.residual, 0.0);
        assert_eq!(e.accum, 0.0);
        assert!(e.bound_ok);
        let ls = level_set_accumulate(rec.rows(), 1.0);
        assert_eq!(ls.levels[0].measure, 0.0);
        assert_eq!(energy_identity_residual(&[], 0.02), Err(DiagnosticsError::EmptySeries));
    }
}
