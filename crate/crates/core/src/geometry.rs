//! Cross-section geometry of a torus of revolution.
//!
//! The torus is swept out by rotating a closed profile curve in the half-plane
//! `{(y, r) : r > 0}` about the `r = 0` axis. Everything in this module works
//! in half-plane coordinates `(y, r)`; for the one-dimensional problem the
//! `y` component is identically zero and the "profile" degenerates to the
//! two endpoints of an interval `[r0, r1]`.
//!
//! [`build_grid`] discretizes the interior `Ω` of the profile:
//!
//! * 1D: vertex-centred nodes `r_j = r0 + j h`, both endpoints included.
//! * 2D: a cell-centred polar map `x(s, φ) = c + s R(s, φ) e(φ)` with
//!   `s_j = (j + ½) Δs` and `φ_k = k Δφ`. The boundary curve sits at the cell
//!   face `s = 1`; a ghost row lives at `s = 1 + Δs/2`.
//!
//! `R(s, φ) = ρ_even(φ) + s ρ_odd(φ)` reproduces the profile exactly at
//! `s = 1` and satisfies `x(-s, φ) = x(s, φ + π)`, which is what lets the
//! stencil reach across the pole through the antipodal node. For circles and
//! profiles with only even harmonics `R = ρ` and the map is the plain polar
//! one.

use std::f64::consts::PI;

use crate::error::GeometryError;

/// Point in half-plane coordinates `(y, r)`.
pub type HalfPlanePoint = [f64; 2];

/// Minimum number of samples used to validate a star profile.
pub const PROFILE_SAMPLES: usize = 4096;

/// Finite Fourier series `a0 + Σ (a_m cos mφ + b_m sin mφ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSeries {
    /// `a_0, a_1, ..., a_M`.
    pub cos: Vec<f64>,
    /// `b_1, ..., b_M`.
    pub sin: Vec<f64>,
}

impl TrigSeries {
    pub fn constant(a0: f64) -> Self {
        Self {
            cos: vec![a0],
            sin: Vec::new(),
        }
    }

    pub fn new(cos: Vec<f64>, sin: Vec<f64>) -> Self {
        let cos = if cos.is_empty() { vec![0.0] } else { cos };
        Self { cos, sin }
    }

    /// Value and first two derivatives, restricted to harmonics with the
    /// given parity (`None` keeps everything).
    fn eval_parity(&self, phi: f64, parity: Option<bool>) -> [f64; 3] {
        let keep = |m: usize| match parity {
            None => true,
            Some(even) => (m % 2 == 0) == even,
        };
        let mut out = [0.0; 3];
        for (m, &a) in self.cos.iter().enumerate() {
            if a == 0.0 || !keep(m) {
                continue;
            }
            let mf = m as f64;
            let (s, c) = (mf * phi).sin_cos();
            out[0] += a * c;
            out[1] -= a * mf * s;
            out[2] -= a * mf * mf * c;
        }
        for (i, &b) in self.sin.iter().enumerate() {
            let m = i + 1;
            if b == 0.0 || !keep(m) {
                continue;
            }
            let mf = m as f64;
            let (s, c) = (mf * phi).sin_cos();
            out[0] += b * s;
            out[1] += b * mf * c;
            out[2] -= b * mf * mf * s;
        }
        out
    }

    /// `[ρ, ρ', ρ'']` at `phi`.
    pub fn eval(&self, phi: f64) -> [f64; 3] {
        self.eval_parity(phi, None)
    }

    pub fn even_part(&self, phi: f64) -> [f64; 3] {
        self.eval_parity(phi, Some(true))
    }

    pub fn odd_part(&self, phi: f64) -> [f64; 3] {
        self.eval_parity(phi, Some(false))
    }

    fn has_odd_harmonics(&self) -> bool {
        self.cos.iter().skip(1).step_by(2).any(|&a| a != 0.0)
            || self.sin.iter().step_by(2).any(|&b| b != 0.0)
    }
}

/// Cross-section profile of the torus.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileCurve {
    /// One-dimensional cross-section `[r0, r1]` (a planar annulus).
    Interval { r0: f64, r1: f64 },
    /// Round cross-section.
    Circle { center: HalfPlanePoint, a: f64 },
    /// Star-shaped cross-section `c + ρ(φ) e(φ)`.
    Star {
        center: HalfPlanePoint,
        rho: TrigSeries,
    },
}

pub fn make_interval_profile(r0: f64, r1: f64) -> Result<ProfileCurve, GeometryError> {
    if !(r0.is_finite() && r1.is_finite()) || r0 <= 0.0 {
        return Err(GeometryError::TouchesAxis);
    }
    if r1 <= r0 {
        return Err(GeometryError::EmptyInterval { r0, r1 });
    }
    Ok(ProfileCurve::Interval { r0, r1 })
}

pub fn make_circle_profile(center: HalfPlanePoint, a: f64) -> Result<ProfileCurve, GeometryError> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(GeometryError::NonPositiveRadius);
    }
    if center[1] - a <= 0.0 {
        return Err(GeometryError::TouchesAxis);
    }
    Ok(ProfileCurve::Circle { center, a })
}

pub fn make_star_profile(
    center: HalfPlanePoint,
    coeffs: TrigSeries,
) -> Result<ProfileCurve, GeometryError> {
    for k in 0..PROFILE_SAMPLES {
        let phi = 2.0 * PI * k as f64 / PROFILE_SAMPLES as f64;
        let rho = coeffs.eval(phi)[0];
        if !(rho > 0.0) {
            return Err(GeometryError::RadiusNonPositive { phi });
        }
        if center[1] + rho * phi.sin() <= 0.0 {
            return Err(GeometryError::ExitsHalfPlane { phi });
        }
    }
    Ok(ProfileCurve::Star {
        center,
        rho: coeffs,
    })
}

fn e(phi: f64) -> [f64; 2] {
    [phi.cos(), phi.sin()]
}

fn e_perp(phi: f64) -> [f64; 2] {
    [-phi.sin(), phi.cos()]
}

impl ProfileCurve {
    pub fn dimension(&self) -> usize {
        match self {
            ProfileCurve::Interval { .. } => 1,
            _ => 2,
        }
    }

    pub fn center(&self) -> Option<HalfPlanePoint> {
        match self {
            ProfileCurve::Interval { .. } => None,
            ProfileCurve::Circle { center, .. } | ProfileCurve::Star { center, .. } => {
                Some(*center)
            }
        }
    }

    /// `[ρ, ρ', ρ'']` of the radial function about the centre.
    pub fn radial(&self, phi: f64) -> [f64; 3] {
        match self {
            ProfileCurve::Interval { .. } => [0.0; 3],
            ProfileCurve::Circle { a, .. } => [*a, 0.0, 0.0],
            ProfileCurve::Star { rho, .. } => rho.eval(phi),
        }
    }

    fn radial_split(&self, phi: f64) -> ([f64; 3], [f64; 3]) {
        match self {
            ProfileCurve::Star { rho, .. } => (rho.even_part(phi), rho.odd_part(phi)),
            _ => (self.radial(phi), [0.0; 3]),
        }
    }

    fn has_odd_part(&self) -> bool {
        matches!(self, ProfileCurve::Star { rho, .. } if rho.has_odd_harmonics())
    }

    /// Point of the boundary curve at parameter `phi` (counterclockwise).
    pub fn point(&self, phi: f64) -> HalfPlanePoint {
        match self {
            ProfileCurve::Interval { r0, r1 } => {
                // the two "boundary points" of an interval
                if phi.cos() < 0.0 {
                    [0.0, *r0]
                } else {
                    [0.0, *r1]
                }
            }
            _ => {
                let c = self.center().unwrap();
                let rho = self.radial(phi)[0];
                let d = e(phi);
                [c[0] + rho * d[0], c[1] + rho * d[1]]
            }
        }
    }

    /// Smallest and largest `r` on the boundary.
    pub fn r_range(&self) -> (f64, f64) {
        match self {
            ProfileCurve::Interval { r0, r1 } => (*r0, *r1),
            ProfileCurve::Circle { center, a } => (center[1] - a, center[1] + a),
            ProfileCurve::Star { .. } => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for k in 0..PROFILE_SAMPLES {
                    let phi = 2.0 * PI * k as f64 / PROFILE_SAMPLES as f64;
                    let r = self.point(phi)[1];
                    lo = lo.min(r);
                    hi = hi.max(r);
                }
                (lo, hi)
            }
        }
    }
}

/// Outward unit normal `ν^P` of the profile curve at parameter `phi`.
///
/// For an interval the parameter selects the endpoint: `cos φ < 0` is `r0`
/// (normal `-r̂`), otherwise `r1` (normal `+r̂`).
pub fn profile_normal(profile: &ProfileCurve, phi: f64) -> HalfPlanePoint {
    match profile {
        ProfileCurve::Interval { .. } => {
            if phi.cos() < 0.0 {
                [0.0, -1.0]
            } else {
                [0.0, 1.0]
            }
        }
        _ => {
            let [rho, drho, _] = profile.radial(phi);
            let (d, p) = (e(phi), e_perp(phi));
            let n = [rho * d[0] - drho * p[0], rho * d[1] - drho * p[1]];
            let len = n[0].hypot(n[1]);
            [n[0] / len, n[1] / len]
        }
    }
}

/// `A^Σ(rτ, rτ) = -r ⟨μ, r̂⟩`: the second fundamental form of the torus
/// evaluated on the (unnormalized) rotational field.
pub fn sigma_rotational_eigenvalue(profile: &ProfileCurve, phi: f64) -> f64 {
    let r = profile.point(phi)[1];
    -r * profile_normal(profile, phi)[1]
}

/// The same curvature on the unit rotational field, `A^Σ(τ, τ) = -⟨μ, r̂⟩ / r`.
pub fn sigma_rotational_curvature(profile: &ProfileCurve, phi: f64) -> f64 {
    let r = profile.point(phi)[1];
    -profile_normal(profile, phi)[1] / r
}

/// Grid resolution request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    /// Number of nodes on `[r0, r1]`, endpoints included.
    Interval(usize),
    /// Radial cells and angular nodes of the polar map.
    Polar { ns: usize, nphi: usize },
}

/// Per-node geometric data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeGeometry {
    /// Half-plane position `(y, r)`.
    pub pos: HalfPlanePoint,
    /// Distance to the rotation axis.
    pub r: f64,
    /// Mapped coordinates `(s, φ)`; for 1D `s` is `(r - r0)/(r1 - r0)`.
    pub s: f64,
    pub phi: f64,
    /// Analytic mapping Jacobian `[[∂y/∂s, ∂y/∂φ], [∂r/∂s, ∂r/∂φ]]`.
    pub jacobian: [[f64; 2]; 2],
    pub jacobian_det: f64,
    /// Discrete (stencil-consistent) Jacobian inverse, `inv[a][i] = ∂ξ^a/∂x^i`.
    pub metric_inv: [[f64; 2]; 2],
    /// Discrete second derivatives of the map: `x_ss`, `x_sφ`, `x_φφ`.
    pub map_hessian: [HalfPlanePoint; 3],
    /// Quadrature weight (cell volume).
    pub volume: f64,
}

/// Geometry attached to one boundary location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryNode {
    pub phi: f64,
    pub point: HalfPlanePoint,
    /// Outward unit normal `γ` of `∂Ω`.
    pub gamma: HalfPlanePoint,
    /// `A^Σ(rτ, rτ)` at this point.
    pub sigma_eigenvalue: f64,
    /// `(α, β)` with `γ · Du = α u_s + β u_φ` on the face `s = 1`.
    pub neumann: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Layout {
    Interval { n: usize, h: f64 },
    Polar { ns: usize, nphi: usize, ds: f64, dphi: f64 },
}

/// Discretized cross-section `Ω`.
#[derive(Debug, Clone)]
pub struct DomainGrid {
    profile: ProfileCurve,
    layout: Layout,
    nodes: Vec<NodeGeometry>,
    boundary: Vec<BoundaryNode>,
    h_min: f64,
}

impl DomainGrid {
    pub fn profile(&self) -> &ProfileCurve {
        &self.profile
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn dimension(&self) -> usize {
        self.profile.dimension()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NodeGeometry] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> &NodeGeometry {
        &self.nodes[idx]
    }

    /// Boundary data: `[r0, r1]` for 1D, one entry per `φ_k` for 2D.
    pub fn boundary(&self) -> &[BoundaryNode] {
        &self.boundary
    }

    /// Number of ghost values (2 in 1D, `nφ` in 2D).
    pub fn ghost_len(&self) -> usize {
        self.boundary.len()
    }

    /// Smallest physical grid spacing.
    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    /// Total quadrature volume, i.e. `|Ω|` up to quadrature error.
    pub fn volume(&self) -> f64 {
        self.nodes.iter().map(|n| n.volume).sum()
    }

    /// Nodes whose stencil touches the boundary layer.
    pub fn is_boundary_adjacent(&self, idx: usize) -> bool {
        match self.layout {
            Layout::Interval { n, .. } => idx == 0 || idx + 1 == n,
            Layout::Polar { ns, nphi, .. } => idx / nphi == ns - 1,
        }
    }
}

/// Position of the (extended) polar map and its analytic derivatives.
struct PolarMap<'a> {
    profile: &'a ProfileCurve,
    center: HalfPlanePoint,
}

impl PolarMap<'_> {
    fn position(&self, s: f64, phi: f64) -> HalfPlanePoint {
        let (ev, od) = self.profile.radial_split(phi);
        let rad = ev[0] + s * od[0];
        let d = e(phi);
        [self.center[0] + s * rad * d[0], self.center[1] + s * rad * d[1]]
    }

    /// Analytic `[x_s, x_φ]` as columns of a 2x2 matrix.
    fn jacobian(&self, s: f64, phi: f64) -> [[f64; 2]; 2] {
        let (ev, od) = self.profile.radial_split(phi);
        let rad = ev[0] + s * od[0];
        let rad_phi = ev[1] + s * od[1];
        let radial_speed = ev[0] + 2.0 * s * od[0];
        let (d, p) = (e(phi), e_perp(phi));
        let xs = [radial_speed * d[0], radial_speed * d[1]];
        let xp = [
            s * (rad_phi * d[0] + rad * p[0]),
            s * (rad_phi * d[1] + rad * p[1]),
        ];
        [[xs[0], xp[0]], [xs[1], xp[1]]]
    }
}

fn det2(m: &[[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn inv2(m: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let d = det2(m);
    [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
}

/// Builds the computational grid on `Ω`.
pub fn build_grid(profile: &ProfileCurve, resolution: Resolution) -> Result<DomainGrid, GeometryError> {
    match (profile, resolution) {
        (ProfileCurve::Interval { r0, r1 }, Resolution::Interval(n)) => {
            build_interval(profile, *r0, *r1, n)
        }
        (ProfileCurve::Interval { .. }, Resolution::Polar { .. }) => {
            Err(GeometryError::ResolutionMismatch)
        }
        (_, Resolution::Interval(_)) => Err(GeometryError::ResolutionMismatch),
        (_, Resolution::Polar { ns, nphi }) => build_polar(profile, ns, nphi),
    }
}

fn build_interval(profile: &ProfileCurve, r0: f64, r1: f64, n: usize) -> Result<DomainGrid, GeometryError> {
    if n < 3 {
        return Err(GeometryError::ResolutionTooSmall { min: 3, got: n });
    }
    let h = (r1 - r0) / (n - 1) as f64;
    let nodes = (0..n)
        .map(|j| {
            let r = if j + 1 == n { r1 } else { r0 + j as f64 * h };
            let volume = if j == 0 || j + 1 == n { 0.5 * h } else { h };
            NodeGeometry {
                pos: [0.0, r],
                r,
                s: (r - r0) / (r1 - r0),
                phi: 0.0,
                jacobian: [[1.0, 0.0], [0.0, 1.0]],
                jacobian_det: 1.0,
                metric_inv: [[1.0, 0.0], [0.0, 1.0]],
                map_hessian: [[0.0; 2]; 3],
                volume,
            }
        })
        .collect();
    let ends = [(PI, r0), (0.0, r1)];
    let boundary = ends
        .iter()
        .map(|&(phi, r)| BoundaryNode {
            phi,
            point: [0.0, r],
            gamma: profile_normal(profile, phi),
            sigma_eigenvalue: sigma_rotational_eigenvalue(profile, phi),
            neumann: [profile_normal(profile, phi)[1], 0.0],
        })
        .collect();
    Ok(DomainGrid {
        profile: profile.clone(),
        layout: Layout::Interval { n, h },
        nodes,
        boundary,
        h_min: h,
    })
}

fn build_polar(profile: &ProfileCurve, ns: usize, nphi: usize) -> Result<DomainGrid, GeometryError> {
    if ns < 8 {
        return Err(GeometryError::ResolutionTooSmall { min: 8, got: ns });
    }
    if nphi < 8 {
        return Err(GeometryError::ResolutionTooSmall { min: 8, got: nphi });
    }
    if nphi % 2 != 0 {
        return Err(GeometryError::OddAngularResolution(nphi));
    }
    let center = profile.center().expect("closed profile has a centre");
    let map = PolarMap { profile, center };
    let ds = 1.0 / ns as f64;
    let dphi = 2.0 * PI / nphi as f64;
    let phi_of = |k: usize| k as f64 * dphi;
    let s_of = |j: isize| (j as f64 + 0.5) * ds;

    // fold check on the continuous map along every ray, finer than the grid
    if profile.has_odd_part() {
        for k in 0..nphi {
            for q in 1..=(4 * ns) {
                let s = q as f64 / (4 * ns) as f64;
                if det2(&map.jacobian(s, phi_of(k))) <= 0.0 {
                    return Err(GeometryError::GridFold { phi: phi_of(k) });
                }
            }
        }
    }

    let mut nodes = Vec::with_capacity(ns * nphi);
    let mut h_min = f64::INFINITY;
    for j in 0..ns {
        let s = s_of(j as isize);
        for k in 0..nphi {
            let phi = phi_of(k);
            let pos = map.position(s, phi);
            let jac = map.jacobian(s, phi);
            let det = det2(&jac);
            if !(det > 0.0) || !(pos[1] > 0.0) {
                return Err(GeometryError::GridFold { phi });
            }
            // discrete metric: same stencils as the solver, applied to x(s, φ)
            let x_at = |dj: isize, dk: isize| {
                let sj = s_of(j as isize + dj);
                map.position(sj, phi + dk as f64 * dphi)
            };
            let c = x_at(0, 0);
            let (sp, sm) = (x_at(1, 0), x_at(-1, 0));
            let (pp, pm) = (x_at(0, 1), x_at(0, -1));
            let (a, b, cc, d) = (x_at(1, 1), x_at(1, -1), x_at(-1, 1), x_at(-1, -1));
            let mut djac = [[0.0; 2]; 2];
            let mut hess = [[0.0; 2]; 3];
            for i in 0..2 {
                djac[i][0] = (sp[i] - sm[i]) / (2.0 * ds);
                djac[i][1] = (pp[i] - pm[i]) / (2.0 * dphi);
                hess[0][i] = (sp[i] - 2.0 * c[i] + sm[i]) / (ds * ds);
                hess[1][i] = (a[i] - b[i] - cc[i] + d[i]) / (4.0 * ds * dphi);
                hess[2][i] = (pp[i] - 2.0 * c[i] + pm[i]) / (dphi * dphi);
            }
            if det2(&djac) <= 0.0 {
                return Err(GeometryError::GridFold { phi });
            }
            let hs = jac[0][0].hypot(jac[1][0]) * ds;
            let hp = jac[0][1].hypot(jac[1][1]) * dphi;
            h_min = h_min.min(hs).min(hp);
            nodes.push(NodeGeometry {
                pos,
                r: pos[1],
                s,
                phi,
                jacobian: jac,
                jacobian_det: det,
                metric_inv: inv2(&djac),
                map_hessian: hess,
                volume: det * ds * dphi,
            });
        }
    }

    let boundary = (0..nphi)
        .map(|k| {
            let phi = phi_of(k);
            let gamma = profile_normal(profile, phi);
            let inv = inv2(&map.jacobian(1.0, phi));
            BoundaryNode {
                phi,
                point: profile.point(phi),
                gamma,
                sigma_eigenvalue: sigma_rotational_eigenvalue(profile, phi),
                neumann: [
                    inv[0][0] * gamma[0] + inv[0][1] * gamma[1],
                    inv[1][0] * gamma[0] + inv[1][1] * gamma[1],
                ],
            }
        })
        .collect();

    Ok(DomainGrid {
        profile: profile.clone(),
        layout: Layout::Polar { ns, nphi, ds, dphi },
        nodes,
        boundary,
        h_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn circle_validation() {
        let p = make_circle_profile([0.0, 2.0], 0.5).unwrap();
        assert_eq!(p.r_range(), (1.5, 2.5));
        assert_eq!(
            make_circle_profile([0.0, 1.0], 1.0),
            Err(GeometryError::TouchesAxis)
        );
        assert_eq!(
            make_circle_profile([0.0, 2.0], -0.1),
            Err(GeometryError::NonPositiveRadius)
        );
        assert_eq!(
            GeometryError::TouchesAxis.to_string(),
            "profile touches rotation axis"
        );
    }

    #[test]
    fn star_validation() {
        let p = make_star_profile([0.0, 2.0], TrigSeries::new(vec![0.5, 0.0, 0.1], vec![])).unwrap();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for k in 0..10_000 {
            let rho = p.radial(2.0 * PI * k as f64 / 10_000.0)[0];
            lo = lo.min(rho);
            hi = hi.max(rho);
        }
        assert_abs_diff_eq!(lo, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 0.6, epsilon = 1e-12);

        let err = make_star_profile([0.0, 2.0], TrigSeries::new(vec![0.1, 0.2], vec![])).unwrap_err();
        assert!(matches!(err, GeometryError::RadiusNonPositive { .. }));
        assert!(err.to_string().starts_with("ρ ≤ 0"));
    }

    #[test]
    fn circle_normals() {
        let p = make_circle_profile([0.0, 2.0], 0.5).unwrap();
        let top = profile_normal(&p, PI / 2.0);
        assert_abs_diff_eq!(top[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(top[1], 1.0, epsilon = 1e-15);
        let right = profile_normal(&p, 0.0);
        assert_eq!(right, [1.0, 0.0]);
        assert_eq!(p.point(0.0), [0.5, 2.0]);
    }

    #[test]
    fn star_normal_matches_finite_difference_tangent() {
        let p = make_star_profile([0.0, 2.0], TrigSeries::new(vec![0.5, 0.0, 0.1], vec![])).unwrap();
        for &phi in &[0.0, 0.3, 1.7, 4.0] {
            let h = 1e-6;
            let (a, b) = (p.point(phi + h), p.point(phi - h));
            let t = [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h)];
            let len = t[0].hypot(t[1]);
            // outward = tangent rotated clockwise for a counterclockwise curve
            let expect = [t[1] / len, -t[0] / len];
            let n = profile_normal(&p, phi);
            assert_abs_diff_eq!(n[0], expect[0], epsilon = 1e-9);
            assert_abs_diff_eq!(n[1], expect[1], epsilon = 1e-9);
        }
    }

    #[test]
    fn rotational_eigenvalue_on_round_torus() {
        let p = make_circle_profile([0.0, 2.0], 0.5).unwrap();
        assert_abs_diff_eq!(sigma_rotational_eigenvalue(&p, PI / 2.0), -2.5, epsilon = 1e-14);
        assert_abs_diff_eq!(sigma_rotational_eigenvalue(&p, 1.5 * PI), 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(sigma_rotational_eigenvalue(&p, 0.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sigma_rotational_curvature(&p, PI / 2.0), -1.0 / 2.5, epsilon = 1e-14);
        for k in 0..64 {
            let phi = 2.0 * PI * k as f64 / 64.0;
            let val = sigma_rotational_eigenvalue(&p, phi);
            let mu_r = profile_normal(&p, phi)[1];
            if mu_r > 1e-12 {
                assert!(val < 0.0);
            } else if mu_r < -1e-12 {
                assert!(val > 0.0);
            }
        }
    }

    #[test]
    fn interval_grid() {
        let p = make_interval_profile(1.0, 2.0).unwrap();
        let g = build_grid(&p, Resolution::Interval(5)).unwrap();
        let r: Vec<f64> = g.nodes().iter().map(|n| n.r).collect();
        assert_eq!(r, vec![1.0, 1.25, 1.5, 1.75, 2.0]);
        assert_eq!(g.boundary()[0].gamma, [0.0, -1.0]);
        assert_eq!(g.boundary()[1].gamma, [0.0, 1.0]);
        assert_eq!(g.boundary()[0].sigma_eigenvalue, 1.0);
        assert_eq!(g.boundary()[1].sigma_eigenvalue, -2.0);
        assert_abs_diff_eq!(g.volume(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn circle_grid_nodes() {
        let p = make_circle_profile([0.0, 2.0], 0.5).unwrap();
        let g = build_grid(&p, Resolution::Polar { ns: 16, nphi: 16 }).unwrap();
        assert_eq!(g.len(), 256);
        for n in g.nodes() {
            assert!(n.r > 1.5 && n.r < 2.5);
            assert!(n.jacobian_det > 0.0);
        }
        // midpoint rule in s is exact for the disk area
        assert_abs_diff_eq!(g.volume(), PI * 0.25, epsilon = 1e-13);
        for b in g.boundary() {
            assert_abs_diff_eq!(b.gamma[0].hypot(b.gamma[1]), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(b.neumann[1], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn polar_grid_rejects_bad_resolution() {
        let p = make_circle_profile([0.0, 2.0], 0.5).unwrap();
        assert!(matches!(
            build_grid(&p, Resolution::Polar { ns: 4, nphi: 16 }),
            Err(GeometryError::ResolutionTooSmall { .. })
        ));
        assert!(matches!(
            build_grid(&p, Resolution::Polar { ns: 8, nphi: 15 }),
            Err(GeometryError::OddAngularResolution(15))
        ));
        assert!(matches!(
            build_grid(&p, Resolution::Interval(16)),
            Err(GeometryError::ResolutionMismatch)
        ));
    }

    #[test]
    fn even_star_never_folds_but_strong_odd_harmonic_does() {
        let even = make_star_profile([0.0, 2.0], TrigSeries::new(vec![0.5, 0.0, 0.225], vec![])).unwrap();
        assert!(build_grid(&even, Resolution::Polar { ns: 8, nphi: 16 }).is_ok());

        // ρ_even + 2 ρ_odd changes sign although ρ itself stays positive
        let odd = make_star_profile([0.0, 2.0], TrigSeries::new(vec![0.5, 0.3], vec![])).unwrap();
        let err = build_grid(&odd, Resolution::Polar { ns: 8, nphi: 16 }).unwrap_err();
        assert!(matches!(err, GeometryError::GridFold { .. }), "{err}");
        assert!(err.to_string().contains("φ ="));

        let mild = make_star_profile([0.0, 2.0], TrigSeries::new(vec![0.5, 0.1], vec![0.0, 0.05])).unwrap();
        let g = build_grid(&mild, Resolution::Polar { ns: 16, nphi: 32 }).unwrap();
        for n in g.nodes() {
            assert!(n.jacobian_det > 0.0);
        }
        // boundary layer reproduces the profile exactly
        for b in g.boundary() {
            let p = mild.point(b.phi);
            assert_eq!(b.point, p);
        }
    }

    #[test]
    fn star_with_only_a0_matches_circle() {
        let c = make_circle_profile([0.1, 2.0], 0.5).unwrap();
        let s = make_star_profile([0.1, 2.0], TrigSeries::constant(0.5)).unwrap();
        let res = Resolution::Polar { ns: 12, nphi: 24 };
        let (gc, gs) = (build_grid(&c, res).unwrap(), build_grid(&s, res).unwrap());
        for (a, b) in gc.nodes().iter().zip(gs.nodes()) {
            assert!((a.pos[0] - b.pos[0]).abs() <= 1e-14);
            assert!((a.pos[1] - b.pos[1]).abs() <= 1e-14);
        }
    }
}
