use std::f64::consts::PI;
use std::sync::Arc;

use approx::assert_relative_eq;
use proptest::prelude::*;

use super::*;
use crate::geometry::{build_grid, make_circle_profile, make_interval_profile, make_star_profile, Resolution, TrigSeries};

fn interval(r0: f64, r1: f64, n: usize) -> Arc<DomainGrid> {
    Arc::new(build_grid(&make_interval_profile(r0, r1).unwrap(), Resolution::Interval(n)).unwrap())
}

fn disk(ns: usize, nphi: usize) -> Arc<DomainGrid> {
    let p = make_circle_profile([0.0, 2.0], 0.5).unwrap();
    Arc::new(build_grid(&p, Resolution::Polar { ns, nphi }).unwrap())
}

fn star(ns: usize, nphi: usize) -> Arc<DomainGrid> {
    let rho = TrigSeries::new(vec![0.5, 0.0, 0.06], vec![0.04, 0.0, 0.03]);
    let p = make_star_profile([0.1, 2.0], rho).unwrap();
    Arc::new(build_grid(&p, Resolution::Polar { ns, nphi }).unwrap())
}

/// Hand-differentiated right side for `u(r)` in 1D.
fn oracle_1d(r: f64, d1: f64, d2: f64) -> f64 {
    let vt2 = 1.0 + r * r * d1 * d1;
    d2 / vt2 + d1 / r * (1.0 + 1.0 / vt2)
}

#[test]
fn ghost_mirrors_in_1d() {
    let g = interval(1.0, 2.0, 5);
    let s = GraphState::new(g, vec![1.0, 5.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!(s.ghost, vec![5.0, 3.0]);
    let c = GraphState::constant(interval(1.0, 2.0, 9), 0.4);
    assert_eq!(c.ghost, vec![0.4, 0.4]);
    assert!(boundary_normal_derivative(&c).iter().all(|&d| d == 0.0));
}

#[test]
fn quadratic_gradient_is_exact() {
    let s = GraphState::from_fn(interval(1.0, 2.0, 5), |n| n.r * n.r);
    assert_eq!(derivatives(&s, 2).du, [0.0, 3.0]);
    assert_eq!(derivatives(&s, 2).hess[1][1], 2.0);
}

#[test]
fn constant_is_stationary() {
    for g in [interval(1.0, 2.0, 17), disk(16, 16), star(16, 24)] {
        let s = GraphState::constant(g, -1.3);
        assert!(flow_rhs(&s).iter().all(|&x| x == 0.0));
        assert!(mean_curvature(&s).iter().all(|&x| x == 0.0));
        assert!(gradient(&s).iter().all(|d| *d == [0.0, 0.0]));
        let next = step(&s, &StepperConfig::default()).unwrap();
        assert_eq!(next.u, s.u);
        assert!(next.t > 0.0);
    }
}

#[test]
fn pointwise_closed_forms() {
    assert_relative_eq!(vtilde_at(1.5, [0.0, 3.0]), 21.25f64.sqrt(), max_relative = 1e-15);
    assert_relative_eq!(vtilde_at(2.0, [0.0, 0.5]), 2f64.sqrt(), max_relative = 1e-15);
    assert_eq!(vtilde_at(1.7, [0.0, 0.0]), 1.0);
    assert_relative_eq!(inverse_metric_at(1.5, [0.0, 3.0])[1][1], 1.0 / 21.25, max_relative = 1e-14);
    let gi = inverse_metric_at(0.8, [1.7, 0.0]);
    assert_relative_eq!(gi[0][0], 1.0 / (1.0 + 0.64 * 1.7 * 1.7), max_relative = 1e-14);
    assert_eq!(gi[1][1], 1.0);
    assert_eq!(gi[0][1], 0.0);
}

#[test]
fn cosine_example_rhs_and_curvature() {
    // u = 0.01 cos(π(r-1)) at r = 1.5
    let (r, d1, d2) = (1.5, -0.01 * PI, 0.0);
    let rhs = oracle_1d(r, d1, d2);
    assert!((rhs - -0.0418415).abs() < 5e-8, "{rhs}");
    let h = -(r / vtilde_at(r, [0.0, d1])) * rhs;
    assert!((h - 0.0626929).abs() < 5e-7, "{h}");

    let g = interval(1.0, 2.0, 257);
    let s = GraphState::from_fn(g, |n| 0.01 * (PI * (n.r - 1.0)).cos());
    let f = GeomFields::compute(&s);
    assert!((f.rhs[128] - rhs).abs() < 1e-5);
    assert!((f.h[128] - h).abs() < 1e-5);
    let nu = normal_vector(&s, 128);
    let tau = rotational_field(&s, 128);
    assert!((nu.dot(&tau) - 0.9988915).abs() < 1e-6);
    assert!((nu.dot(&tau) * f.vtilde[128] - 1.0).abs() < 1e-12);
}

#[test]
fn three_node_euler_step() {
    let g = interval(1.0, 2.0, 3);
    let s = GraphState::new(g, vec![0.0, 0.1, 0.0]).unwrap();
    // ghosts mirror to 0.1; h = 0.5: u' = 0 everywhere, u'' = ∓0.8
    let expect = [oracle_1d(1.0, 0.0, 0.8), oracle_1d(1.5, 0.0, -0.8), oracle_1d(2.0, 0.0, 0.8)];
    let rhs = flow_rhs(&s);
    for i in 0..3 {
        assert_relative_eq!(rhs[i], expect[i], max_relative = 1e-14);
    }
    let mut st = Stepper::new(StepperConfig::default()).unwrap();
    let mut next = s.clone();
    st.advance(&mut next, 0.002).unwrap();
    for i in 0..3 {
        assert_relative_eq!(next.u[i], s.u[i] + 0.002 * expect[i], max_relative = 1e-14);
    }
    assert_relative_eq!(next.u[1], 0.0984, max_relative = 1e-14);
}

#[test]
fn converged_1d_rhs_matches_oracle_at_second_order() {
    let err = |n: usize| {
        let s = GraphState::from_fn(interval(1.0, 2.0, n), |nd| 0.7 * (PI * (nd.r - 1.0)).cos());
        let rhs = flow_rhs(&s);
        s.grid()
            .nodes()
            .iter()
            .zip(&rhs)
            .map(|(nd, &x)| {
                let a = PI * (nd.r - 1.0);
                (x - oracle_1d(nd.r, -0.7 * PI * a.sin(), -0.7 * PI * PI * a.cos())).abs()
            })
            .fold(0.0, f64::max)
    };
    let ratio = err(65) / err(129);
    assert!((3.5..=4.5).contains(&ratio), "{ratio}");
}

#[test]
fn linear_field_gradient_is_reproduced() {
    for g in [disk(16, 16), star(24, 32)] {
        let s = GraphState::from_fn(g.clone(), |n| n.pos[0]);
        for (i, d) in gradient(&s).iter().enumerate() {
            if !g.is_boundary_adjacent(i) {
                assert!((d[0] - 1.0).abs() < 1e-10 && d[1].abs() < 1e-10, "{i}: {d:?}");
            }
        }
        let s = GraphState::from_fn(g.clone(), |n| n.pos[1]);
        for (i, d) in gradient(&s).iter().enumerate() {
            if !g.is_boundary_adjacent(i) {
                assert!(d[0].abs() < 1e-10 && (d[1] - 1.0).abs() < 1e-10, "{i}: {d:?}");
            }
        }
    }
}

#[test]
fn quadratic_in_y_on_disk() {
    // u = y²: Du = (2y, 0), D²u = diag(2, 0), N = 2/ṽ²
    let err = |ns: usize| {
        let g = disk(ns, ns);
        let s = GraphState::from_fn(g.clone(), |n| n.pos[0] * n.pos[0]);
        let rhs = flow_rhs(&s);
        g.nodes()
            .iter()
            .enumerate()
            .filter(|(i, _)| !g.is_boundary_adjacent(*i))
            .map(|(i, n)| (rhs[i] - 2.0 / (1.0 + 4.0 * n.r * n.r * n.pos[0] * n.pos[0])).abs())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(32), err(64));
    assert!(e1 < 0.05, "{e1}");
    assert!((3.5..=4.5).contains(&(e1 / e2)), "{}", e1 / e2);
}

#[test]
fn radial_neumann_ghost_converges() {
    // f(s) = s² - 2s³/3 has f'(1) = 0 and f''' ≠ 0
    let err = |ns: usize| {
        let g = disk(ns, ns);
        let s = GraphState::from_fn(g.clone(), |n| n.s * n.s - 2.0 * n.s.powi(3) / 3.0);
        let grad = gradient(&s);
        let a = 0.5;
        g.nodes()
            .iter()
            .enumerate()
            .filter(|(i, _)| g.is_boundary_adjacent(*i))
            .map(|(i, n)| {
                let fp = (2.0 * n.s - 2.0 * n.s * n.s) / a;
                let e = [(n.pos[0]) / (a * n.s), (n.pos[1] - 2.0) / (a * n.s)];
                ((grad[i][0] - fp * e[0]).powi(2) + (grad[i][1] - fp * e[1]).powi(2)).sqrt()
            })
            .fold(0.0, f64::max)
    };
    let ratio = err(16) / err(32);
    assert!((3.0..=5.0).contains(&ratio), "{ratio}");
}

#[test]
fn embedding_quarter_turns() {
    let node = [0.3, 1.2];
    assert_eq!(embed_point(2, node, 0.0).as_slice(), &[0.3, 1.2, 0.0]);
    let q = embed_point(2, node, PI / 2.0);
    assert!((q.as_slice()[1]).abs() < 1e-15 && q.as_slice()[2] == 1.2);
    let h = embed_point(2, node, PI);
    assert_eq!(h.as_slice()[1], -1.2);
    let nu = normal_from_gradient(2, 1.2, 0.0, [0.0, 0.0]);
    assert_eq!(nu.as_slice(), &[0.0, 0.0, 1.0]);
}

#[test]
fn sigma_validation() {
    let s = GraphState::constant(interval(1.0, 2.0, 11), 0.0);
    let cfg = StepperConfig { sigma: 0.0, ..Default::default() };
    let e = cfl_dt(&s, &cfg).unwrap_err();
    assert!(e.to_string().starts_with("sigma out of range"));
    let dt = cfl_dt(&s, &StepperConfig::default()).unwrap();
    assert_relative_eq!(dt, 0.002, max_relative = 1e-14);
}

#[test]
fn blow_up_is_reported() {
    let s = GraphState::from_fn(interval(1.0, 2.0, 33), |n| 2.0 * PI * (PI * (n.r - 1.0)).cos());
    let cfg = StepperConfig { vtilde_cap: 1.0001, ..Default::default() };
    let e = step(&s, &cfg).unwrap_err();
    assert!(e.to_string().starts_with("gradient blow-up at t="), "{e}");
}

#[test]
fn run_converges_immediately_for_constant() {
    let s = GraphState::constant(disk(8, 8), 0.7);
    let out = run_flow(s, &StepperConfig::default(), &RunSettings::default(), &mut NoObserver).unwrap();
    assert_eq!(out.termination, Termination::Converged);
    assert_eq!(out.steps, 0);
    assert!(out.state.u.iter().all(|&x| x == 0.7));
    assert_eq!(out.rows.len(), 1);
}

#[test]
fn run_stops_at_t_final() {
    let s = GraphState::from_fn(interval(1.0, 2.0, 17), |n| (PI * (n.r - 1.0)).cos());
    let cfg = StepperConfig { t_final: 0.01, osc_tol: 1e-12, ..Default::default() };
    let out = run_flow(s, &cfg, &RunSettings::default(), &mut NoObserver).unwrap();
    assert_eq!(out.termination, Termination::TFinal);
    assert_relative_eq!(out.state.t, 0.01, max_relative = 1e-12);
    assert_eq!(out.rows.last().unwrap().step, out.steps);
}

#[test]
fn parallel_rhs_matches_sequential() {
    let g = star(48, 64);
    let s = GraphState::from_fn(g.clone(), |n| (3.0 * n.pos[0]).sin() + n.s * n.s);
    let mut a = vec![0.0; g.len()];
    let mut b = vec![0.0; g.len()];
    stencil::rhs_into(&g, &s.u, &s.ghost, &mut a, false);
    stencil::rhs_into(&g, &s.u, &s.ghost, &mut b, true);
    assert_eq!(a, b);
}

fn evolve(s: &GraphState, scheme: Scheme, steps: usize) -> GraphState {
    let cfg = StepperConfig { scheme, ..Default::default() };
    let mut st = Stepper::new(cfg.clone()).unwrap();
    let dt = cfl_dt(s, &cfg).unwrap();
    let mut out = s.clone();
    for _ in 0..steps {
        st.advance(&mut out, dt).unwrap();
    }
    out
}

fn smooth_field(amp: f64, k: f64, phase: f64) -> impl Fn(&NodeGeometry) -> f64 {
    move |n| amp * (k * n.pos[0] + phase).cos() * (PI * n.s).cos() + 0.3 * n.pos[1]
}

use crate::geometry::NodeGeometry;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reflection_is_exact(amp in 0.1..3.0f64, k in 0.5..4.0f64, ph in 0.0..6.0f64, rk4 in any::<bool>()) {
        let scheme = if rk4 { Scheme::Rk4 } else { Scheme::Euler };
        for g in [interval(1.0, 2.0, 33), star(16, 16)] {
            let s = GraphState::from_fn(g, smooth_field(amp, k, ph));
            let a = evolve(&s, scheme, 5);
            let b = evolve(&s.map(|x| -x), scheme, 5);
            prop_assert!(a.u.iter().zip(&b.u).all(|(x, y)| *x == -*y));
        }
    }

    #[test]
    fn translation_is_equivariant(amp in 0.1..3.0f64, k in 0.5..4.0f64, c in -10.0..10.0f64) {
        for g in [interval(1.0, 2.0, 33), disk(16, 16)] {
            let s = GraphState::from_fn(g, smooth_field(amp, k, 0.0));
            let a = evolve(&s, Scheme::Euler, 5);
            let b = evolve(&s.map(|x| x + c), Scheme::Euler, 5);
            let d = a.u.iter().zip(&b.u).map(|(x, y)| (y - c - x).abs()).fold(0.0, f64::max);
            prop_assert!(d <= 1e-12, "{}", d);
        }
    }

    #[test]
    fn metric_and_normal_identities(amp in 0.0..3.0f64, k in 0.5..4.0f64, ph in 0.0..6.0f64) {
        for g in [interval(0.5, 3.0, 33), star(16, 24)] {
            let s = GraphState::from_fn(g.clone(), smooth_field(amp, k, ph));
            let f = GeomFields::compute(&s);
            for (i, n) in g.nodes().iter().enumerate() {
                let m = metric_at(n.r, f.du[i]);
                let gi = &f.ginv[i];
                for a in 0..2 {
                    for b in 0..2 {
                        let p = m[a][0] * gi[0][b] + m[a][1] * gi[1][b];
                        let want = if a == b { 1.0 } else { 0.0 };
                        prop_assert!((p - want).abs() <= 1e-12);
                    }
                }
                let det = gi[0][0] * gi[1][1] - gi[0][1] * gi[1][0];
                prop_assert!((det * f.vtilde[i] * f.vtilde[i] - 1.0).abs() <= 1e-10);
                prop_assert!(f.vtilde[i] >= 1.0);
                let nu = normal_vector(&s, i);
                prop_assert!((nu.norm() - 1.0).abs() <= 1e-12);
                let c = nu.dot(&rotational_field(&s, i));
                prop_assert!(c > 0.0);
                prop_assert!((c * f.vtilde[i] - 1.0).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn rhs_depends_only_on_derivatives(amp in 0.1..3.0f64, c in -20.0..20.0f64) {
        let g = interval(1.0, 2.0, 17);
        let s = GraphState::from_fn(g, smooth_field(amp, 1.0, 0.0));
        let a = flow_rhs(&s);
        let b = flow_rhs(&s.map(|x| x + c));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
        }
    }
}
