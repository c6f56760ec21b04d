mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use common::l1::caputo_residual;
use fracwave::linear::{LinearSolver, SourceTerm, TimeGrid};
use fracwave::norms::{self, sobolev_norm, temporal_lp};
use fracwave::semilinear::{
    assembled_constant, check_b_window, existence_time, exponent_set_for_b, p_window, picard_solve,
    small_data_horizon, tilde_constant, NonlinearProjector, NonlinearitySpec, PicardConfig, PicardStart, PicardStatus,
};
use fracwave::spectral::{build_interval_basis, build_rectangle_basis, EigenBasis, ModalCoeffs};
use fracwave::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn window_examples() {
    let w = check_b_window(3, 1.5, 2.0).unwrap();
    assert!((w.lower - 1.8).abs() < 1e-14 && (w.upper - 3.4).abs() < 1e-14);
    assert!(w.admissible);
    assert!(!check_b_window(3, 1.5, 3.4).unwrap().admissible);
    assert!(!check_b_window(3, 1.5, 1.8).unwrap().admissible);
    // dα + 4(1-α) ≤ 0: no admissible b at all.
    assert!(matches!(check_b_window(1, 1.5, 2.0), Err(Error::Validation(_))));
    assert!(check_b_window(3, 2.0, 2.0).is_err());
}

#[test]
fn exponents_for_b() {
    let e = exponent_set_for_b(3, 1.5, 2.0, None, None).unwrap();
    assert_eq!(e.b, Some(2.0));
    assert!((e.gamma - 0.375).abs() < 1e-15 && e.q == 4.0 && e.s == 0.0);
    assert!((e.r - 1.0 / 3.0).abs() < 1e-15);
    let (lo, hi) = p_window(3, 1.5, 2.0).unwrap();
    assert!((lo - 3.4).abs() < 1e-14 && (hi - 16.0).abs() < 1e-12);
    assert!((e.p - 9.7).abs() < 1e-12);
    assert!(matches!(exponent_set_for_b(3, 1.5, 3.5, None, None), Err(Error::Domain(_))));
    assert!(exponent_set_for_b(3, 1.5, 2.0, Some(3.0), None).is_err());
    assert!(exponent_set_for_b(3, 1.5, 2.0, Some(4.0), Some(2.0)).is_err());
}

/// Across the window, γ > 1 - 1/α, q = 2d/(d-4γ) = 2b, and the default
/// exponent set is admissible.
#[test]
fn window_implies_the_strichartz_conditions() {
    let mut count = 0;
    for d in 1..=3usize {
        for ia in 1..40 {
            let alpha = 1.0 + ia as f64 / 40.0;
            let Ok(w) = check_b_window(d, alpha, 2.0) else { continue };
            for ib in 1..40 {
                let b = w.lower + (w.upper - w.lower) * ib as f64 / 40.0;
                if b <= 1.0 {
                    continue;
                }
                let e = exponent_set_for_b(d, alpha, b, None, None).unwrap();
                assert!(e.gamma > 1.0 - 1.0 / alpha, "d={d} α={alpha} b={b}");
                let q = 2.0 * d as f64 / (d as f64 - 4.0 * e.gamma);
                assert!((q - 2.0 * b).abs() <= 1e-12 * q);
                assert!(e.p > b);
                count += 1;
            }
        }
    }
    assert!(count > 1000, "{count}");
}

#[test]
fn existence_time_examples() {
    let mut e = exponent_set_for_b(3, 1.5, 2.0, Some(4.0), None).unwrap();
    let t = existence_time(0.25, 0.75, &e, 10.0, 1.0).unwrap();
    assert_eq!(t.m, 2.0);
    assert!((t.t - 1.0 / 36.0).abs() < 1e-15);
    assert!(!t.capped);
    let z = existence_time(0.0, 0.0, &e, 10.0, 1.0).unwrap();
    assert_eq!((z.t, z.m, z.capped), (10.0, 0.0, true));
    let slope = -e.p * (e.b.unwrap() - 1.0) / (e.p - e.b.unwrap());
    for eps in [0.5, 0.25] {
        let te = existence_time(0.25 * eps, 0.75 * eps, &e, 10.0, 1.0).unwrap();
        assert!((te.t / t.t - eps.powf(slope)).abs() <= 1e-12 * te.t / t.t);
    }
    e.p = 1.5;
    assert!(matches!(existence_time(1.0, 0.0, &e, 1.0, 1.0), Err(Error::Domain(_))));
}

#[test]
fn existence_time_matches_the_tilde_form() {
    let e = exponent_set_for_b(3, 1.3, 2.5, None, None).unwrap();
    let c = assembled_constant(0.8, e.delta, 2.0, 1.25);
    let n = 0.01;
    let t = existence_time(n, 0.0, &e, 1e9, c).unwrap().t;
    let b = e.b.unwrap();
    let want = (tilde_constant(c, b) * n).powf(-e.p * (b - 1.0) / (e.p - b));
    assert!((t - want).abs() <= 1e-12 * want);
}

#[test]
fn small_data_horizon_cases() {
    let e = exponent_set_for_b(3, 1.5, 2.0, None, None).unwrap();
    let h = small_data_horizon(0.0, 0.0, &e, 3.0).unwrap();
    assert_eq!(h.bound, Some(f64::INFINITY));
    let a = small_data_horizon(0.01, 0.02, &e, 3.0).unwrap();
    let half = small_data_horizon(0.005, 0.01, &e, 3.0).unwrap();
    let factor = 2f64.powf(-h.exponent);
    assert!((half.bound.unwrap() / a.bound.unwrap() - factor).abs() <= 1e-12 * factor);
    let big = small_data_horizon(10.0, 0.0, &e, 3.0).unwrap();
    assert!(!big.hypothesis_holds && big.bound.is_none());
    let mut bad = e;
    bad.p = 2.5;
    bad.delta = -0.3;
    assert!(matches!(small_data_horizon(0.1, 0.0, &bad, 1.0), Err(Error::Domain(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn derivative_bound_on_a_grid(b in 1.01f64..4.0, mu in -3.0f64..3.0) {
        let f = NonlinearitySpec::new(b, mu).unwrap();
        prop_assert_eq!(f.eval(0.0), 0.0);
        for i in -50..=50 {
            let u = i as f64 / 10.0;
            prop_assert!(f.derivative(u).abs() <= f.cb * u.abs().powf(b - 1.0) * (1.0 + 1e-14));
            if i == 0 {
                continue;
            }
            let h = 1e-6 * u.abs();
            let fd = (f.eval(u + h) - f.eval(u - h)) / (2.0 * h);
            prop_assert!((fd - f.derivative(u)).abs() <= 1e-5 * (1.0 + f.derivative(u).abs()));
        }
    }
}

fn random_modes(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> ModalCoeffs {
    ModalCoeffs((0..n).map(|k| scale * rng.random_range(-1.0..1.0) / (1.0 + k as f64).powi(2)).collect())
}

/// ‖f_b(u)‖_{L¹L²} ≤ cb ‖u‖^b_{L^bL^{2b}} and the difference bound on random
/// trajectory pairs.
#[test]
fn hoelder_bounds_on_random_trajectories() {
    let basis = Arc::new(build_interval_basis(PI, 12).unwrap());
    let grid = Arc::new(TimeGrid::uniform(1.0, 32).unwrap());
    let solver = LinearSolver::new(basis.clone(), 1.5, grid.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let t = grid.nodes();
    for trial in 0..20 {
        let b = if trial % 2 == 0 { 2.0 } else { 2.5 };
        let spec = NonlinearitySpec::new(b, if trial % 3 == 0 { -1.3 } else { 0.7 }).unwrap();
        let proj = NonlinearProjector::new(&basis, spec, 2).unwrap();
        let z = ModalCoeffs::zeros(12);
        let u = solver.solve(&random_modes(12, 2.0, &mut rng), &random_modes(12, 1.0, &mut rng), &SourceTerm::zeros(&grid, 12)).unwrap();
        let v = solver.solve(&random_modes(12, 2.0, &mut rng), &z, &SourceTerm::zeros(&grid, 12)).unwrap();
        let l1l2 = |m: &ndarray::Array2<f64>| temporal_lp(t, &norms::sobolev_profile(&basis, m, 0.0), 1.0);
        let lb = |m: &ndarray::Array2<f64>| temporal_lp(t, &norms::spatial_lq_profile(&basis, m, 2.0 * b).unwrap(), b);
        let fu = proj.apply(&u.modal_u).unwrap();
        let fv = proj.apply(&v.modal_u).unwrap();
        assert!(l1l2(&fu) <= spec.cb * lb(&u.modal_u).powf(b));
        let lhs = l1l2(&(&fu - &fv));
        let xu = norms::x_norm(&basis, t, &u.modal_u, b).unwrap();
        let xv = norms::x_norm(&basis, t, &v.modal_u, b).unwrap();
        let xd = norms::x_norm(&basis, t, &(&u.modal_u - &v.modal_u), b).unwrap();
        assert!(lhs <= spec.cb * xd * (xu.powf(b - 1.0) + xv.powf(b - 1.0)), "trial {trial}");
    }
}

#[test]
fn zero_coupling_reproduces_the_linear_solver() {
    let basis = Arc::new(build_rectangle_basis(&[1.0, 1.3], 10).unwrap());
    let grid = Arc::new(TimeGrid::graded(0.8, 24, 2.0).unwrap());
    let solver = LinearSolver::new(basis.clone(), 1.5, grid.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (u0, u1) = (random_modes(10, 1.0, &mut rng), random_modes(10, 1.0, &mut rng));
    let e = exponent_set_for_b(3, 1.5, 2.0, None, None).unwrap();
    let (traj, rep) =
        picard_solve(&solver, NonlinearitySpec::new(2.0, 0.0).unwrap(), &e, &u0, &u1, &PicardConfig::default()).unwrap();
    let lin = solver.solve(&u0, &u1, &SourceTerm::zeros(&grid, 10)).unwrap();
    assert!(rep.converged());
    assert_eq!(rep.iterate_count, 1);
    assert_eq!(rep.final_residual, 0.0);
    assert!(traj.modal_u.iter().zip(lin.modal_u.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
}

struct Setup {
    solver: LinearSolver,
    basis: Arc<EigenBasis>,
}

fn setup(basis: EigenBasis, alpha: f64, horizon: f64, steps: usize) -> Setup {
    let basis = Arc::new(basis);
    let grid = Arc::new(TimeGrid::graded(horizon, steps, 2.0).unwrap());
    Setup { solver: LinearSolver::new(basis.clone(), alpha, grid).unwrap(), basis }
}

/// Small data on the interval with T from the existence-time formula.
#[test]
fn small_data_contracts_and_is_unique() {
    let alpha = 1.5;
    let e = exponent_set_for_b(3, alpha, 2.0, None, None).unwrap();
    let spec = NonlinearitySpec::new(2.0, 1.0).unwrap();
    let basis = build_interval_basis(PI, 16).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (u0, u1) = (random_modes(16, 0.05, &mut rng), random_modes(16, 0.05, &mut rng));
    let n0 = sobolev_norm(&basis, &u0, e.gamma).unwrap();
    let n1 = sobolev_norm(&basis, &u1, e.s).unwrap();
    let c = assembled_constant(1.0, e.delta, 1.0, spec.cb);
    let time = existence_time(n0, n1, &e, 1.0, c).unwrap();
    let s = setup(basis, alpha, time.t, 48);
    let config = PicardConfig { ball_radius: Some(time.m), ..Default::default() };
    let (a, ra) = picard_solve(&s.solver, spec, &e, &u0, &u1, &config).unwrap();
    assert!(ra.converged(), "{:?}", ra.status);
    assert!(ra.iterate_count <= 25);
    assert!(ra.max_contraction_ratio() <= 2.0 / 3.0 + 0.05, "{:?}", ra.contraction_ratios);
    assert!(ra.final_residual <= 2.0 * config.tolerance * ra.reference_norm);
    assert_eq!(ra.stayed_in_ball, Some(true));
    let (b, rb) =
        picard_solve(&s.solver, spec, &e, &u0, &u1, &PicardConfig { start: PicardStart::Zero, ..config }).unwrap();
    assert!(rb.converged());
    let diff = norms::x_norm(&s.basis, s.solver.grid().nodes(), &(&a.modal_u - &b.modal_u), 2.0).unwrap();
    assert!(diff <= 10.0 * config.tolerance * ra.reference_norm, "{diff}");
}

/// The converged fixed point satisfies the mode equations with source
/// ⟨f_b(u), φ_k⟩ to an accuracy that improves with the time grid.
#[test]
fn fixed_point_satisfies_the_mode_equations() {
    let alpha = 1.6;
    let e = exponent_set_for_b(3, alpha, 2.5, None, None).unwrap();
    let spec = NonlinearitySpec::new(2.5, -2.0).unwrap();
    let u0 = ModalCoeffs(vec![0.6, -0.2, 0.1, 0.05, 0.0, 0.02]);
    let u1 = ModalCoeffs(vec![0.1, 0.3, 0.0, -0.1, 0.05, 0.0]);
    let mut last = vec![f64::INFINITY; 6];
    for steps in [32, 64, 128] {
        let s = setup(build_interval_basis(PI, 6).unwrap(), alpha, 1.0, steps);
        let (u, rep) = picard_solve(&s.solver, spec, &e, &u0, &u1, &PicardConfig::default()).unwrap();
        assert!(rep.converged(), "{:?}", rep.status);
        let f = NonlinearProjector::new(&s.basis, spec, 2).unwrap().apply(&u.modal_u).unwrap();
        let t = s.solver.grid().nodes();
        for k in 0..6 {
            let uk: Vec<f64> = u.modal_u.column(k).to_vec();
            let fk: Vec<f64> = f.column(k).to_vec();
            let r = caputo_residual(t, &uk, u1[k], s.basis.eigenvalues()[k], &fk, alpha);
            assert!(r < last[k], "mode {k} at M={steps}: {r} ≥ {}", last[k]);
            last[k] = r;
        }
    }
}

#[test]
fn failures_are_reported() {
    let alpha = 1.5;
    let e = exponent_set_for_b(3, alpha, 2.0, None, None).unwrap();
    let basis = build_interval_basis(PI, 8).unwrap();
    let s = setup(basis, alpha, 2.0, 32);
    let big = ModalCoeffs(vec![50.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let z = ModalCoeffs::zeros(8);
    let spec = NonlinearitySpec::new(2.0, 1.0).unwrap();

    let (_, rep) = picard_solve(&s.solver, spec, &e, &big, &z, &PicardConfig { ball_radius: Some(1.0), ..Default::default() }).unwrap();
    assert!(matches!(rep.status, PicardStatus::Diverged { iteration: 1, .. }), "{:?}", rep.status);
    assert!(matches!(rep.check(), Err(Error::Divergence { .. })));

    let (_, rep) = picard_solve(&s.solver, spec, &e, &big, &z, &PicardConfig { max_iter: 200, ..Default::default() }).unwrap();
    assert!(matches!(rep.status, PicardStatus::BlowUp { .. }), "{:?}", rep.status);
    assert!(matches!(rep.check(), Err(Error::BlowUp { .. })));

    let mild = ModalCoeffs(vec![0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let (_, rep) = picard_solve(&s.solver, spec, &e, &mild, &z, &PicardConfig { max_iter: 2, ..Default::default() }).unwrap();
    assert_eq!(rep.status, PicardStatus::MaxIterations);
    assert!(matches!(rep.check(), Err(Error::Divergence { iterations: 2, .. })));

    assert!(picard_solve(&s.solver, spec, &e, &mild, &z, &PicardConfig { tolerance: 0.0, ..Default::default() }).is_err());
    let wrong = NonlinearitySpec::new(2.5, 1.0).unwrap();
    assert!(picard_solve(&s.solver, wrong, &e, &mild, &z, &PicardConfig::default()).is_err());
}
