mod common;

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use common::l1::caputo_residual;
use fracwave::linear::{stability_report, LinearSolver, SolutionTrajectory, SourceTerm, TimeGrid};
use fracwave::mlf::{mlf_eval, MLParams};
use fracwave::norms::sup_sobolev;
use fracwave::quad;
use fracwave::spectral::{build_interval_basis, EigenBasis, ModalCoeffs};
use fracwave::{solve_linear, solve_linear_derivative, Error};
use ndarray::Array2;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn e(alpha: f64, beta: f64, x: f64) -> f64 {
    mlf_eval(MLParams::new(alpha, beta).unwrap(), x).unwrap()
}

fn solver(basis: &Arc<EigenBasis>, alpha: f64, grid: TimeGrid) -> LinearSolver {
    LinearSolver::new(basis.clone(), alpha, Arc::new(grid)).unwrap()
}

#[test]
fn single_mode_homogeneous_solutions() {
    let basis = Arc::new(build_interval_basis(PI, 8).unwrap());
    for &alpha in &[1.2, 1.5, 1.8] {
        for grid in [TimeGrid::uniform(2.0, 64).unwrap(), TimeGrid::graded(2.0, 48, 2.0).unwrap()] {
            let s = solver(&basis, alpha, grid);
            let zero = ModalCoeffs::zeros(8);
            let f = SourceTerm::zeros(s.grid(), 8);
            let u = s.solve(&ModalCoeffs::unit(8, 0), &zero, &f).unwrap();
            let v = s.solve(&zero, &ModalCoeffs::unit(8, 1), &f).unwrap();
            for (j, &t) in s.grid().nodes().iter().enumerate() {
                let want = e(alpha, 1.0, -t.powf(alpha));
                assert!((u.modal_u[[j, 0]] - want).abs() <= 1e-10, "α={alpha} t={t}");
                let want = t * e(alpha, 2.0, -4.0 * t.powf(alpha));
                assert!((v.modal_u[[j, 1]] - want).abs() <= 1e-10, "α={alpha} t={t}");
                for k in 0..8 {
                    if k != 0 {
                        assert_eq!(u.modal_u[[j, k]], 0.0);
                    }
                    if k != 1 {
                        assert_eq!(v.modal_u[[j, k]], 0.0);
                    }
                }
            }
        }
    }
}

#[test]
fn constant_source_gives_the_moment() {
    let basis = Arc::new(build_interval_basis(1.0, 6).unwrap());
    for &alpha in &[1.3, 1.7] {
        for grid in [TimeGrid::uniform(1.5, 40).unwrap(), TimeGrid::graded(1.5, 40, 2.0).unwrap()] {
            let s = solver(&basis, alpha, grid);
            let c = 2.5;
            let f = SourceTerm::from_fn(s.grid(), 6, |_, _| c);
            let zero = ModalCoeffs::zeros(6);
            let u = s.solve(&zero, &zero, &f).unwrap();
            for (j, &t) in s.grid().nodes().iter().enumerate() {
                for (k, &l) in basis.eigenvalues().iter().enumerate() {
                    let ta = t.powf(alpha);
                    let want = c * ta * e(alpha, alpha + 1.0, -l * ta);
                    assert!((u.modal_u[[j, k]] - want).abs() <= 1e-8, "α={alpha} k={k} t={t}");
                }
            }
        }
    }
}

#[test]
fn classical_wave_limit() {
    let basis = Arc::new(build_interval_basis(PI, 2).unwrap());
    let grid = Arc::new(TimeGrid::uniform(6.0, 60).unwrap());
    let s = LinearSolver::new_unchecked(basis, 2.0, grid).unwrap();
    let f = SourceTerm::zeros(s.grid(), 2);
    let u = s.solve(&ModalCoeffs::unit(2, 0), &ModalCoeffs::zeros(2), &f).unwrap();
    for (j, &t) in s.grid().nodes().iter().enumerate() {
        assert!((u.modal_u[[j, 0]] - t.cos()).abs() <= 1e-8);
    }
}

#[test]
fn initial_conditions_hold_exactly() {
    let basis = Arc::new(build_interval_basis(1.0, 5).unwrap());
    let s = solver(&basis, 1.4, TimeGrid::graded(1.0, 32, 2.0).unwrap());
    let u0 = ModalCoeffs(vec![0.3, -1.2, 0.7, 0.1, 2.0]);
    let u1 = ModalCoeffs(vec![1.0, 0.0, -0.5, 0.25, 0.125]);
    let f = SourceTerm::from_fn(s.grid(), 5, |k, t| (k as f64 + t).sin());
    let u = s.solve(&u0, &u1, &f).unwrap();
    assert_eq!(u.at(0).to_vec(), u0.0);
    let du = s.derivative(&u0, &u1, &f).unwrap();
    assert_eq!(du.row(0).to_vec(), u1.0);
}

#[test]
fn velocity_only_derivative_is_e_alpha_1() {
    let basis = Arc::new(build_interval_basis(2.0, 4).unwrap());
    let u1 = ModalCoeffs(vec![1.0, -0.5, 0.25, 2.0]);
    let traj = solve_linear(
        basis.clone(),
        1.6,
        &ModalCoeffs::zeros(4),
        &u1,
        &SourceTerm::zeros(&TimeGrid::uniform(3.0, 30).unwrap(), 4),
        Arc::new(TimeGrid::uniform(3.0, 30).unwrap()),
    )
    .unwrap();
    let traj = solve_linear_derivative(&traj).unwrap();
    let du = traj.modal_du.as_ref().unwrap();
    for (j, &t) in traj.times().iter().enumerate() {
        for k in 0..4 {
            let want = e(1.6, 1.0, -basis.eigenvalues()[k] * t.powf(1.6)) * u1[k];
            assert!((du[[j, k]] - want).abs() <= 1e-10);
        }
    }
}

/// Centered differences of the computed u against the computed ∂_t u, with
/// second-order decay under grid refinement.
#[test]
fn derivative_matches_finite_differences() {
    let basis = Arc::new(build_interval_basis(PI, 3).unwrap());
    let u0 = ModalCoeffs(vec![1.0, 0.5, -0.25]);
    let u1 = ModalCoeffs(vec![-0.3, 0.6, 0.2]);
    let horizon = 2.0;
    let max_err = |m: usize| {
        let s = solver(&basis, 1.5, TimeGrid::uniform(horizon, m).unwrap());
        let f = SourceTerm::from_fn(s.grid(), 3, |k, t| (1.0 + k as f64) * (2.0 * t).sin() + 0.5);
        let u = s.solve(&u0, &u1, &f).unwrap().modal_u;
        let du = s.derivative(&u0, &u1, &f).unwrap();
        let h = horizon / m as f64;
        let mut worst: f64 = 0.0;
        for j in 1..m {
            let t = j as f64 * h;
            if !(0.2..=horizon - 0.2).contains(&t) {
                continue;
            }
            for k in 0..3 {
                let fd = (u[[j + 1, k]] - u[[j - 1, k]]) / (2.0 * h);
                worst = worst.max((fd - du[[j, k]]).abs());
            }
        }
        worst
    };
    let (a, b) = (max_err(100), max_err(200));
    assert!(b <= 1e-3, "{b}");
    assert!(a / b > 3.0, "rate {}", a / b);
}

#[test]
fn l1_oracle_reproduces_a_known_caputo_derivative() {
    // u = t², so the Caputo derivative is 2 t^{2-α}/Γ(3-α).
    let alpha = 1.5;
    let g = statrs::function::gamma::gamma(3.0 - alpha);
    let mut last = f64::INFINITY;
    for m in [16, 32, 64, 128] {
        let t: Vec<f64> = (0..=m).map(|j| j as f64 / m as f64).collect();
        let u: Vec<f64> = t.iter().map(|t| t * t).collect();
        let f: Vec<f64> = t.iter().map(|t| 2.0 * t.powf(2.0 - alpha) / g).collect();
        let r = caputo_residual(&t, &u, 0.0, 0.0, &f, alpha);
        assert!(r < last, "m={m}: {r} ≥ {last}");
        last = r;
    }
    assert!(last < 1e-2);
}

#[test]
fn caputo_residual_decreases_under_refinement() {
    let n = 4;
    let basis = Arc::new(build_interval_basis(PI, n).unwrap());
    let u0 = ModalCoeffs(vec![1.0, 0.5, -0.25, 0.1]);
    let u1 = ModalCoeffs(vec![0.3, -0.2, 0.1, 0.05]);
    for &alpha in &[1.3, 1.6, 1.9] {
        let mut last = vec![f64::INFINITY; n];
        for m in [32, 64, 128, 256] {
            let s = solver(&basis, alpha, TimeGrid::uniform(1.0, m).unwrap());
            let f = SourceTerm::from_fn(s.grid(), n, |k, t| t.cos() / (1.0 + k as f64));
            let u = s.solve(&u0, &u1, &f).unwrap();
            for k in 0..n {
                let col = u.modal_u.column(k).to_vec();
                let fk = f.modal_samples.column(k).to_vec();
                let r = caputo_residual(s.grid().nodes(), &col, u1[k], basis.eigenvalues()[k], &fk, alpha);
                assert!(r < last[k], "α={alpha} k={k} M={m}: {r} ≥ {}", last[k]);
                last[k] = r;
            }
        }
    }
}

#[test]
fn duhamel_converges_at_second_order() {
    let basis = Arc::new(build_interval_basis(1.0, 4).unwrap());
    let g = |k: usize, t: f64| (3.0 * t + k as f64).sin();
    let run = |m: usize| {
        let s = solver(&basis, 1.5, TimeGrid::uniform(1.0, m).unwrap());
        s.duhamel(&SourceTerm::from_fn(s.grid(), 4, g)).unwrap()
    };
    let (a, b, c) = (run(32), run(64), run(128));
    let diff = |coarse: &Array2<f64>, fine: &Array2<f64>| {
        let mut worst: f64 = 0.0;
        for j in 0..coarse.nrows() {
            for k in 0..4 {
                worst = worst.max((coarse[[j, k]] - fine[[2 * j, k]]).abs());
            }
        }
        worst
    };
    let (d1, d2) = (diff(&a, &b), diff(&b, &c));
    let dt: f64 = 1.0 / 64.0;
    assert!(d2 <= 10.0 * dt * dt, "{d2}");
    assert!(d1 / d2 > 3.5 && d1 / d2 < 4.5, "rate {}", d1 / d2);
}

#[test]
fn mode_truncation_is_exact_for_band_limited_data() {
    let data = [0.8, -0.4, 0.3, 0.1];
    let run = |n: usize| {
        let basis = Arc::new(build_interval_basis(1.0, n).unwrap());
        let s = solver(&basis, 1.5, TimeGrid::uniform(1.0, 40).unwrap());
        let mut u0 = ModalCoeffs::zeros(n);
        u0[..4].copy_from_slice(&data);
        let f = SourceTerm::from_fn(s.grid(), n, |k, t| if k < 4 { t * data[k] } else { 0.0 });
        sup_sobolev(&s.solve(&u0, &u0.scaled(0.5), &f).unwrap(), 0.0)
    };
    assert!((run(8) - run(16)).abs() <= 1e-6);
}

#[test]
fn order_and_shape_validation() {
    let basis = Arc::new(build_interval_basis(1.0, 3).unwrap());
    let grid = Arc::new(TimeGrid::uniform(1.0, 4).unwrap());
    let z = ModalCoeffs::zeros(3);
    let f = SourceTerm::zeros(&grid, 3);
    for alpha in [1.0, 2.0, 0.5, f64::NAN] {
        assert!(matches!(solve_linear(basis.clone(), alpha, &z, &z, &f, grid.clone()), Err(Error::Parameter(_))));
    }
    assert!(matches!(
        solve_linear(basis.clone(), 1.5, &ModalCoeffs::zeros(2), &z, &f, grid.clone()),
        Err(Error::Validation(_))
    ));
    let wrong = SourceTerm::zeros(&TimeGrid::uniform(1.0, 5).unwrap(), 3);
    assert!(matches!(solve_linear(basis.clone(), 1.5, &z, &z, &wrong, grid.clone()), Err(Error::Validation(_))));
    assert!(TimeGrid::from_nodes(vec![0.0, 0.5, 0.5]).is_err());
    assert!(TimeGrid::from_nodes(vec![0.1, 0.5]).is_err());
    assert!(TimeGrid::graded(1.0, 4, 0.5).is_err());
    let bare = SolutionTrajectory::from_samples(basis, 1.5, grid, Array2::zeros((5, 3))).unwrap();
    assert!(solve_linear_derivative(&bare).is_err());
}

#[test]
fn stability_report_zero_data() {
    let basis = Arc::new(build_interval_basis(1.0, 3).unwrap());
    let grid = Arc::new(TimeGrid::uniform(1.0, 8).unwrap());
    let z = ModalCoeffs::zeros(3);
    let traj = solve_linear(basis, 1.5, &z, &z, &SourceTerm::zeros(&grid, 3), grid).unwrap();
    let rep = stability_report(&traj, 0.1).unwrap();
    assert_eq!((rep.c_l2, rep.w11), (0.0, 0.0));
    assert!(matches!(stability_report(&traj, 0.25), Err(Error::Domain(_))));
}

/// u0 = e_1 only: ‖u‖_{C(L²)} = 1 at t = 0, and the W^{1,1} numerator is
/// ∫|E_{α,1}(-λt^α)| + ∫ λ t^{α-1}|E_{α,α}(-λt^α)|, computed adaptively.
#[test]
fn stability_report_single_mode_closed_form() {
    let alpha = 1.5;
    let r = 0.2;
    let basis = Arc::new(build_interval_basis(PI, 1).unwrap());
    let grid = Arc::new(TimeGrid::graded(1.0, 2048, 3.0).unwrap());
    let z = ModalCoeffs::zeros(1);
    let traj = solve_linear(basis, alpha, &ModalCoeffs::unit(1, 0), &z, &SourceTerm::zeros(&grid, 1), grid).unwrap();
    let rep = stability_report(&traj, r).unwrap();
    assert!((rep.c_l2 - 1.0).abs() <= 1e-12);
    let lambda = 1.0;
    let u_part = quad::integrate(|t| e(alpha, 1.0, -lambda * t.powf(alpha)).abs(), 0.0, 1.0, 1e-12).value;
    let du_part = quad::integrate(
        |t| lambda * t.powf(alpha - 1.0) * e(alpha, alpha, -lambda * t.powf(alpha)).abs(),
        0.0,
        1.0,
        1e-12,
    )
    .value;
    let want = (u_part + du_part) / lambda.powf(r);
    assert!((rep.w11 - want).abs() <= 1e-6 * want, "{} vs {want}", rep.w11);
}

/// Random data with spectral decay: the estimate ratios stay below a
/// batch constant, and that constant is stable when N doubles.
#[test]
fn stability_ratios_bounded_under_mode_refinement() {
    let alpha = 1.5;
    let draws = 100;
    let batch_max = |n: usize| {
        let basis = Arc::new(build_interval_basis(1.0, n).unwrap());
        let s = solver(&basis, alpha, TimeGrid::graded(1.0, 128, 2.0).unwrap());
        let mut worst = (0.0f64, 0.0f64);
        for trial in 0..draws {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial as u64);
            let coeffs = |rng: &mut ChaCha8Rng| {
                ModalCoeffs(
                    basis
                        .eigenvalues()
                        .iter()
                        .map(|l| {
                            let xi: f64 = StandardNormal.sample(rng);
                            xi * l.powf(-0.51)
                        })
                        .collect(),
                )
            };
            let (u0, u1) = (coeffs(&mut rng), coeffs(&mut rng));
            let amp: Vec<f64> = (0..n).map(|k| { let x: f64 = StandardNormal.sample(&mut rng); x / (1.0 + k as f64) }).collect();
            let f = SourceTerm::from_fn(s.grid(), n, |k, t| amp[k] * (1.0 + t));
            let mut traj = s.solve(&u0, &u1, &f).unwrap();
            traj.modal_du = Some(s.derivative(&u0, &u1, &f).unwrap());
            let rep = stability_report(&traj, 0.2).unwrap();
            assert!(rep.c_l2.is_finite() && rep.w11.is_finite());
            worst = (worst.0.max(rep.c_l2), worst.1.max(rep.w11));
        }
        worst
    };
    let (a, b) = (batch_max(16), batch_max(32));
    assert!(a.0 < 10.0 && a.1 < 10.0, "{a:?}");
    assert!((a.0 - b.0).abs() <= 0.1 * a.0, "{a:?} vs {b:?}");
    assert!((a.1 - b.1).abs() <= 0.1 * a.1, "{a:?} vs {b:?}");
}

fn shared_solver() -> &'static LinearSolver {
    static SOLVER: OnceLock<LinearSolver> = OnceLock::new();
    SOLVER.get_or_init(|| {
        let basis = Arc::new(build_interval_basis(1.0, 6).unwrap());
        solver(&basis, 1.45, TimeGrid::graded(1.0, 24, 2.0).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn superposition(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        d1 in prop::collection::vec(-1.0f64..1.0, 18),
        d2 in prop::collection::vec(-1.0f64..1.0, 18),
    ) {
        let s = shared_solver();
        let data = |d: &[f64]| {
            let f = SourceTerm::from_fn(s.grid(), 6, |k, t| d[12 + k] * (1.0 + t * t));
            (ModalCoeffs(d[..6].to_vec()), ModalCoeffs(d[6..12].to_vec()), f)
        };
        let (u0a, u1a, fa) = data(&d1);
        let (u0b, u1b, fb) = data(&d2);
        let comb = |x: &ModalCoeffs, y: &ModalCoeffs| ModalCoeffs(x.iter().zip(y.iter()).map(|(x, y)| a * x + b * y).collect());
        let fc = SourceTerm { modal_samples: &fa.modal_samples * a + &fb.modal_samples * b };
        let ua = s.solve(&u0a, &u1a, &fa).unwrap().modal_u;
        let ub = s.solve(&u0b, &u1b, &fb).unwrap().modal_u;
        let uc = s.solve(&comb(&u0a, &u0b), &comb(&u1a, &u1b), &fc).unwrap().modal_u;
        for ((x, y), z) in ua.iter().zip(ub.iter()).zip(uc.iter()) {
            prop_assert!((a * x + b * y - z).abs() <= 1e-10);
        }
    }
}
