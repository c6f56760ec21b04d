//! Semilinear problem ∂_t^α u + A u = f_b(u) with f_b(u) = μ|u|^{b-1}u.
//!
//! A weak solution on (0, T) is a fixed point of
//!
//! G_b u(t) = S1(t)u0 + S2(t)u1 + ∫_0^t S3(t-s) f_b(u(s)) ds.
//!
//! The module provides the admissible window for b, the exponents attached
//! to b, the local existence time with its constants, the small-data
//! horizon and a Picard solver that records contraction ratios in Y_T.

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check, Error, Result};
use crate::linear::{check_order, LinearSolver, SolutionTrajectory, SourceTerm};
use crate::norms;
use crate::spectral::{EigenBasis, ModalCoeffs};
use crate::strichartz::{check_dimension, ExponentSet};

/// f_b(u) = μ|u|^{b-1}u with the constant of the difference bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonlinearitySpec {
    pub b: f64,
    pub mu: f64,
    /// |f_b(u) - f_b(v)| ≤ cb |u - v| (|u|^{b-1} + |v|^{b-1}), cb = |μ| b.
    pub cb: f64,
}

impl NonlinearitySpec {
    pub fn new(b: f64, mu: f64) -> Result<Self> {
        check(b > 1.0 && b.is_finite(), || Error::Parameter(format!("the power b must exceed 1, got {b}")))?;
        check(mu.is_finite(), || Error::Parameter(format!("coupling μ must be finite, got {mu}")))?;
        Ok(Self { b, mu, cb: mu.abs() * b })
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        self.mu * u.abs().powf(self.b - 1.0) * u
    }

    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        self.mu * self.b * u.abs().powf(self.b - 1.0)
    }

    pub fn is_zero(&self) -> bool {
        self.mu == 0.0
    }
}

/// The open interval dα/(dα+4(1-α)) < b < (dα+4)/(dα+4(1-α)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BWindow {
    pub lower: f64,
    pub upper: f64,
    pub admissible: bool,
}

pub fn check_b_window(d: usize, alpha: f64, b: f64) -> Result<BWindow> {
    check_dimension(d)?;
    check_order(alpha)?;
    let da = d as f64 * alpha;
    let den = da + 4.0 * (1.0 - alpha);
    check(den > 0.0, || {
        Error::Validation(format!("dα + 4(1-α) = {den} is not positive for d = {d}, α = {alpha}; the window is empty"))
    })?;
    let (lower, upper) = (da / den, (da + 4.0) / den);
    Ok(BWindow { lower, upper, admissible: b > lower && b < upper })
}

/// Open interval of admissible p for the power b: (max(b, (dα+4)/(dα+4(1-α))), 1/(1-α(1-γ))).
pub fn p_window(d: usize, alpha: f64, b: f64) -> Result<(f64, f64)> {
    let w = check_b_window(d, alpha, b)?;
    check(w.admissible, || {
        Error::Domain(format!(
            "b = {b} lies outside the window ({}, {}) for d = {d}, α = {alpha}",
            w.lower, w.upper
        ))
    })?;
    let gamma = d as f64 * (b - 1.0) / (4.0 * b);
    Ok((b.max(w.upper), 1.0 / (1.0 - alpha * (1.0 - gamma))))
}

/// γ = d(b-1)/(4b), q = 2b and p from the window (midpoint by default).
pub fn exponent_set_for_b(d: usize, alpha: f64, b: f64, p: Option<f64>, ell: Option<f64>) -> Result<ExponentSet> {
    let (lo, hi) = p_window(d, alpha, b)?;
    let p = p.unwrap_or(0.5 * (lo + hi));
    check(p > lo && p < hi, || Error::Validation(format!("p = {p} must lie in ({lo}, {hi}) for b = {b}")))?;
    let gamma = d as f64 * (b - 1.0) / (4.0 * b);
    let mut set = ExponentSet::new(d, alpha, gamma, Some(p), Some(2.0 * b), ell)?;
    set.b = Some(b);
    Ok(set)
}

/// C = C'(1 + cb) + 1 with C' = C0 (1+T0)^δ.
pub fn assembled_constant(c0: f64, delta: f64, t0: f64, cb: f64) -> f64 {
    c0 * (1.0 + t0).powf(delta) * (1.0 + cb) + 1.0
}

/// The constant in T = (C̃ (‖u0‖ + ‖u1‖))^{-p(b-1)/(p-b)} equivalent to
/// T = (3C M^{b-1})^{-p/(p-b)} with M = 2C(‖u0‖ + ‖u1‖): C̃ = 2C (3C)^{1/(b-1)}.
pub fn tilde_constant(c: f64, b: f64) -> f64 {
    2.0 * c * (3.0 * c).powf(1.0 / (b - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExistenceTime {
    pub t: f64,
    pub m: f64,
    /// True when T = T0.
    pub capped: bool,
}

fn need_b(exponents: &ExponentSet) -> Result<f64> {
    exponents
        .b
        .ok_or_else(|| Error::Validation("exponent set carries no nonlinearity power b".into()))
}

/// M = 2C(‖u0‖_{H^{2γ}} + ‖u1‖_{H^{2s}}), T = min((3C M^{b-1})^{-p/(p-b)}, T0).
pub fn existence_time(u0_norm: f64, u1_norm: f64, exponents: &ExponentSet, t0: f64, c: f64) -> Result<ExistenceTime> {
    let b = need_b(exponents)?;
    let p = exponents.p;
    check(p > b, || Error::Domain(format!("existence time needs p > b, got p = {p}, b = {b}")))?;
    check(u0_norm >= 0.0 && u1_norm >= 0.0, || Error::Validation("data norms must be nonnegative".into()))?;
    check(t0 > 0.0 && t0.is_finite(), || Error::Validation(format!("T0 must be positive, got {t0}")))?;
    check(c > 0.0 && c.is_finite(), || Error::Validation(format!("the constant C must be positive, got {c}")))?;
    let m = 2.0 * c * (u0_norm + u1_norm);
    let raw = if p.is_infinite() {
        1.0 / (3.0 * c * m.powf(b - 1.0))
    } else {
        (3.0 * c * m.powf(b - 1.0)).powf(-p / (p - b))
    };
    let t = raw.min(t0);
    Ok(ExistenceTime { t, m, capped: !(raw < t0) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallDataHorizon {
    /// Strict upper bound on T, infinite for zero data; None when the
    /// hypothesis fails.
    pub bound: Option<f64>,
    pub exponent: f64,
    pub hypothesis_holds: bool,
}

/// [C̃0 (‖u0‖ + ‖u1‖)]^{-p(b-1)/(p(1+δ)-b)}, valid when it exceeds 1.
pub fn small_data_horizon(u0_norm: f64, u1_norm: f64, exponents: &ExponentSet, c0_tilde: f64) -> Result<SmallDataHorizon> {
    let b = need_b(exponents)?;
    let (p, delta) = (exponents.p, exponents.delta);
    check(p.is_finite() && p * (1.0 + delta) > b, || {
        Error::Domain(format!("small-data horizon needs p(1+δ) > b, got p = {p}, δ = {delta}, b = {b}"))
    })?;
    check(u0_norm >= 0.0 && u1_norm >= 0.0, || Error::Validation("data norms must be nonnegative".into()))?;
    check(c0_tilde > 0.0, || Error::Validation(format!("C̃0 must be positive, got {c0_tilde}")))?;
    let exponent = -p * (b - 1.0) / (p * (1.0 + delta) - b);
    let base = c0_tilde * (u0_norm + u1_norm);
    let value = if base == 0.0 { f64::INFINITY } else { base.powf(exponent) };
    let hypothesis_holds = value > 1.0;
    Ok(SmallDataHorizon { bound: hypothesis_holds.then_some(value), exponent, hypothesis_holds })
}

/// Projection of f_b(u) onto the modes, evaluated on a refined grid.
#[derive(Debug, Clone)]
pub struct NonlinearProjector {
    fine: EigenBasis,
    spec: NonlinearitySpec,
}

impl NonlinearProjector {
    pub fn new(basis: &EigenBasis, spec: NonlinearitySpec, oversampling: usize) -> Result<Self> {
        Ok(Self { fine: basis.oversampled(oversampling)?, spec })
    }

    /// ⟨f_b(u(t_j)), φ_k⟩ for every time row. On a non-finite value the
    /// index of the first offending row is returned.
    pub fn apply(&self, modal_u: &Array2<f64>) -> std::result::Result<Array2<f64>, usize> {
        let phi = self.fine.phi();
        let weights = &self.fine.grid().weights;
        let rows: Vec<std::result::Result<Vec<f64>, usize>> = (0..modal_u.nrows())
            .into_par_iter()
            .map(|j| {
                let mut values = modal_u.row(j).dot(phi);
                for (v, w) in values.iter_mut().zip(weights.iter()) {
                    *v = self.spec.eval(*v);
                    if !v.is_finite() {
                        return Err(j);
                    }
                    *v *= w;
                }
                Ok(phi.dot(&values).to_vec())
            })
            .collect();
        let mut out = Array2::zeros(modal_u.dim());
        for (j, row) in rows.into_iter().enumerate() {
            let row = row?;
            if row.iter().any(|v| !v.is_finite()) {
                return Err(j);
            }
            out.row_mut(j).assign(&ndarray::ArrayView1::from(&row[..]));
        }
        Ok(out)
    }
}

/// First iterate of the Picard scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PicardStart {
    /// u⁰ = S1 u0 + S2 u1.
    #[default]
    Linear,
    /// u⁰ = 0.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PicardConfig {
    /// Relative stopping threshold on ‖u^{m+1} - u^m‖_{X_T} / ‖u^1‖_{X_T}.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Refinement of the spatial grid used for f_b.
    pub oversampling: usize,
    /// Radius M of the ball B_M; iterates beyond 10 M abort the run.
    pub ball_radius: Option<f64>,
    pub start: PicardStart,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iter: 50, oversampling: 2, ball_radius: None, start: PicardStart::Linear }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PicardStatus {
    Converged,
    MaxIterations,
    /// ‖u^m‖_{Y_T} exceeded 10 M.
    Diverged { iteration: usize, y_norm: f64, threshold: f64 },
    BlowUp { iteration: usize, node: usize, time: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PicardReport {
    pub status: PicardStatus,
    /// Applications of G_b performed.
    pub iterate_count: usize,
    /// ‖u^{m+2} - u^{m+1}‖_{Y_T} / ‖u^{m+1} - u^m‖_{Y_T}.
    pub contraction_ratios: Vec<f64>,
    /// ‖u^{m+1} - u^m‖_{X_T} per step.
    pub increments: Vec<f64>,
    /// ‖u^m‖_{Y_T} per iterate, starting with u⁰.
    pub y_norms: Vec<f64>,
    /// ‖u^1‖_{X_T}, the scale of the stopping rule.
    pub reference_norm: f64,
    /// ‖G_b u - u‖_{X_T} for the returned iterate.
    pub final_residual: f64,
    pub tolerance: f64,
    pub chosen_t: f64,
    pub chosen_m: Option<f64>,
    /// Whether every iterate satisfied ‖u^m‖_{Y_T} ≤ M.
    pub stayed_in_ball: Option<bool>,
    pub exponents: ExponentSet,
}

impl PicardReport {
    pub fn converged(&self) -> bool {
        self.status == PicardStatus::Converged
    }

    pub fn max_contraction_ratio(&self) -> f64 {
        self.contraction_ratios.iter().copied().fold(0.0, f64::max)
    }

    /// Converts an unsuccessful run into the matching error.
    pub fn check(&self) -> Result<()> {
        match &self.status {
            PicardStatus::Converged => Ok(()),
            PicardStatus::MaxIterations => Err(Error::Divergence {
                iterations: self.iterate_count,
                reason: format!(
                    "no convergence within {} iterations (last increment {:e})",
                    self.iterate_count,
                    self.increments.last().copied().unwrap_or(f64::NAN)
                ),
            }),
            PicardStatus::Diverged { iteration, y_norm, threshold } => Err(Error::Divergence {
                iterations: *iteration,
                reason: format!("‖u‖_Y = {y_norm:e} exceeded {threshold:e}"),
            }),
            PicardStatus::BlowUp { iteration, node, time } => {
                Err(Error::BlowUp { iteration: *iteration, node: *node, time: *time })
            }
        }
    }
}

struct Picard<'a> {
    solver: &'a LinearSolver,
    projector: NonlinearProjector,
    linear_part: Array2<f64>,
    exponents: &'a ExponentSet,
    b: f64,
}

impl Picard<'_> {
    /// G_b u, or the row index where f_b(u) is not finite.
    fn apply(&self, u: &Array2<f64>) -> Result<std::result::Result<Array2<f64>, usize>> {
        if self.projector.spec.is_zero() {
            return Ok(Ok(self.linear_part.clone()));
        }
        let f = match self.projector.apply(u) {
            Ok(f) => f,
            Err(j) => return Ok(Err(j)),
        };
        let duhamel = self.solver.duhamel(&SourceTerm { modal_samples: f })?;
        Ok(Ok(&self.linear_part + &duhamel))
    }

    fn x_norm(&self, v: &Array2<f64>) -> Result<f64> {
        norms::x_norm(self.solver.basis(), self.solver.grid().nodes(), v, self.b)
    }

    fn y_norm(&self, v: &Array2<f64>) -> Result<f64> {
        let e = self.exponents;
        norms::y_norm(self.solver.basis(), self.solver.grid().nodes(), v, e.p, e.q, e.r)
    }
}

/// Picard iteration u^{m+1} = G_b u^m on the solver's grid.
///
/// Stops when ‖u^{m+1} - u^m‖_{X_T} ≤ tolerance · ‖u^1‖_{X_T}. Failures are
/// reported in the status; call [`PicardReport::check`] to turn them into
/// errors.
pub fn picard_solve(
    solver: &LinearSolver,
    nonlinearity: NonlinearitySpec,
    exponents: &ExponentSet,
    u0: &ModalCoeffs,
    u1: &ModalCoeffs,
    config: &PicardConfig,
) -> Result<(SolutionTrajectory, PicardReport)> {
    check(config.tolerance > 0.0, || Error::Validation("tolerance must be positive".into()))?;
    check(config.max_iter >= 1, || Error::Validation("max_iter must be at least 1".into()))?;
    check((nonlinearity.b - exponents.b.unwrap_or(nonlinearity.b)).abs() == 0.0, || {
        Error::Validation("nonlinearity power differs from the exponent set".into())
    })?;
    let picard = Picard {
        solver,
        projector: NonlinearProjector::new(solver.basis(), nonlinearity, config.oversampling)?,
        linear_part: solver.solve(u0, u1, &SourceTerm::zeros(solver.grid(), u0.len()))?.modal_u,
        exponents,
        b: nonlinearity.b,
    };
    let times = solver.grid().nodes();
    let threshold = config.ball_radius.map(|m| 10.0 * m);
    let mut u = match config.start {
        PicardStart::Linear => picard.linear_part.clone(),
        PicardStart::Zero => Array2::zeros(picard.linear_part.dim()),
    };
    let mut report = PicardReport {
        status: PicardStatus::MaxIterations,
        iterate_count: 0,
        contraction_ratios: Vec::new(),
        increments: Vec::new(),
        y_norms: vec![picard.y_norm(&u)?],
        reference_norm: 0.0,
        final_residual: f64::NAN,
        tolerance: config.tolerance,
        chosen_t: solver.grid().horizon(),
        chosen_m: config.ball_radius,
        stayed_in_ball: None,
        exponents: *exponents,
    };
    let mut last_y_increment = f64::NAN;
    for iteration in 1..=config.max_iter {
        let next = match picard.apply(&u)? {
            Ok(v) => v,
            Err(node) => {
                report.status = PicardStatus::BlowUp { iteration, node, time: times[node] };
                break;
            }
        };
        report.iterate_count = iteration;
        let diff = &next - &u;
        let x_increment = picard.x_norm(&diff)?;
        let y_increment = picard.y_norm(&diff)?;
        if iteration == 1 {
            report.reference_norm = picard.x_norm(&next)?;
        } else if last_y_increment > 0.0 {
            report.contraction_ratios.push(y_increment / last_y_increment);
        }
        last_y_increment = y_increment;
        report.increments.push(x_increment);
        let y = picard.y_norm(&next)?;
        report.y_norms.push(y);
        u = next;
        if !y.is_finite() {
            report.status = PicardStatus::BlowUp { iteration, node: times.len() - 1, time: times[times.len() - 1] };
            break;
        }
        if let Some(threshold) = threshold {
            if y > threshold {
                report.status = PicardStatus::Diverged { iteration, y_norm: y, threshold };
                break;
            }
        }
        if x_increment <= config.tolerance * report.reference_norm {
            report.status = PicardStatus::Converged;
            break;
        }
    }
    if let Some(m) = config.ball_radius {
        report.stayed_in_ball = Some(report.y_norms.iter().all(|&y| y <= m));
    }
    if !matches!(report.status, PicardStatus::BlowUp { .. }) {
        if let Ok(g) = picard.apply(&u)? {
            report.final_residual = picard.x_norm(&(&g - &u))?;
        }
    }
    let mut trajectory =
        SolutionTrajectory::from_samples(solver.basis().clone(), solver.alpha(), solver.grid().clone(), u)?;
    if nonlinearity.is_zero() {
        trajectory.data = Some(crate::linear::LinearData {
            u0: u0.clone(),
            u1: u1.clone(),
            source: SourceTerm::zeros(solver.grid(), u0.len()),
        });
    }
    Ok((trajectory, report))
}
