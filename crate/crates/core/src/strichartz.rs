//! Exponent calculus of the Strichartz estimate
//!
//! ‖u‖_{C([0,T];H^{2r})} + ‖u‖_{L^p(0,T;L^q)} ≤ C0 (1+T)^δ (‖u0‖_{H^{2γ}} + ‖u1‖_{H^{2s}} + ‖f‖_{L¹L²})
//!
//! and an empirical estimate of C0 and δ from random data.
//!
//! Admissible (p, q, γ) for 0 < γ < 1:
//!
//! * q = ∞ if γ > d/4, any 2 < q < ∞ if γ = d/4, q = 2d/(d-4γ) if γ < d/4;
//! * p < 1/(1-α(1-γ)) if γ > 1 - 1/α, p = ∞ otherwise.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check, Error, Result};
use crate::linear::{check_order, LinearSolver, SourceTerm, TimeGrid};
use crate::norms;
use crate::spectral::{EigenBasis, ModalCoeffs};

/// Relative slack when comparing a supplied q with 2d/(d-4γ).
const Q_MATCH: f64 = 1e-12;
/// Differences below this count as equality at γ = d/4 and γ = 1 - 1/α, so
/// that decimal inputs such as α = 1.2, γ = 1/6 land on the boundary case.
const BOUNDARY: f64 = 1e-12;

/// Spatial exponent allowed for a given γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpatialExponent {
    Infinite,
    /// Any q in the open interval (2, ∞); the caller must choose one.
    OpenRange { lower: f64 },
    Exact { q: f64 },
}

/// Temporal exponent allowed for a given γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TemporalExponent {
    /// 1 ≤ p < sup (strict).
    Below { sup: f64 },
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Admissibility {
    pub q: SpatialExponent,
    pub p: TemporalExponent,
}

pub(crate) fn check_dimension(d: usize) -> Result<()> {
    check((1..=3).contains(&d), || Error::Validation(format!("dimension must be 1, 2 or 3, got {d}")))
}

fn check_gamma(gamma: f64) -> Result<()> {
    check(gamma > 0.0 && gamma < 1.0, || Error::Domain(format!("γ must lie in (0, 1), got {gamma}")))
}

/// The q rule and the supremum of admissible p for (d, α, γ).
pub fn admissible_exponents(d: usize, alpha: f64, gamma: f64) -> Result<Admissibility> {
    check_dimension(d)?;
    check_order(alpha)?;
    check_gamma(gamma)?;
    let quarter = d as f64 / 4.0;
    let q = if gamma > quarter + BOUNDARY {
        SpatialExponent::Infinite
    } else if gamma >= quarter - BOUNDARY {
        SpatialExponent::OpenRange { lower: 2.0 }
    } else {
        SpatialExponent::Exact { q: 2.0 * d as f64 / (d as f64 - 4.0 * gamma) }
    };
    let p = if gamma > 1.0 - 1.0 / alpha + BOUNDARY {
        TemporalExponent::Below { sup: 1.0 / (1.0 - alpha * (1.0 - gamma)) }
    } else {
        TemporalExponent::Infinite
    };
    Ok(Admissibility { q, p })
}

/// Whether (p, q) satisfies both conditions for (d, α, γ).
pub fn is_admissible(d: usize, alpha: f64, gamma: f64, p: f64, q: f64) -> Result<bool> {
    let rule = admissible_exponents(d, alpha, gamma)?;
    if !(p >= 1.0 && q >= 1.0) {
        return Ok(false);
    }
    let q_ok = match rule.q {
        SpatialExponent::Infinite => q.is_infinite(),
        SpatialExponent::OpenRange { lower } => q > lower && q.is_finite(),
        SpatialExponent::Exact { q: want } => (q - want).abs() <= Q_MATCH * want,
    };
    let p_ok = match rule.p {
        TemporalExponent::Below { sup } => p < sup * (1.0 - BOUNDARY),
        TemporalExponent::Infinite => p.is_infinite(),
    };
    Ok(q_ok && p_ok)
}

/// s = max(0, γ - 1/α) and r = min(1 - 1/α, γ).
pub fn derived_orders(alpha: f64, gamma: f64) -> (f64, f64) {
    ((gamma - 1.0 / alpha).max(0.0), (1.0 - 1.0 / alpha).min(gamma))
}

/// The growth exponent δ of C = C0 (1+T)^δ.
pub fn growth_exponent(alpha: f64, gamma: f64, s: f64, r: f64, p: f64) -> f64 {
    if p.is_infinite() {
        [alpha * (1.0 - gamma) - 1.0, 1.0 - alpha * (gamma - s), 1.0 - alpha * (r - s), alpha * (1.0 - r) - 1.0]
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    } else {
        let ip = 1.0 / p;
        [
            ip,
            1.0 - alpha * (gamma - s) + ip,
            1.0 - alpha * (r - s),
            alpha * (1.0 - r) - 1.0,
            alpha * (1.0 - gamma) - 1.0 + ip,
        ]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A validated exponent tuple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentSet {
    pub d: usize,
    pub alpha: f64,
    /// Nonlinearity power when the set comes from the semilinear theory.
    pub b: Option<f64>,
    pub gamma: f64,
    pub q: f64,
    pub p: f64,
    pub s: f64,
    pub r: f64,
    pub delta: f64,
    pub ell: f64,
}

impl ExponentSet {
    /// Checks admissibility and derives s, r and δ.
    ///
    /// `q` may be omitted unless γ = d/4; `p` may be omitted only when p = ∞
    /// is forced. ℓ defaults to 1.
    pub fn new(d: usize, alpha: f64, gamma: f64, p: Option<f64>, q: Option<f64>, ell: Option<f64>) -> Result<Self> {
        let rule = admissible_exponents(d, alpha, gamma)?;
        let q = match (rule.q, q) {
            (_, Some(q)) => q,
            (SpatialExponent::Infinite, None) => f64::INFINITY,
            (SpatialExponent::Exact { q }, None) => q,
            (SpatialExponent::OpenRange { .. }, None) => {
                return Err(Error::Validation(format!(
                    "γ = d/4 = {gamma} admits any q in (2, ∞); choose q explicitly"
                )))
            }
        };
        let p = match (rule.p, p) {
            (_, Some(p)) => p,
            (TemporalExponent::Infinite, None) => f64::INFINITY,
            (TemporalExponent::Below { sup }, None) => {
                return Err(Error::Validation(format!("γ > 1 - 1/α requires a choice of p < {sup}")))
            }
        };
        check(is_admissible(d, alpha, gamma, p, q)?, || {
            Error::Validation(format!(
                "(p, q) = ({p}, {q}) violates the admissibility conditions for d = {d}, α = {alpha}, γ = {gamma} ({rule:?})"
            ))
        })?;
        let ell = ell.unwrap_or(1.0);
        check(ell >= 1.0 && ell < 1.0 / (2.0 - alpha), || {
            Error::Validation(format!("ℓ must satisfy 1 ≤ ℓ < 1/(2-α) = {}, got {ell}", 1.0 / (2.0 - alpha)))
        })?;
        let (s, r) = derived_orders(alpha, gamma);
        let delta = growth_exponent(alpha, gamma, s, r, p);
        Ok(Self { d, alpha, b: None, gamma, q, p, s, r, delta, ell })
    }
}

/// Settings of the Monte-Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateConfig {
    pub horizons: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Time intervals per horizon.
    pub time_steps: usize,
    /// Grading exponent χ of the time grid.
    pub grading: f64,
    /// Extra spectral decay ρ of the random coefficients.
    pub rho: f64,
    /// Whether draws include a source term.
    pub with_source: bool,
    /// Adds unit-mode data in each slot for every mode to each horizon.
    pub unit_probes: bool,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            horizons: vec![1.0, 2.0, 4.0, 8.0],
            trials: 100,
            seed: 0,
            time_steps: 128,
            grading: 2.0,
            rho: 0.51,
            with_source: true,
            unit_probes: true,
        }
    }
}

/// Origin of a draw. Unit probes put all data on one mode k (1-based) in
/// one slot; the lowest modes carry the largest ratios, which random data
/// with spread-out spectra rarely approach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DrawKind {
    Random,
    UnitU0,
    UnitU1,
    UnitSource,
}

impl DrawKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::Random => "random",
            Self::UnitU0 => "unit_u0",
            Self::UnitU1 => "unit_u1",
            Self::UnitSource => "unit_f",
        }
    }
}

/// One draw of data and its ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DrawRecord {
    pub horizon: f64,
    pub kind: DrawKind,
    /// Trial number for random draws, mode number for unit probes.
    pub trial: usize,
    pub numerator: f64,
    pub denominator: f64,
    /// None when the denominator vanishes.
    pub ratio: Option<f64>,
}

/// Left and right sides of the estimate for one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioSample {
    pub numerator: f64,
    pub denominator: f64,
}

impl RatioSample {
    pub fn ratio(&self) -> Option<f64> {
        (self.denominator > 0.0).then(|| self.numerator / self.denominator)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizonSummary {
    pub horizon: f64,
    pub max_ratio: f64,
    /// Maximum over the random draws alone.
    pub max_random_ratio: f64,
    pub degenerate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantEstimate {
    pub exponents: ExponentSet,
    /// False when the exponents of one dimension are applied on a domain of
    /// another (a dimension analog).
    pub dimension_matches: bool,
    pub per_horizon: Vec<HorizonSummary>,
    /// Least-squares slope of log(max ratio) against log(1+T) over T ≥ 1.
    pub delta_hat: f64,
    /// exp of the least-squares intercept.
    pub fit_intercept: f64,
    /// max_T max_ratio(T) / (1+T)^δ, the smallest C0 consistent with the draws.
    pub c0_hat: f64,
    pub draws: Vec<DrawRecord>,
}

/// Computes both sides of the estimate for given data.
pub fn trial_ratio(
    solver: &LinearSolver,
    exponents: &ExponentSet,
    u0: &ModalCoeffs,
    u1: &ModalCoeffs,
    f: &SourceTerm,
) -> Result<RatioSample> {
    let basis = solver.basis();
    let traj = solver.solve(u0, u1, f)?;
    let times = traj.times();
    let lpq = norms::temporal_lp(times, &norms::spatial_lq_profile(basis, &traj.modal_u, exponents.q)?, exponents.p);
    let numerator = norms::sup_sobolev(&traj, exponents.r) + lpq;
    let denominator = norms::sobolev_norm(basis, u0, exponents.gamma)?
        + norms::sobolev_norm(basis, u1, exponents.s)?
        + norms::source_l1_l2(f, solver.grid());
    Ok(RatioSample { numerator, denominator })
}

/// Counter-based generator: the stream depends only on (seed, horizon, trial).
fn trial_rng(seed: u64, horizon_index: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((horizon_index as u64) << 32) | trial as u64);
    rng
}

/// Random data: u0_k = ξ λ_k^{-γ-ρ}, u1_k = ξ' λ_k^{-s-ρ}, and optionally
/// f_k(t) = ζ λ_k^{-ρ} (1 + sin(ωt + φ)) with ω ∈ [0, 4), φ ∈ [0, 2π).
fn draw_data(
    rng: &mut ChaCha8Rng,
    basis: &EigenBasis,
    exponents: &ExponentSet,
    grid: &TimeGrid,
    config: &EstimateConfig,
) -> (ModalCoeffs, ModalCoeffs, SourceTerm) {
    let lambda = basis.eigenvalues();
    let mut coeffs = |decay: f64| {
        ModalCoeffs(
            lambda
                .iter()
                .map(|l| {
                    let xi: f64 = rng.sample(StandardNormal);
                    xi * l.powf(-decay)
                })
                .collect(),
        )
    };
    let u0 = coeffs(exponents.gamma + config.rho);
    let u1 = coeffs(exponents.s + config.rho);
    let f = if config.with_source {
        let amp = coeffs(config.rho);
        let omega = rng.random_range(0.0..4.0);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        SourceTerm::from_fn(grid, lambda.len(), |k, t| amp[k] * (1.0 + (omega * t + phase).sin()))
    } else {
        SourceTerm::zeros(grid, lambda.len())
    };
    (u0, u1, f)
}

fn unit_data(kind: DrawKind, mode: usize, n: usize, grid: &TimeGrid) -> (ModalCoeffs, ModalCoeffs, SourceTerm) {
    let unit = ModalCoeffs::unit(n, mode);
    let zero = ModalCoeffs::zeros(n);
    match kind {
        DrawKind::UnitU0 => (unit, zero.clone(), SourceTerm::zeros(grid, n)),
        DrawKind::UnitU1 => (zero.clone(), unit, SourceTerm::zeros(grid, n)),
        _ => (zero.clone(), zero, SourceTerm::from_fn(grid, n, |k, _| if k == mode { 1.0 } else { 0.0 })),
    }
}

/// Max ratio per horizon over random draws and unit probes, with the growth fit.
pub fn estimate_constant(basis: Arc<EigenBasis>, exponents: &ExponentSet, config: &EstimateConfig) -> Result<ConstantEstimate> {
    check(config.trials >= 1, || Error::Validation("need at least one trial".into()))?;
    check(!config.horizons.is_empty() && config.horizons.iter().all(|t| *t > 0.0), || {
        Error::Validation("horizons must be positive".into())
    })?;
    check(is_admissible(exponents.d, exponents.alpha, exponents.gamma, exponents.p, exponents.q)?, || {
        Error::Validation("exponent set is not admissible".into())
    })?;
    let mut per_horizon = Vec::with_capacity(config.horizons.len());
    let mut draws = Vec::with_capacity(config.horizons.len() * config.trials);
    for (hi, &horizon) in config.horizons.iter().enumerate() {
        let grid = Arc::new(TimeGrid::graded(horizon, config.time_steps, config.grading)?);
        let solver = LinearSolver::new(basis.clone(), exponents.alpha, grid.clone())?;
        let n = basis.mode_count();
        let mut jobs: Vec<(DrawKind, usize)> = (0..config.trials).map(|t| (DrawKind::Random, t)).collect();
        if config.unit_probes {
            for kind in [DrawKind::UnitU0, DrawKind::UnitU1, DrawKind::UnitSource] {
                if kind != DrawKind::UnitSource || config.with_source {
                    jobs.extend((1..=n).map(|k| (kind, k)));
                }
            }
        }
        let samples = jobs
            .par_iter()
            .map(|&(kind, index)| {
                let (u0, u1, f) = match kind {
                    DrawKind::Random => draw_data(&mut trial_rng(config.seed, hi, index), &basis, exponents, &grid, config),
                    _ => unit_data(kind, index - 1, n, &grid),
                };
                trial_ratio(&solver, exponents, &u0, &u1, &f)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut max_ratio = 0.0f64;
        let mut max_random_ratio = 0.0f64;
        let mut degenerate = 0;
        for (&(kind, trial), s) in jobs.iter().zip(&samples) {
            let ratio = s.ratio();
            match ratio {
                Some(r) => {
                    max_ratio = max_ratio.max(r);
                    if kind == DrawKind::Random {
                        max_random_ratio = max_random_ratio.max(r);
                    }
                }
                None => degenerate += 1,
            }
            draws.push(DrawRecord { horizon, kind, trial, numerator: s.numerator, denominator: s.denominator, ratio });
        }
        per_horizon.push(HorizonSummary { horizon, max_ratio, max_random_ratio, degenerate });
    }
    let (delta_hat, intercept) = fit_growth(&per_horizon);
    let c0_hat = per_horizon
        .iter()
        .map(|h| h.max_ratio / (1.0 + h.horizon).powf(exponents.delta))
        .fold(0.0, f64::max);
    Ok(ConstantEstimate {
        exponents: *exponents,
        dimension_matches: basis.dimension() == exponents.d,
        per_horizon,
        delta_hat,
        fit_intercept: intercept.exp(),
        c0_hat,
        draws,
    })
}

/// Least squares of log(max ratio) on log(1+T) over horizons T ≥ 1. With
/// fewer than two usable horizons the slope is reported as NaN.
fn fit_growth(per_horizon: &[HorizonSummary]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = per_horizon
        .iter()
        .filter(|h| h.horizon >= 1.0 && h.max_ratio > 0.0)
        .map(|h| ((1.0 + h.horizon).ln(), h.max_ratio.ln()))
        .collect();
    if pts.len() < 2 {
        return (f64::NAN, f64::NAN);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_a_power_law() {
        let per: Vec<HorizonSummary> = [0.5, 1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&t| HorizonSummary { horizon: t, max_ratio: 3.0 * (1.0f64 + t).powf(0.4), max_random_ratio: 0.0, degenerate: 0 })
            .collect();
        let (slope, intercept) = fit_growth(&per);
        assert!((slope - 0.4).abs() < 1e-12);
        assert!((intercept.exp() - 3.0).abs() < 1e-12);
    }
}
