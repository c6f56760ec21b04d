//! Norms used by the estimates: spectral Sobolev norms D(A^σ), spatial
//! L^q norms on the quadrature grid, mixed L^p(0,T;L^q) norms, sup norms
//! in time, W^{1,ℓ}(0,T;L²) and the X_T / Y_T norms of the fixed-point
//! argument.
//!
//! Time integrals treat the spatial norm profile t ↦ ‖u(t)‖ as piecewise
//! linear between grid nodes and integrate its p-th power exactly on each
//! subinterval. Sup norms are maxima over grid nodes.

use ndarray::{Array2, ArrayView1, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check, Error, Result};
use crate::linear::{SolutionTrajectory, SourceTerm, TimeGrid};
use crate::quad;
use crate::spectral::EigenBasis;

/// Exponents of L^p(0,T;L^q(Ω)); `f64::INFINITY` is allowed for either.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedNormSpec {
    pub p: f64,
    pub q: f64,
}

impl MixedNormSpec {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        check(p >= 1.0 && q >= 1.0, || Error::Domain(format!("mixed norm needs p, q ≥ 1, got p={p}, q={q}")))?;
        Ok(Self { p, q })
    }
}

/// (Σ λ_k^{2σ} c_k²)^{1/2}. σ = 0 is the L² norm and σ = -1/2 the H^{-1} norm.
pub fn sobolev_norm(basis: &EigenBasis, coeffs: &[f64], sigma: f64) -> Result<f64> {
    check(coeffs.len() == basis.mode_count(), || {
        Error::Validation(format!("expected {} coefficients, got {}", basis.mode_count(), coeffs.len()))
    })?;
    Ok(weighted_l2(basis.eigenvalues(), ArrayView1::from(coeffs), sigma))
}

fn weighted_l2(lambda: &[f64], c: ArrayView1<'_, f64>, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return c.dot(&c).sqrt();
    }
    lambda
        .iter()
        .zip(c.iter())
        .map(|(l, v)| l.powf(2.0 * sigma) * v * v)
        .sum::<f64>()
        .sqrt()
}

/// ‖Σ c_k φ_k‖_{L^q} by quadrature on the basis grid (max over nodes for q = ∞).
pub fn spatial_lq(basis: &EigenBasis, coeffs: &[f64], q: f64) -> Result<f64> {
    check(q >= 1.0, || Error::Domain(format!("L^q norm needs q ≥ 1, got {q}")))?;
    let samples = basis.synthesize(coeffs)?;
    Ok(lq_of_samples(basis, &samples, q))
}

pub(crate) fn lq_of_samples(basis: &EigenBasis, samples: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return samples.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let w = &basis.grid().weights;
    let sum: f64 = samples.iter().zip(w.iter()).map(|(v, w)| w * v.abs().powf(q)).sum();
    sum.powf(1.0 / q)
}

/// Spatial L^q norm at every time node of a modal history, shape (M+1, N).
pub fn spatial_lq_profile(basis: &EigenBasis, modal: &Array2<f64>, q: f64) -> Result<Vec<f64>> {
    check(q >= 1.0, || Error::Domain(format!("L^q norm needs q ≥ 1, got {q}")))?;
    check(modal.ncols() == basis.mode_count(), || Error::Validation("modal history width mismatch".into()))?;
    Ok((0..modal.nrows())
        .into_par_iter()
        .map(|j| {
            let samples = modal.row(j).dot(basis.phi());
            lq_of_samples(basis, samples.as_slice().expect("contiguous"), q)
        })
        .collect())
}

/// D(A^σ) norm at every time node.
pub fn sobolev_profile(basis: &EigenBasis, modal: &Array2<f64>, sigma: f64) -> Vec<f64> {
    modal.axis_iter(Axis(0)).map(|row| weighted_l2(basis.eigenvalues(), row, sigma)).collect()
}

/// (∫_0^T g(t)^p dt)^{1/p} for a nonnegative profile g that is linear
/// between the nodes; max over nodes for p = ∞.
pub fn temporal_lp(times: &[f64], profile: &[f64], p: f64) -> f64 {
    debug_assert_eq!(times.len(), profile.len());
    if p.is_infinite() {
        return profile.iter().fold(0.0, |m, v| m.max(*v));
    }
    let (gx, gw) = quad::gauss_legendre(16);
    let mut total = 0.0;
    for (t, g) in times.windows(2).zip(profile.windows(2)) {
        let h = t[1] - t[0];
        let (a, b) = (g[0], g[1]);
        let top = a.max(b);
        if top == 0.0 {
            continue;
        }
        if (b - a).abs() <= 0.5 * top {
            // Nearly flat segment: the closed form cancels, Gauss-Legendre does not.
            let s: f64 = gx
                .iter()
                .zip(&gw)
                .map(|(x, w)| w * (a + (b - a) * 0.5 * (1.0 + x)).powf(p))
                .sum();
            total += 0.5 * h * s;
        } else {
            total += h * (b.powf(p + 1.0) - a.powf(p + 1.0)) / ((p + 1.0) * (b - a));
        }
    }
    total.powf(1.0 / p)
}

/// ‖u‖_{L^p(0,T;L^q(Ω))}.
pub fn mixed_lp_lq(trajectory: &SolutionTrajectory, spec: MixedNormSpec) -> Result<f64> {
    let profile = spatial_lq_profile(&trajectory.basis, &trajectory.modal_u, spec.q)?;
    Ok(temporal_lp(trajectory.times(), &profile, spec.p))
}

/// ‖u‖_{C([0,T];D(A^σ))} as the maximum over grid nodes.
pub fn sup_sobolev(trajectory: &SolutionTrajectory, sigma: f64) -> f64 {
    sobolev_profile(&trajectory.basis, &trajectory.modal_u, sigma)
        .into_iter()
        .fold(0.0, f64::max)
}

/// ‖f‖_{L¹(0,T;L²)} of a modal source.
pub fn source_l1_l2(source: &SourceTerm, grid: &TimeGrid) -> f64 {
    let profile: Vec<f64> = source
        .modal_samples
        .axis_iter(Axis(0))
        .map(|row| row.dot(&row).sqrt())
        .collect();
    temporal_lp(grid.nodes(), &profile, 1.0)
}

/// ‖u‖_{L^ℓ(0,T;L²)} + ‖∂_t u‖_{L^ℓ(0,T;L²)}, requiring 1 ≤ ℓ < 1/(2-α).
pub fn w1l_norm(trajectory: &SolutionTrajectory, ell: f64) -> Result<f64> {
    let alpha = trajectory.alpha;
    check(ell >= 1.0 && ell < 1.0 / (2.0 - alpha), || {
        Error::Domain(format!("W^{{1,ℓ}} norm needs 1 ≤ ℓ < 1/(2-α) = {}, got ℓ = {ell}", 1.0 / (2.0 - alpha)))
    })?;
    w1l_norm_unchecked(trajectory, ell)
}

pub(crate) fn w1l_norm_unchecked(trajectory: &SolutionTrajectory, ell: f64) -> Result<f64> {
    let du = trajectory.modal_du.as_ref().ok_or_else(|| {
        Error::Validation("W^{1,ℓ} norm needs the time derivative; run solve_linear_derivative first".into())
    })?;
    let t = trajectory.times();
    let basis = &trajectory.basis;
    let u_part = temporal_lp(t, &sobolev_profile(basis, &trajectory.modal_u, 0.0), ell);
    let du_part = temporal_lp(t, &sobolev_profile(basis, du, 0.0), ell);
    Ok(u_part + du_part)
}

/// ‖u‖_{X_T} = ‖u‖_{C([0,T];L²)} + ‖u‖_{L^b(0,T;L^{2b})}.
pub fn x_norm(basis: &EigenBasis, times: &[f64], modal: &Array2<f64>, b: f64) -> Result<f64> {
    let sup = sobolev_profile(basis, modal, 0.0).into_iter().fold(0.0, f64::max);
    let lb = temporal_lp(times, &spatial_lq_profile(basis, modal, 2.0 * b)?, b);
    Ok(sup + lb)
}

/// ‖u‖_{Y_T} = ‖u‖_{L^p(0,T;L^q)} + ‖u‖_{C([0,T];H^{2r})}.
pub fn y_norm(basis: &EigenBasis, times: &[f64], modal: &Array2<f64>, p: f64, q: f64, r: f64) -> Result<f64> {
    let lp = temporal_lp(times, &spatial_lq_profile(basis, modal, q)?, p);
    let sup = sobolev_profile(basis, modal, r).into_iter().fold(0.0, f64::max);
    Ok(lp + sup)
}
