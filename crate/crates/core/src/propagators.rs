//! Solution operators S1, S2, S3 and their time derivatives, applied
//! diagonally in an eigenbasis.
//!
//! Per mode with eigenvalue λ the scalar kernels are
//!
//! | kind | kernel                      |
//! |------|-----------------------------|
//! | S1   | E_{α,1}(-λt^α)              |
//! | S2   | t E_{α,2}(-λt^α)            |
//! | S3   | t^{α-1} E_{α,α}(-λt^α)      |
//! | dS1  | -λ t^{α-1} E_{α,α}(-λt^α)   |
//! | dS2  | E_{α,1}(-λt^α)              |
//! | dS3  | t^{α-2} E_{α,α-1}(-λt^α)    |
//!
//! dS3 is weakly singular at t = 0 for α < 2; integrals against it are
//! handled in closed form by [`crate::linear`].

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check, Error, Result};
use crate::mlf::{ml_neg, MLParams, MittagLefflerTable};
use crate::spectral::{EigenBasis, ModalCoeffs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PropagatorKind {
    S1,
    S2,
    S3,
    DS1,
    DS2,
    DS3,
}

impl PropagatorKind {
    /// Kernels whose value at t = 0 is undefined or infinite for some α.
    pub fn singular_at_zero(self) -> bool {
        matches!(self, Self::S3 | Self::DS1 | Self::DS3)
    }
}

/// Scalar kernel of `kind` for eigenvalue `lambda` at time `t`.
pub fn kernel(kind: PropagatorKind, alpha: f64, lambda: f64, t: f64) -> Result<f64> {
    MLParams::new(alpha, 1.0)?;
    check(t.is_finite() && t >= 0.0, || Error::Domain(format!("propagators need t ≥ 0, got {t}")))?;
    check(t > 0.0 || !kind.singular_at_zero(), || {
        Error::Domain(format!("{kind:?} kernel is singular at t = 0"))
    })?;
    check(lambda.is_finite() && lambda >= 0.0, || {
        Error::Domain(format!("eigenvalue must be nonnegative, got {lambda}"))
    })?;
    Ok(kernel_unchecked(kind, alpha, lambda, t))
}

pub(crate) fn kernel_unchecked(kind: PropagatorKind, alpha: f64, lambda: f64, t: f64) -> f64 {
    let ta = t.powf(alpha);
    let y = lambda * ta;
    match kind {
        PropagatorKind::S1 | PropagatorKind::DS2 => ml_neg(alpha, 1.0, y),
        PropagatorKind::S2 => t * ml_neg(alpha, 2.0, y),
        PropagatorKind::S3 => t.powf(alpha - 1.0) * ml_neg(alpha, alpha, y),
        PropagatorKind::DS1 => -lambda * t.powf(alpha - 1.0) * ml_neg(alpha, alpha, y),
        PropagatorKind::DS3 => t.powf(alpha - 2.0) * ml_neg(alpha, alpha - 1.0, y),
    }
}

/// Applies the propagator: k-th output = kernel(α, λ_k, t) · c_k.
pub fn apply(kind: PropagatorKind, basis: &EigenBasis, alpha: f64, t: f64, coeffs: &ModalCoeffs) -> Result<ModalCoeffs> {
    check(coeffs.len() == basis.mode_count(), || {
        Error::Validation(format!("expected {} coefficients, got {}", basis.mode_count(), coeffs.len()))
    })?;
    basis
        .eigenvalues()
        .iter()
        .zip(coeffs.iter())
        .map(|(&l, &c)| kernel(kind, alpha, l, t).map(|k| k * c))
        .collect::<Result<Vec<_>>>()
        .map(ModalCoeffs)
}

/// Tabulated kernels for one order α, valid for λ t^α up to a bound fixed
/// at construction (larger arguments are still exact, just slower).
///
/// Besides the six propagator kernels this provides the convolution
/// primitives K0(τ) = τ^α E_{α,α+1}(-λτ^α) and K1(τ) = τ^{α+1} E_{α,α+2}(-λτ^α).
#[derive(Debug, Clone)]
pub struct KernelSet {
    alpha: f64,
    /// E_{α,β} tables for β = 1, 2, α-1, α, α+1, α+2.
    e: [MittagLefflerTable; 6],
}

impl KernelSet {
    pub fn new(alpha: f64, y_max: f64) -> Result<Self> {
        MLParams::new(alpha, 1.0)?;
        let betas = [1.0, 2.0, alpha - 1.0, alpha, alpha + 1.0, alpha + 2.0];
        let tables = betas
            .par_iter()
            .map(|&b| MittagLefflerTable::new(MLParams { alpha, beta: b }, y_max))
            .collect::<Result<Vec<_>>>()?;
        let e: [MittagLefflerTable; 6] = tables.try_into().expect("six tables");
        Ok(Self { alpha, e })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Propagator kernel; the caller guarantees t > 0 for singular kinds.
    pub fn kernel(&self, kind: PropagatorKind, lambda: f64, t: f64) -> f64 {
        let a = self.alpha;
        let y = lambda * t.powf(a);
        match kind {
            PropagatorKind::S1 | PropagatorKind::DS2 => self.e[0].eval(y),
            PropagatorKind::S2 => t * self.e[1].eval(y),
            PropagatorKind::S3 => t.powf(a - 1.0) * self.e[3].eval(y),
            PropagatorKind::DS1 => -lambda * t.powf(a - 1.0) * self.e[3].eval(y),
            PropagatorKind::DS3 => t.powf(a - 2.0) * self.e[2].eval(y),
        }
    }

    /// K0(τ) = ∫_0^τ S3 kernel.
    pub fn k0(&self, lambda: f64, tau: f64) -> f64 {
        let ta = tau.powf(self.alpha);
        ta * self.e[4].eval(lambda * ta)
    }

    /// (K0, K1, S3 kernel) at τ > 0 for every eigenvalue, sharing the powers of τ.
    pub(crate) fn convolution_row(&self, eigenvalues: &[f64], tau: f64) -> Vec<[f64; 3]> {
        let ta = tau.powf(self.alpha);
        let ta1 = ta / tau;
        eigenvalues
            .iter()
            .map(|&l| {
                let y = l * ta;
                [ta * self.e[4].eval(y), ta * tau * self.e[5].eval(y), ta1 * self.e[3].eval(y)]
            })
            .collect()
    }

    /// K1(τ) = ∫_0^τ K0.
    pub fn k1(&self, lambda: f64, tau: f64) -> f64 {
        let ta = tau.powf(self.alpha);
        ta * tau * self.e[5].eval(lambda * ta)
    }
}

/// Kernel values for every (time, eigenvalue) pair, shape (times, modes).
pub fn kernel_table(kind: PropagatorKind, alpha: f64, eigenvalues: &[f64], times: &[f64]) -> Result<Array2<f64>> {
    MLParams::new(alpha, 1.0)?;
    for &t in times {
        kernel(kind, alpha, 0.0, t)?;
    }
    let lambda_max = eigenvalues.iter().cloned().fold(0.0, f64::max);
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let set = KernelSet::new(alpha, lambda_max * t_max.powf(alpha))?;
    let n = eigenvalues.len();
    let flat: Vec<f64> = times
        .par_iter()
        .flat_map_iter(|&t| eigenvalues.iter().map(|&l| set.kernel(kind, l, t)).collect::<Vec<_>>())
        .collect();
    Ok(Array2::from_shape_vec((times.len(), n), flat).expect("table shape"))
}
