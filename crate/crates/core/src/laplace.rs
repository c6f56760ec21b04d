//! Laplace-domain check of the weak-solution property.
//!
//! The solution is extended past T by the same representation formula with
//! the source set to zero on (T, ∞). With V_k(p) = ∫_0^∞ e^{-pt} v_k(t) dt
//! every mode must satisfy the resolvent identity
//!
//! (p^α + λ_k) V_k(p) = p^{α-1} u_{0,k} + p^{α-2} u_{1,k} + F_k(p),
//!
//! where F_k(p) = ∫_0^T e^{-pt} f_k(t) dt. The transform is truncated at
//! T_max and computed by Gauss-Legendre panels refined geometrically
//! towards t = 0 and t = T, where v is least smooth. F_k is exact for the
//! piecewise-linear source.

use std::sync::Arc;

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check, Error, Result};
use crate::linear::{LinearData, SolutionTrajectory, SourceTerm, TimeGrid};
use crate::mlf::MLParams;
use crate::propagators::{KernelSet, PropagatorKind};
use crate::quad;
use crate::spectral::{EigenBasis, ModalCoeffs};

/// Probe points and truncation of the transform quadrature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplaceProbe {
    pub p_values: Vec<f64>,
    /// Truncation time T_max of the transform integral.
    pub t_max: f64,
    /// Gauss-Legendre nodes per panel.
    pub order: usize,
    /// Largest panel width away from the refined points.
    pub max_panel: f64,
}

impl LaplaceProbe {
    pub fn new(p_values: Vec<f64>, t_max: f64) -> Result<Self> {
        check(!p_values.is_empty(), || Error::Validation("probe needs at least one p value".into()))?;
        for &p in &p_values {
            check(p.is_finite() && p > 0.0, || Error::Domain(format!("Laplace parameter must be positive, got {p}")))?;
        }
        check(t_max.is_finite() && t_max > 0.0, || {
            Error::Validation(format!("truncation time must be positive, got {t_max}"))
        })?;
        Ok(Self { p_values, t_max, order: 16, max_panel: 0.25 })
    }

    /// `count` log-spaced values on [p_min, p_max].
    pub fn log_spaced(p_min: f64, p_max: f64, count: usize, t_max: f64) -> Result<Self> {
        check(p_min > 0.0 && p_max >= p_min && count >= 1, || {
            Error::Domain(format!("invalid probe range [{p_min}, {p_max}] with {count} points"))
        })?;
        let p = if count == 1 {
            vec![p_min]
        } else {
            let (a, b) = (p_min.ln(), p_max.ln());
            (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
        };
        Self::new(p, t_max)
    }

    /// 16 points on [0.5, 20] with T_max = 5 T.
    pub fn default_for(horizon: f64) -> Result<Self> {
        Self::log_spaced(0.5, 20.0, 16, 5.0 * horizon)
    }

    /// Quadrature nodes and weights on (0, T_max), refined towards 0 and
    /// towards the source horizon.
    fn rule(&self, horizon: f64) -> (Vec<f64>, Vec<f64>) {
        let mut breaks = vec![0.0, self.t_max];
        let steps = (self.t_max / self.max_panel).ceil() as usize;
        breaks.extend((1..steps).map(|i| self.t_max * i as f64 / steps as f64));
        let near_zero = horizon.min(self.t_max).min(1.0);
        breaks.extend((1..=40).map(|j| near_zero * 0.5f64.powi(j)));
        if horizon < self.t_max {
            breaks.push(horizon);
            let side = (self.t_max - horizon).min(horizon).min(1.0);
            breaks.extend((1..=30).map(|j| horizon + side * 0.5f64.powi(j)));
            breaks.extend((1..=30).map(|j| horizon - side * 0.5f64.powi(j)));
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * self.t_max);
        quad::gauss_legendre_on_breaks(&breaks, self.order)
    }
}

/// The extension v sampled at the transform quadrature nodes, plus t = 0.
#[derive(Debug, Clone)]
pub struct ExtendedSolution {
    pub trajectory: SolutionTrajectory,
    /// Quadrature weight of each node (zero for t = 0).
    pub weights: Vec<f64>,
    /// End T of the source support.
    pub horizon: f64,
}

/// Evaluates u_k(t) = S1 u0 + S2 u1 + ∫_0^{min(t,T)} S3(t-s) f(s) ds at
/// arbitrary times, with f zero beyond the grid horizon.
pub fn evaluate_extension(
    basis: &EigenBasis,
    alpha: f64,
    data: &LinearData,
    grid: &TimeGrid,
    times: &[f64],
) -> Result<Array2<f64>> {
    MLParams::new(alpha, 1.0)?;
    let n = basis.mode_count();
    check(data.u0.len() == n && data.u1.len() == n, || {
        Error::Validation(format!("initial data must have {n} modal coefficients"))
    })?;
    check(data.source.modal_samples.dim() == (grid.nodes().len(), n), || {
        Error::Validation("source shape does not match its time grid".into())
    })?;
    check(times.iter().all(|t| t.is_finite() && *t >= 0.0), || {
        Error::Domain("evaluation times must be nonnegative".into())
    })?;
    let lambda = basis.eigenvalues();
    let t_top = times.iter().cloned().fold(grid.horizon(), f64::max);
    let kernels = KernelSet::new(alpha, lambda.iter().cloned().fold(0.0, f64::max) * t_top.powf(alpha))?;
    let nodes = grid.nodes();
    let f = &data.source.modal_samples;
    let columns: Vec<Vec<f64>> = (0..n).map(|k| f.column(k).to_vec()).collect();
    let slopes: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| (0..nodes.len() - 1).map(|j| (c[j + 1] - c[j]) / (nodes[j + 1] - nodes[j])).collect())
        .collect();
    let has_source = !data.source.is_zero();
    let rows: Vec<Vec<f64>> = times
        .par_iter()
        .map(|&t| {
            if t == 0.0 {
                return data.u0.to_vec();
            }
            (0..n)
                .map(|k| {
                    let l = lambda[k];
                    let mut u = kernels.kernel(PropagatorKind::S1, l, t) * data.u0[k]
                        + kernels.kernel(PropagatorKind::S2, l, t) * data.u1[k];
                    if has_source {
                        u += duhamel_at(&kernels, l, nodes, &columns[k], &slopes[k], t);
                    }
                    u
                })
                .collect()
        })
        .collect();
    Ok(Array2::from_shape_fn((times.len(), n), |(i, k)| rows[i][k]))
}

/// By parts against K0 and K1, truncating the last subinterval at t and
/// adding the jump of the zero extension at T.
fn duhamel_at(kernels: &KernelSet, lambda: f64, nodes: &[f64], f: &[f64], slopes: &[f64], t: f64) -> f64 {
    let m = nodes.len() - 1;
    let mut acc = f[0] * kernels.k0(lambda, t);
    let mut prev = kernels.k1(lambda, t);
    for j in 0..m {
        if nodes[j] >= t {
            break;
        }
        let tau = t - nodes[j + 1];
        let next = if tau > 0.0 { kernels.k1(lambda, tau) } else { 0.0 };
        acc += slopes[j] * (prev - next);
        prev = next;
    }
    if t > nodes[m] {
        acc -= f[m] * kernels.k0(lambda, t - nodes[m]);
    }
    acc
}

/// Computes the extension on the probe's quadrature nodes.
pub fn extend_solution(
    basis: Arc<EigenBasis>,
    alpha: f64,
    u0: &ModalCoeffs,
    u1: &ModalCoeffs,
    f: &SourceTerm,
    grid: &TimeGrid,
    probe: &LaplaceProbe,
) -> Result<ExtendedSolution> {
    check(probe.t_max >= grid.horizon(), || {
        Error::Validation(format!("T_max = {} is below the solution horizon {}", probe.t_max, grid.horizon()))
    })?;
    let (x, w) = probe.rule(grid.horizon());
    let mut times = Vec::with_capacity(x.len() + 1);
    times.push(0.0);
    times.extend_from_slice(&x);
    let mut weights = Vec::with_capacity(times.len());
    weights.push(0.0);
    weights.extend_from_slice(&w);
    let data = LinearData { u0: u0.clone(), u1: u1.clone(), source: f.clone() };
    let modal_u = evaluate_extension(&basis, alpha, &data, grid, &times)?;
    let ext_grid = Arc::new(TimeGrid::from_nodes(times)?);
    let trajectory = SolutionTrajectory::from_samples(basis, alpha, ext_grid, modal_u)?;
    Ok(ExtendedSolution { trajectory, weights, horizon: grid.horizon() })
}

/// V_k(p) for every probe value, shape (P, N), with the truncation
/// estimates e^{-pT_max} sup_{[T, T_max]} |v_k| / p of the same shape.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModalTransforms {
    pub p_values: Vec<f64>,
    pub values: Array2<f64>,
    pub tail_bounds: Array2<f64>,
}

/// Transforms an extension by its quadrature weights.
pub fn transform(ext: &ExtendedSolution, probe: &LaplaceProbe) -> ModalTransforms {
    let t = ext.trajectory.times();
    let u = &ext.trajectory.modal_u;
    let n = u.ncols();
    let t_max = probe.t_max;
    // sup |v_k| over the extension window [T, T_max], where v is source-free.
    let start = t.partition_point(|&x| x < ext.horizon.min(t_max));
    let sup: Vec<f64> = (0..n)
        .map(|k| u.column(k).iter().skip(start).fold(0.0f64, |m, v| m.max(v.abs())))
        .collect();
    let rows: Vec<Vec<f64>> = probe
        .p_values
        .par_iter()
        .map(|&p| {
            let mut acc = vec![0.0; n];
            for (j, (&tj, &wj)) in t.iter().zip(&ext.weights).enumerate() {
                if wj == 0.0 {
                    continue;
                }
                let e = wj * (-p * tj).exp();
                for (a, v) in acc.iter_mut().zip(u.row(j)) {
                    *a += e * v;
                }
            }
            acc
        })
        .collect();
    let np = probe.p_values.len();
    ModalTransforms {
        p_values: probe.p_values.clone(),
        values: Array2::from_shape_fn((np, n), |(i, k)| rows[i][k]),
        tail_bounds: Array2::from_shape_fn((np, n), |(i, k)| {
            let p = probe.p_values[i];
            (-p * t_max).exp() * sup[k] / p
        }),
    }
}

/// V_k(p) of the computed solution, see [`extend_solution`] and [`transform`].
pub fn modal_laplace(
    basis: Arc<EigenBasis>,
    alpha: f64,
    u0: &ModalCoeffs,
    u1: &ModalCoeffs,
    f: &SourceTerm,
    grid: &TimeGrid,
    probe: &LaplaceProbe,
) -> Result<ModalTransforms> {
    let ext = extend_solution(basis, alpha, u0, u1, f, grid, probe)?;
    Ok(transform(&ext, probe))
}

/// F_k(p) = ∫_0^T e^{-pt} f_k(t) dt, exact for the piecewise-linear source.
pub fn source_transform(f: &SourceTerm, grid: &TimeGrid, p: f64) -> Result<Vec<f64>> {
    check(p.is_finite() && p > 0.0, || Error::Domain(format!("Laplace parameter must be positive, got {p}")))?;
    let t = grid.nodes();
    let s = &f.modal_samples;
    check(s.nrows() == t.len(), || Error::Validation("source rows do not match the grid".into()))?;
    let mut out = vec![0.0; s.ncols()];
    for j in 0..t.len() - 1 {
        let h = t[j + 1] - t[j];
        let x = p * h;
        let scale = (-p * t[j]).exp();
        // ∫_0^h e^{-pτ} dτ and ∫_0^h τ e^{-pτ} dτ.
        let i0 = -(-x).exp_m1() / p;
        let i1 = one_minus_exp_poly(x) / (p * p);
        for (k, o) in out.iter_mut().enumerate() {
            let a = s[[j, k]];
            let m = (s[[j + 1, k]] - a) / h;
            *o += scale * (a * i0 + m * i1);
        }
    }
    Ok(out)
}

/// 1 - e^{-x}(1 + x), by its series where the closed form cancels.
fn one_minus_exp_poly(x: f64) -> f64 {
    if x > 0.05 {
        return 1.0 - (-x).exp() * (1.0 + x);
    }
    // Σ_{n≥2} (-1)^n (n-1) x^n / n!
    let mut term = x * x / 2.0;
    let mut sum = term;
    for n in 3..20 {
        term *= -x / n as f64;
        sum += term * (n - 1) as f64;
    }
    sum
}

/// Resolvent residuals over modes and probe values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub p_values: Vec<f64>,
    /// Worst relative residual over modes, per p.
    pub per_p: Vec<f64>,
    /// Worst relative residual over p, per mode.
    pub per_mode: Vec<f64>,
    /// Largest truncation estimate over p, per mode.
    pub tail_bounds: Vec<f64>,
    /// Largest truncation estimate after the same scaling as the residual.
    pub relative_tail: f64,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

const RESIDUAL_GUARD: f64 = 1e-14;

/// |(p^α + λ_k)V_k(p) - RHS_k(p)| / (|RHS_k(p)| + ε) for given transforms.
pub fn resolvent_residuals(
    basis: &EigenBasis,
    alpha: f64,
    u0: &ModalCoeffs,
    u1: &ModalCoeffs,
    f: &SourceTerm,
    grid: &TimeGrid,
    transforms: &ModalTransforms,
    tolerance: f64,
) -> Result<ResidualReport> {
    let n = basis.mode_count();
    let np = transforms.p_values.len();
    let mut per_p = vec![0.0f64; np];
    let mut per_mode = vec![0.0f64; n];
    let mut tail_bounds = vec![0.0f64; n];
    let mut relative_tail = 0.0f64;
    for (i, &p) in transforms.p_values.iter().enumerate() {
        let fp = source_transform(f, grid, p)?;
        let pa = p.powf(alpha);
        for k in 0..n {
            let rhs = pa / p * u0[k] + pa / (p * p) * u1[k] + fp[k];
            let scale = pa + basis.eigenvalues()[k];
            let denom = rhs.abs() + RESIDUAL_GUARD;
            let res = (scale * transforms.values[[i, k]] - rhs).abs() / denom;
            per_p[i] = per_p[i].max(res);
            per_mode[k] = per_mode[k].max(res);
            let tail = transforms.tail_bounds[[i, k]];
            tail_bounds[k] = tail_bounds[k].max(tail);
            relative_tail = relative_tail.max(scale * tail / denom);
        }
    }
    let max_residual = per_p.iter().cloned().fold(0.0, f64::max);
    Ok(ResidualReport {
        p_values: transforms.p_values.clone(),
        per_p,
        per_mode,
        tail_bounds,
        relative_tail,
        max_residual,
        tolerance,
        pass: max_residual <= tolerance,
    })
}

/// Extends, transforms and checks the resolvent identity. Orders in (0, 2]
/// are accepted so the exponential case α = 1 can serve as a check.
#[allow(clippy::too_many_arguments)]
pub fn verify_weak_solution(
    basis: Arc<EigenBasis>,
    alpha: f64,
    u0: &ModalCoeffs,
    u1: &ModalCoeffs,
    f: &SourceTerm,
    grid: &TimeGrid,
    probe: &LaplaceProbe,
    tolerance: f64,
) -> Result<ResidualReport> {
    let transforms = modal_laplace(basis.clone(), alpha, u0, u1, f, grid, probe)?;
    resolvent_residuals(&basis, alpha, u0, u1, f, grid, &transforms, tolerance)
}
