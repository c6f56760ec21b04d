//! Eigenfunction-expansion solver for the linear problem
//!
//! ∂_t^α u + A u = f,  u(0) = u0,  ∂_t u(0) = u1,
//!
//! through u(t) = S1(t)u0 + S2(t)u1 + ∫_0^t S3(t-s) f(s) ds.
//!
//! Per mode the Duhamel term is a convolution with k(τ) = τ^{α-1}E_{α,α}(-λτ^α),
//! which is weakly singular at τ = 0. The source is taken piecewise linear
//! in time, and the convolution is integrated by parts against the exact
//! primitives
//!
//! K0(τ) = ∫_0^τ k = τ^α E_{α,α+1}(-λτ^α),  K1(τ) = ∫_0^τ K0 = τ^{α+1} E_{α,α+2}(-λτ^α),
//!
//! giving ∫_0^{t_n} k(t_n - s) f(s) ds = f(0) K0(t_n) + Σ_j m_j [K1(t_n - t_j) - K1(t_n - t_{j+1})]
//! with m_j the slope of f on [t_j, t_{j+1}]. The singular factor is never
//! sampled, so the only error is the interpolation of f. The time
//! derivative uses the same identity one level down: k and K0 in place of
//! K0 and K1.

use std::sync::Arc;

use ndarray::{Array2, ArrayView1, Axis};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check, Error, Result};
use crate::norms;
use crate::propagators::{KernelSet, PropagatorKind};
use crate::spectral::{EigenBasis, ModalCoeffs};

/// Strictly increasing time nodes 0 = t_0 < … < t_M = T.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    uniform: bool,
}

impl TimeGrid {
    /// `intervals` equal steps on [0, T].
    pub fn uniform(horizon: f64, intervals: usize) -> Result<Self> {
        check_horizon(horizon, intervals)?;
        let nodes = (0..=intervals).map(|j| horizon * j as f64 / intervals as f64).collect();
        Ok(Self { nodes, uniform: true })
    }

    /// Nodes t_j = T (j/M)^χ, refined towards t = 0 for χ > 1.
    pub fn graded(horizon: f64, intervals: usize, grading: f64) -> Result<Self> {
        check_horizon(horizon, intervals)?;
        check(grading.is_finite() && grading >= 1.0, || {
            Error::Validation(format!("grading exponent must be at least 1, got {grading}"))
        })?;
        if grading == 1.0 {
            return Self::uniform(horizon, intervals);
        }
        let nodes = (0..=intervals)
            .map(|j| horizon * (j as f64 / intervals as f64).powf(grading))
            .collect();
        Ok(Self { nodes, uniform: false })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        check(nodes.len() >= 2 && nodes[0] == 0.0, || {
            Error::Validation("time grid needs at least two nodes starting at 0".into())
        })?;
        check(nodes.windows(2).all(|w| w[1] > w[0]) && nodes.iter().all(|t| t.is_finite()), || {
            Error::Validation("time nodes must be finite and strictly increasing".into())
        })?;
        Ok(Self { nodes, uniform: false })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn horizon(&self) -> f64 {
        *self.nodes.last().expect("non-empty grid")
    }

    /// Number of subintervals M.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// Uniform refinement: each subinterval split in two.
    pub fn refined(&self) -> Self {
        if self.uniform {
            let m = 2 * self.intervals();
            let t = self.horizon();
            return Self { nodes: (0..=m).map(|j| t * j as f64 / m as f64).collect(), uniform: true };
        }
        let mut nodes = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(self.horizon());
        Self { nodes, uniform: false }
    }
}

fn check_horizon(horizon: f64, intervals: usize) -> Result<()> {
    check(horizon.is_finite() && horizon > 0.0, || {
        Error::Validation(format!("time horizon must be positive, got {horizon}"))
    })?;
    check(intervals >= 1, || Error::Validation("time grid needs at least one interval".into()))
}

/// Modal source samples f_k(t_j), piecewise linear between nodes and zero
/// outside (0, T). Shape (M+1, N).
#[derive(Debug, Clone, PartialEq)]
pub struct SourceTerm {
    pub modal_samples: Array2<f64>,
}

impl SourceTerm {
    pub fn zeros(grid: &TimeGrid, modes: usize) -> Self {
        Self { modal_samples: Array2::zeros((grid.nodes().len(), modes)) }
    }

    /// f_k(t) = g(k, t) sampled at the grid nodes (k is 0-based).
    pub fn from_fn(grid: &TimeGrid, modes: usize, g: impl Fn(usize, f64) -> f64) -> Self {
        let t = grid.nodes();
        Self { modal_samples: Array2::from_shape_fn((t.len(), modes), |(j, k)| g(k, t[j])) }
    }

    pub fn is_zero(&self) -> bool {
        self.modal_samples.iter().all(|&v| v == 0.0)
    }

    /// Slopes m_j of every mode on each subinterval, shape (M, N).
    fn slopes(&self, grid: &TimeGrid) -> Array2<f64> {
        let t = grid.nodes();
        let f = &self.modal_samples;
        Array2::from_shape_fn((t.len() - 1, f.ncols()), |(j, k)| (f[[j + 1, k]] - f[[j, k]]) / (t[j + 1] - t[j]))
    }
}

/// Data of a linear solve, kept with the trajectory so derived quantities
/// (time derivative, stability ratios, Laplace checks) can be recomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearData {
    pub u0: ModalCoeffs,
    pub u1: ModalCoeffs,
    pub source: SourceTerm,
}

/// Modal coefficient histories u_k(t_j), optionally with ∂_t u_k(t_j).
#[derive(Debug, Clone)]
pub struct SolutionTrajectory {
    pub basis: Arc<EigenBasis>,
    pub alpha: f64,
    pub grid: Arc<TimeGrid>,
    /// Shape (M+1, N).
    pub modal_u: Array2<f64>,
    pub modal_du: Option<Array2<f64>>,
    pub data: Option<LinearData>,
}

impl SolutionTrajectory {
    /// Builds a trajectory from raw samples (no solver data attached).
    pub fn from_samples(basis: Arc<EigenBasis>, alpha: f64, grid: Arc<TimeGrid>, modal_u: Array2<f64>) -> Result<Self> {
        check(modal_u.dim() == (grid.nodes().len(), basis.mode_count()), || {
            Error::Validation(format!(
                "trajectory shape {:?} does not match ({}, {})",
                modal_u.dim(),
                grid.nodes().len(),
                basis.mode_count()
            ))
        })?;
        Ok(Self { basis, alpha, grid, modal_u, modal_du: None, data: None })
    }

    /// Coefficients at time node j.
    pub fn at(&self, j: usize) -> ArrayView1<'_, f64> {
        self.modal_u.row(j)
    }

    pub fn times(&self) -> &[f64] {
        self.grid.nodes()
    }
}

/// Lag tables of the convolution primitives for one (basis, α, grid).
///
/// On a uniform grid t_n - t_j = t_{n-j}, so M+1 lags suffice; otherwise
/// every pair n ≥ j is stored in triangular order.
#[derive(Debug, Clone)]
struct LagTables {
    uniform: bool,
    /// Shape (lags, N): K0, K1 and k at each lag.
    k0: Array2<f64>,
    k1: Array2<f64>,
    kernel: Array2<f64>,
}

impl LagTables {
    fn build(eigenvalues: &[f64], kernels: &KernelSet, grid: &TimeGrid) -> Self {
        let t = grid.nodes();
        let lags: Vec<f64> = if grid.is_uniform() {
            t.to_vec()
        } else {
            (0..t.len()).flat_map(|n| (0..=n).map(move |j| t[n] - t[j])).collect()
        };
        let n = eigenvalues.len();
        let rows: Vec<[f64; 3]> = lags
            .par_iter()
            .flat_map_iter(|&tau| {
                if tau == 0.0 {
                    vec![[0.0; 3]; n]
                } else {
                    kernels.convolution_row(eigenvalues, tau)
                }
            })
            .collect();
        let pick = |i: usize| Array2::from_shape_fn((lags.len(), n), |(r, k)| rows[r * n + k][i]);
        Self { uniform: grid.is_uniform(), k0: pick(0), k1: pick(1), kernel: pick(2) }
    }

    #[inline]
    fn index(&self, n: usize, j: usize) -> usize {
        if self.uniform {
            n - j
        } else {
            n * (n + 1) / 2 + j
        }
    }
}

/// Reusable solver for a fixed basis, order and time grid. The Picard
/// iteration calls [`LinearSolver::duhamel`] once per iterate.
#[derive(Debug, Clone)]
pub struct LinearSolver {
    basis: Arc<EigenBasis>,
    alpha: f64,
    grid: Arc<TimeGrid>,
    kernels: KernelSet,
    tables: LagTables,
    /// S1 and S2 kernels, shape (M+1, N).
    s1: Array2<f64>,
    s2: Array2<f64>,
    ds1: Array2<f64>,
}

pub fn check_order(alpha: f64) -> Result<()> {
    check(alpha.is_finite() && alpha > 1.0 && alpha < 2.0, || {
        Error::Parameter(format!("fractional order must satisfy 1 < α < 2, got {alpha}"))
    })
}

impl LinearSolver {
    pub fn new(basis: Arc<EigenBasis>, alpha: f64, grid: Arc<TimeGrid>) -> Result<Self> {
        check_order(alpha)?;
        Self::new_unchecked(basis, alpha, grid)
    }

    /// Accepts any order in (0, 2]; only the classical-wave identity tests
    /// go outside 1 < α < 2.
    pub fn new_unchecked(basis: Arc<EigenBasis>, alpha: f64, grid: Arc<TimeGrid>) -> Result<Self> {
        let lambda = basis.eigenvalues().to_vec();
        let lambda_max = lambda.iter().cloned().fold(0.0, f64::max);
        let kernels = KernelSet::new(alpha, lambda_max * grid.horizon().powf(alpha))?;
        let tables = LagTables::build(&lambda, &kernels, &grid);
        let t = grid.nodes();
        let table = |kind: PropagatorKind| {
            Array2::from_shape_fn((t.len(), lambda.len()), |(j, k)| {
                if t[j] == 0.0 && kind == PropagatorKind::DS1 {
                    0.0
                } else {
                    kernels.kernel(kind, lambda[k], t[j])
                }
            })
        };
        let (s1, s2, ds1) = (table(PropagatorKind::S1), table(PropagatorKind::S2), table(PropagatorKind::DS1));
        Ok(Self { basis, alpha, grid, kernels, tables, s1, s2, ds1 })
    }

    /// The tabulated kernels, reused by the Laplace checks.
    pub fn kernels(&self) -> &KernelSet {
        &self.kernels
    }

    pub fn basis(&self) -> &Arc<EigenBasis> {
        &self.basis
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn check_data(&self, u0: &ModalCoeffs, u1: &ModalCoeffs, f: &SourceTerm) -> Result<()> {
        let n = self.basis.mode_count();
        check(u0.len() == n && u1.len() == n, || {
            Error::Validation(format!("initial data must have {n} modal coefficients"))
        })?;
        check(f.modal_samples.dim() == (self.grid.nodes().len(), n), || {
            Error::Validation(format!(
                "source shape {:?} does not match ({}, {n})",
                f.modal_samples.dim(),
                self.grid.nodes().len()
            ))
        })
    }

    /// S1(t_j)u0 + S2(t_j)u1 at every node.
    pub fn homogeneous(&self, u0: &ModalCoeffs, u1: &ModalCoeffs) -> Result<Array2<f64>> {
        self.check_data(u0, u1, &SourceTerm::zeros(&self.grid, self.basis.mode_count()))?;
        let a = ArrayView1::from(&u0[..]).insert_axis(Axis(0));
        let b = ArrayView1::from(&u1[..]).insert_axis(Axis(0));
        Ok(&self.s1 * &a + &self.s2 * &b)
    }

    /// ∫_0^{t_n} S3(t_n - s) f(s) ds at every node n.
    pub fn duhamel(&self, f: &SourceTerm) -> Result<Array2<f64>> {
        let n = self.basis.mode_count();
        check(f.modal_samples.dim() == (self.grid.nodes().len(), n), || {
            Error::Validation("source shape does not match the solver".into())
        })?;
        Ok(self.convolve(f, &self.tables.k0, &self.tables.k1))
    }

    /// ∫_0^{t_n} (t_n - s)^{α-2} E_{α,α-1}(-λ(t_n - s)^α) f(s) ds at every node.
    fn duhamel_derivative(&self, f: &SourceTerm) -> Array2<f64> {
        self.convolve(f, &self.tables.kernel, &self.tables.k0)
    }

    /// f(0) P(t_n) + Σ_j m_j [Q(t_n - t_j) - Q(t_n - t_{j+1})] where P is the
    /// primitive of the kernel and Q the primitive of P.
    fn convolve(&self, f: &SourceTerm, p: &Array2<f64>, q: &Array2<f64>) -> Array2<f64> {
        let steps = self.grid.intervals();
        let modes = self.basis.mode_count();
        if f.is_zero() {
            return Array2::zeros((steps + 1, modes));
        }
        let slopes = f.slopes(&self.grid);
        let columns: Vec<Vec<f64>> = (0..modes)
            .into_par_iter()
            .map(|k| {
                let mut out = vec![0.0; steps + 1];
                let f0 = f.modal_samples[[0, k]];
                for (n, slot) in out.iter_mut().enumerate().skip(1) {
                    let mut acc = f0 * p[[self.tables.index(n, 0), k]];
                    for j in 0..n {
                        let m = slopes[[j, k]];
                        if m != 0.0 {
                            acc += m * (q[[self.tables.index(n, j), k]] - q[[self.tables.index(n, j + 1), k]]);
                        }
                    }
                    *slot = acc;
                }
                out
            })
            .collect();
        Array2::from_shape_fn((steps + 1, modes), |(n, k)| columns[k][n])
    }

    pub fn solve(&self, u0: &ModalCoeffs, u1: &ModalCoeffs, f: &SourceTerm) -> Result<SolutionTrajectory> {
        self.check_data(u0, u1, f)?;
        let mut modal_u = self.homogeneous(u0, u1)? + self.duhamel(f)?;
        // u(t_0) = u0 holds by construction; store it exactly.
        modal_u.row_mut(0).assign(&ArrayView1::from(&u0[..]));
        Ok(SolutionTrajectory {
            basis: self.basis.clone(),
            alpha: self.alpha,
            grid: self.grid.clone(),
            modal_u,
            modal_du: None,
            data: Some(LinearData { u0: u0.clone(), u1: u1.clone(), source: f.clone() }),
        })
    }

    /// ∂_t u_k(t_j) = dS1 u0 + dS2 u1 + derivative Duhamel term.
    pub fn derivative(&self, u0: &ModalCoeffs, u1: &ModalCoeffs, f: &SourceTerm) -> Result<Array2<f64>> {
        self.check_data(u0, u1, f)?;
        let a = ArrayView1::from(&u0[..]).insert_axis(Axis(0));
        let b = ArrayView1::from(&u1[..]).insert_axis(Axis(0));
        let mut du = &self.ds1 * &a + &self.s1 * &b + self.duhamel_derivative(f);
        du.row_mut(0).assign(&ArrayView1::from(&u1[..]));
        Ok(du)
    }
}

/// Solves the linear problem on `grid` for data (u0, u1, f).
pub fn solve_linear(
    basis: Arc<EigenBasis>,
    alpha: f64,
    u0: &ModalCoeffs,
    u1: &ModalCoeffs,
    f: &SourceTerm,
    grid: Arc<TimeGrid>,
) -> Result<SolutionTrajectory> {
    LinearSolver::new(basis, alpha, grid)?.solve(u0, u1, f)
}

/// Fills `modal_du` of a trajectory produced by [`solve_linear`].
pub fn solve_linear_derivative(trajectory: &SolutionTrajectory) -> Result<SolutionTrajectory> {
    let data = trajectory.data.as_ref().ok_or_else(|| {
        Error::Validation("trajectory carries no solver data; derivative needs u0, u1 and f".into())
    })?;
    check_order(trajectory.alpha)?;
    let solver = LinearSolver::new_unchecked(trajectory.basis.clone(), trajectory.alpha, trajectory.grid.clone())?;
    let du = solver.derivative(&data.u0, &data.u1, &data.source)?;
    Ok(SolutionTrajectory { modal_du: Some(du), ..trajectory.clone() })
}

/// Ratios of the two a-priori estimates of the linear theory:
///
/// * `c_l2`: ‖u‖_{C([0,T];L²)} / (‖u0‖ + ‖u1‖_{H^{-1}} + ‖f‖_{L¹L²});
/// * `w11`: ‖u‖_{W^{1,1}(0,T;L²)} / (‖u0‖_{H^{2r}} + ‖u1‖_{H^{-1}} + ‖f‖_{L¹L²}).
///
/// Zero data gives ratio 0 by convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    pub c_l2_lhs: f64,
    pub c_l2_rhs: f64,
    pub c_l2: f64,
    pub w11_lhs: f64,
    pub w11_rhs: f64,
    pub w11: f64,
    pub r: f64,
}

pub fn stability_report(trajectory: &SolutionTrajectory, r: f64) -> Result<StabilityReport> {
    check(r > 0.0 && r < 0.25, || Error::Domain(format!("the W^{{1,1}} estimate needs r ∈ (0, 1/4), got {r}")))?;
    let data = trajectory.data.as_ref().ok_or_else(|| {
        Error::Validation("stability report needs the trajectory's solver data".into())
    })?;
    let basis = &trajectory.basis;
    let with_du = match trajectory.modal_du {
        Some(_) => trajectory.clone(),
        None => solve_linear_derivative(trajectory)?,
    };
    let f_norm = norms::source_l1_l2(&data.source, &trajectory.grid);
    let u1_norm = norms::sobolev_norm(basis, &data.u1, -0.5)?;
    let c_l2_lhs = norms::sup_sobolev(trajectory, 0.0);
    let c_l2_rhs = norms::sobolev_norm(basis, &data.u0, 0.0)? + u1_norm + f_norm;
    let w11_lhs = norms::w1l_norm_unchecked(&with_du, 1.0)?;
    let w11_rhs = norms::sobolev_norm(basis, &data.u0, r)? + u1_norm + f_norm;
    let ratio = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    Ok(StabilityReport {
        c_l2_lhs,
        c_l2_rhs,
        c_l2: ratio(c_l2_lhs, c_l2_rhs),
        w11_lhs,
        w11_rhs,
        w11: ratio(w11_lhs, w11_rhs),
        r,
    })
}
