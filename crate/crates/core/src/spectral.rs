//! Dirichlet eigenpairs of the spatial operator and the maps between grid
//! samples and modal coefficients.
//!
//! Three families are provided: the analytic sine basis of an interval,
//! tensor sine bases of rectangles and boxes, and a finite-difference
//! discretization of -(a u')' + V u on an interval.

use std::f64::consts::PI;
use std::ops::{Deref, DerefMut};

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{check, Error, Result};
use crate::quad;

/// Gauss-Legendre nodes per panel of the analytic bases.
const PANEL_ORDER: usize = 8;

/// Coefficients ⟨h, φ_k⟩ of a spatial function, ordered like the eigenvalues.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModalCoeffs(pub Vec<f64>);

impl ModalCoeffs {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    /// The k-th unit vector (0-based) of length n.
    pub fn unit(n: usize, k: usize) -> Self {
        let mut c = Self::zeros(n);
        c.0[k] = 1.0;
        c
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|v| s * v).collect())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for ModalCoeffs {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Deref for ModalCoeffs {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ModalCoeffs {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// How a basis was built; analytic kinds can be re-sampled on finer grids.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisKind {
    /// Sine basis of (0, L).
    Interval { length: f64 },
    /// Tensor sine basis of a rectangle or box; one multi-index per mode.
    Box { lengths: Vec<f64>, indices: Vec<Vec<usize>> },
    /// Finite-difference operator on the interior nodes of a uniform mesh.
    FiniteDifference { length: f64, mesh_size: usize },
}

/// Quadrature nodes (one row per node) and weights over Ω.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub points: Array2<f64>,
    pub weights: Array1<f64>,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Eigenvalues λ_1 ≤ … ≤ λ_N with L²-orthonormal eigenfunctions sampled on
/// a quadrature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    kind: BasisKind,
    eigenvalues: Vec<f64>,
    grid: QuadratureGrid,
    /// φ_k at the grid nodes, one row per mode.
    phi: Array2<f64>,
    oversampling: usize,
}

impl EigenBasis {
    pub fn dimension(&self) -> usize {
        self.grid.points.ncols()
    }

    pub fn mode_count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn kind(&self) -> &BasisKind {
        &self.kind
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    /// Eigenfunction samples, shape (modes, grid nodes).
    pub fn phi(&self) -> &Array2<f64> {
        &self.phi
    }

    /// The same eigenpairs on a grid `factor` times finer in every
    /// direction. Finite-difference eigenvectors only exist on their mesh,
    /// so that kind is returned unchanged.
    pub fn oversampled(&self, factor: usize) -> Result<EigenBasis> {
        check(factor >= 1, || Error::Validation("oversampling factor must be at least 1".into()))?;
        let total = self.oversampling * factor;
        match &self.kind {
            BasisKind::Interval { length } => interval_basis(*length, self.mode_count(), total),
            BasisKind::Box { lengths, indices } => box_basis(lengths, indices.clone(), total),
            BasisKind::FiniteDifference { .. } => Ok(self.clone()),
        }
    }

    fn check_coeffs(&self, len: usize) -> Result<()> {
        check(len == self.mode_count(), || {
            Error::Validation(format!("expected {} modal coefficients, got {len}", self.mode_count()))
        })
    }

    /// Quadrature-weighted inner products of the samples with each φ_k.
    pub fn project(&self, samples: &[f64]) -> Result<ModalCoeffs> {
        check(samples.len() == self.grid.len(), || {
            Error::Validation(format!("expected {} grid samples, got {}", self.grid.len(), samples.len()))
        })?;
        let weighted = &ArrayView1::from(samples) * &self.grid.weights;
        Ok(ModalCoeffs(self.phi.dot(&weighted).to_vec()))
    }

    /// Σ_k c_k φ_k at the grid nodes.
    pub fn synthesize(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        self.check_coeffs(coeffs.len())?;
        Ok(ArrayView1::from(coeffs).dot(&self.phi).to_vec())
    }

    /// Discrete Gram matrix ⟨φ_j, φ_k⟩ under the grid quadrature.
    pub fn gram(&self) -> Array2<f64> {
        let weighted = &self.phi * &self.grid.weights.view().insert_axis(Axis(0));
        weighted.dot(&self.phi.t())
    }
}

/// Analytic Dirichlet Laplacian on (0, L): λ_n = (nπ/L)², φ_n = √(2/L) sin(nπx/L).
pub fn build_interval_basis(length: f64, mode_count: usize) -> Result<EigenBasis> {
    interval_basis(length, mode_count, 1)
}

fn interval_basis(length: f64, mode_count: usize, oversampling: usize) -> Result<EigenBasis> {
    check_length(length)?;
    check(mode_count >= 1, || Error::Validation("mode_count must be at least 1".into()))?;
    let (x, w) = quad::composite_gauss_legendre(0.0, length, (mode_count + 2) * oversampling, PANEL_ORDER);
    let amplitude = (2.0 / length).sqrt();
    let eigenvalues = (1..=mode_count).map(|n| (n as f64 * PI / length).powi(2)).collect();
    let phi = Array2::from_shape_fn((mode_count, x.len()), |(k, j)| {
        amplitude * ((k + 1) as f64 * PI * x[j] / length).sin()
    });
    Ok(EigenBasis {
        kind: BasisKind::Interval { length },
        eigenvalues,
        grid: QuadratureGrid {
            points: Array2::from_shape_vec((x.len(), 1), x).expect("column of nodes"),
            weights: Array1::from(w),
        },
        phi,
        oversampling,
    })
}

/// Tensor sine basis of a rectangle (two lengths) or box (three lengths):
/// the N smallest λ = Σ (n_i π/L_i)², ties broken by lexicographic
/// multi-index.
pub fn build_rectangle_basis(lengths: &[f64], mode_count: usize) -> Result<EigenBasis> {
    check(lengths.len() == 2 || lengths.len() == 3, || {
        Error::Validation(format!("rectangle basis needs 2 or 3 lengths, got {}", lengths.len()))
    })?;
    for &l in lengths {
        check_length(l)?;
    }
    check(mode_count >= 1, || Error::Validation("mode_count must be at least 1".into()))?;
    box_basis(lengths, smallest_multi_indices(lengths, mode_count), 1)
}

fn tensor_eigenvalue(lengths: &[f64], index: &[usize]) -> f64 {
    lengths.iter().zip(index).map(|(l, &n)| (n as f64 * PI / l).powi(2)).sum()
}

/// The `count` multi-indices with the smallest tensor eigenvalues.
pub fn smallest_multi_indices(lengths: &[f64], count: usize) -> Vec<Vec<usize>> {
    let d = lengths.len();
    let base: f64 = lengths.iter().map(|l| (PI / l).powi(2)).sum();
    let mut cutoff = (count as f64).powf(1.0 / d as f64).ceil() as usize + 1;
    loop {
        let mut all = Vec::new();
        let mut index = vec![1usize; d];
        'enumerate: loop {
            all.push(index.clone());
            for axis in (0..d).rev() {
                if index[axis] < cutoff {
                    index[axis] += 1;
                    continue 'enumerate;
                }
                index[axis] = 1;
            }
            break;
        }
        sort_modes(lengths, &mut all);
        if all.len() >= count {
            // Any index outside the enumerated cube has some n_i > cutoff.
            let outside = lengths
                .iter()
                .map(|l| base - (PI / l).powi(2) + ((cutoff + 1) as f64 * PI / l).powi(2))
                .fold(f64::INFINITY, f64::min);
            if tensor_eigenvalue(lengths, &all[count - 1]) < outside {
                all.truncate(count);
                return all;
            }
        }
        cutoff *= 2;
    }
}

fn sort_modes(lengths: &[f64], modes: &mut [Vec<usize>]) {
    modes.sort_by(|a, b| {
        tensor_eigenvalue(lengths, a)
            .total_cmp(&tensor_eigenvalue(lengths, b))
            .then_with(|| a.cmp(b))
    });
}

fn box_basis(lengths: &[f64], indices: Vec<Vec<usize>>, oversampling: usize) -> Result<EigenBasis> {
    let d = lengths.len();
    let axes: Vec<(Vec<f64>, Vec<f64>)> = (0..d)
        .map(|axis| {
            let highest = indices.iter().map(|m| m[axis]).max().unwrap_or(1);
            quad::composite_gauss_legendre(0.0, lengths[axis], (highest + 2) * oversampling, PANEL_ORDER)
        })
        .collect();
    let sizes: Vec<usize> = axes.iter().map(|a| a.0.len()).collect();
    let total: usize = sizes.iter().product();

    let mut points = Array2::zeros((total, d));
    let mut weights = Array1::zeros(total);
    let mut phi = Array2::zeros((indices.len(), total));
    // Per-axis sine tables sin(n π x / L) for every needed n.
    let tables: Vec<Vec<Vec<f64>>> = (0..d)
        .map(|axis| {
            let highest = indices.iter().map(|m| m[axis]).max().unwrap_or(1);
            (0..=highest)
                .map(|n| {
                    axes[axis].0.iter().map(|x| (n as f64 * PI * x / lengths[axis]).sin()).collect()
                })
                .collect()
        })
        .collect();
    let amplitude: f64 = lengths.iter().map(|l| (2.0 / l).sqrt()).product();

    let mut digits = vec![0usize; d];
    for j in 0..total {
        let mut w = 1.0;
        for axis in 0..d {
            points[[j, axis]] = axes[axis].0[digits[axis]];
            w *= axes[axis].1[digits[axis]];
        }
        weights[j] = w;
        for (k, index) in indices.iter().enumerate() {
            let mut v = amplitude;
            for axis in 0..d {
                v *= tables[axis][index[axis]][digits[axis]];
            }
            phi[[k, j]] = v;
        }
        for axis in (0..d).rev() {
            digits[axis] += 1;
            if digits[axis] < sizes[axis] {
                break;
            }
            digits[axis] = 0;
        }
    }
    let eigenvalues = indices.iter().map(|m| tensor_eigenvalue(lengths, m)).collect();
    Ok(EigenBasis {
        kind: BasisKind::Box { lengths: lengths.to_vec(), indices },
        eigenvalues,
        grid: QuadratureGrid { points, weights },
        phi,
        oversampling,
    })
}

/// Second-order finite differences of -(a u')' + V u on (0, L) with
/// Dirichlet ends on a uniform mesh of `mesh_size` cells.
///
/// `a` is sampled at cell midpoints and mesh nodes, `V` at the interior
/// nodes. The grid is the interior nodes with weights h, so eigenvectors
/// are scaled by 1/√h to be orthonormal in the discrete L² product.
pub fn build_fd_basis<A, V>(coeff_a: A, potential_v: V, length: f64, mesh_size: usize, mode_count: usize) -> Result<EigenBasis>
where
    A: Fn(f64) -> f64,
    V: Fn(f64) -> f64,
{
    check_length(length)?;
    check(mesh_size >= 3, || Error::Validation("finite-difference mesh needs at least 3 cells".into()))?;
    let interior = mesh_size - 1;
    check(mode_count >= 1 && mode_count <= interior, || {
        Error::Validation(format!("mode_count must lie in [1, {interior}], got {mode_count}"))
    })?;
    let h = length / mesh_size as f64;
    let mid: Vec<f64> = (0..mesh_size).map(|i| coeff_a((i as f64 + 0.5) * h)).collect();
    let nodes: Vec<f64> = (1..mesh_size).map(|i| i as f64 * h).collect();
    let floor = mid
        .iter()
        .cloned()
        .chain((0..=mesh_size).map(|i| coeff_a(i as f64 * h)))
        .fold(f64::INFINITY, f64::min);
    check(floor.is_finite() && floor > 0.0, || {
        Error::Validation(format!("ellipticity requires a(x) ≥ c > 0, found min a = {floor}"))
    })?;
    let potential: Vec<f64> = nodes.iter().map(|&x| potential_v(x)).collect();
    if let Some((i, v)) = potential.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::Validation(format!("potential must satisfy V ≥ 0, found V({}) = {v}", nodes[i])));
    }

    let mut m = DMatrix::zeros(interior, interior);
    let inv_h2 = 1.0 / (h * h);
    for i in 0..interior {
        m[(i, i)] = (mid[i] + mid[i + 1]) * inv_h2 + potential[i];
        if i + 1 < interior {
            m[(i, i + 1)] = -mid[i + 1] * inv_h2;
            m[(i + 1, i)] = -mid[i + 1] * inv_h2;
        }
    }
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..interior).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order.truncate(mode_count);

    let scale = 1.0 / h.sqrt();
    let mut phi = Array2::zeros((mode_count, interior));
    for (k, &col) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(col);
        // Fix the sign so φ_k starts positive next to x = 0, like the sines.
        let first = v.iter().find(|x| x.abs() > 1e-12 * v.amax()).cloned().unwrap_or(1.0);
        let sign = first.signum();
        for j in 0..interior {
            phi[[k, j]] = sign * scale * v[j];
        }
    }
    let eigenvalues: Vec<f64> = order.iter().map(|&c| eig.eigenvalues[c]).collect();
    check(eigenvalues[0] > 0.0, || {
        Error::Validation(format!("operator is not positive definite (λ_1 = {})", eigenvalues[0]))
    })?;
    Ok(EigenBasis {
        kind: BasisKind::FiniteDifference { length, mesh_size },
        eigenvalues,
        grid: QuadratureGrid {
            points: Array2::from_shape_vec((interior, 1), nodes).expect("column of nodes"),
            weights: Array1::from_elem(interior, h),
        },
        phi,
        oversampling: 1,
    })
}

fn check_length(l: f64) -> Result<()> {
    check(l.is_finite() && l > 0.0, || Error::Validation(format!("domain lengths must be positive, got {l}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_eigenvalues() {
        let b = build_interval_basis(PI, 3).unwrap();
        assert_eq!(b.eigenvalues(), &[1.0, 4.0, 9.0]);
        let b = build_interval_basis(1.0, 1).unwrap();
        assert!((b.eigenvalues()[0] - PI * PI).abs() < 1e-14);
    }

    #[test]
    fn square_eigenvalues_with_ties() {
        let b = build_rectangle_basis(&[PI, PI], 4).unwrap();
        assert_eq!(b.eigenvalues(), &[2.0, 5.0, 5.0, 8.0]);
        match b.kind() {
            BasisKind::Box { indices, .. } => {
                assert_eq!(indices, &vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]);
            }
            other => panic!("unexpected kind {other:?}"),
        }
    }

    #[test]
    fn fd_rejects_sign_violations() {
        assert!(matches!(build_fd_basis(|_| 0.0, |_| 0.0, 1.0, 50, 3), Err(Error::Validation(_))));
        assert!(matches!(build_fd_basis(|_| 1.0, |_| -1.0, 1.0, 50, 3), Err(Error::Validation(_))));
    }
}
