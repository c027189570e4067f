//! Block-sparse storage, dense helpers and condition-number estimates.

use std::collections::BTreeMap;
use std::ops::Range;

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::{Error, Result};

/// Sparse matrix stored as dense blocks indexed by (row element, column
/// element). Block `(i, j)` covers rows `row_offsets[i]..row_offsets[i+1]`
/// and columns `col_offsets[j]..col_offsets[j+1]`.
#[derive(Clone, Debug)]
pub struct BlockMatrix {
    row_offsets: Vec<usize>,
    col_offsets: Vec<usize>,
    blocks: BTreeMap<(usize, usize), Mat<f64>>,
}

impl BlockMatrix {
    pub fn new(row_offsets: Vec<usize>, col_offsets: Vec<usize>) -> Self {
        Self { row_offsets, col_offsets, blocks: BTreeMap::new() }
    }

    pub fn nrows(&self) -> usize {
        *self.row_offsets.last().unwrap_or(&0)
    }

    pub fn ncols(&self) -> usize {
        *self.col_offsets.last().unwrap_or(&0)
    }

    pub fn row_size(&self, i: usize) -> usize {
        self.row_offsets[i + 1] - self.row_offsets[i]
    }

    pub fn col_size(&self, j: usize) -> usize {
        self.col_offsets[j + 1] - self.col_offsets[j]
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_offsets(&self) -> &[usize] {
        &self.col_offsets
    }

    /// Adds `local` (only its leading `row_size × col_size` part) to block `(i, j)`.
    pub fn add(&mut self, i: usize, j: usize, local: MatRef<'_, f64>) {
        let (r, c) = (self.row_size(i), self.col_size(j));
        let b = self.blocks.entry((i, j)).or_insert_with(|| Mat::zeros(r, c));
        for jj in 0..c {
            for ii in 0..r {
                b[(ii, jj)] += local[(ii, jj)];
            }
        }
    }

    pub fn block(&self, i: usize, j: usize) -> Option<&Mat<f64>> {
        self.blocks.get(&(i, j))
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&(usize, usize), &Mat<f64>)> {
        self.blocks.iter()
    }

    /// Blocks in block-row `i`.
    pub fn row_blocks(&self, i: usize) -> impl Iterator<Item = (usize, &Mat<f64>)> {
        self.blocks.range((i, 0)..(i + 1, 0)).map(|(&(_, j), b)| (j, b))
    }

    /// `self + other` for matrices with the same offsets.
    pub fn sum(&self, other: &BlockMatrix) -> BlockMatrix {
        let mut out = self.clone();
        for (&(i, j), b) in &other.blocks {
            out.add(i, j, b.as_ref());
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows()];
        for (&(i, j), b) in &self.blocks {
            let (r0, c0) = (self.row_offsets[i], self.col_offsets[j]);
            for jj in 0..b.ncols() {
                let xj = x[c0 + jj];
                if xj != 0.0 {
                    for ii in 0..b.nrows() {
                        y[r0 + ii] += b[(ii, jj)] * xj;
                    }
                }
            }
        }
        y
    }

    /// `selfᵀ x`.
    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.ncols()];
        for (&(i, j), b) in &self.blocks {
            let (r0, c0) = (self.row_offsets[i], self.col_offsets[j]);
            for jj in 0..b.ncols() {
                y[c0 + jj] += (0..b.nrows()).map(|ii| b[(ii, jj)] * x[r0 + ii]).sum::<f64>();
            }
        }
        y
    }

    /// `xᵀ self y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.mul_vec(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Blocks with both indices in the given element ranges, as a CSC
    /// matrix in the local numbering of those ranges.
    pub fn to_sparse(&self, rows: Range<usize>, cols: Range<usize>) -> Result<SparseColMat<usize, f64>> {
        let (r0, c0) = (self.row_offsets[rows.start], self.col_offsets[cols.start]);
        let (nr, nc) = (self.row_offsets[rows.end] - r0, self.col_offsets[cols.end] - c0);
        let mut trips = Vec::new();
        for (&(i, j), b) in &self.blocks {
            if !rows.contains(&i) || !cols.contains(&j) {
                continue;
            }
            let (bi, bj) = (self.row_offsets[i] - r0, self.col_offsets[j] - c0);
            for jj in 0..b.ncols() {
                for ii in 0..b.nrows() {
                    let v = b[(ii, jj)];
                    if v != 0.0 {
                        trips.push(Triplet::new(bi + ii, bj + jj, v));
                    }
                }
            }
        }
        SparseColMat::try_new_from_triplets(nr, nc, &trips)
            .map_err(|e| Error::Assembly(format!("sparse conversion failed: {e:?}")))
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.nrows(), self.ncols());
        for (&(i, j), b) in &self.blocks {
            let (r0, c0) = (self.row_offsets[i], self.col_offsets[j]);
            for jj in 0..b.ncols() {
                for ii in 0..b.nrows() {
                    m[(r0 + ii, c0 + jj)] = b[(ii, jj)];
                }
            }
        }
        m
    }
}

/// `‖a − b‖_∞ / max(‖a‖_∞, ‖b‖_∞)` entrywise; `0` for two zero matrices.
pub fn relative_difference(a: &SparseColMat<usize, f64>, b: &SparseColMat<usize, f64>) -> f64 {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return f64::INFINITY;
    }
    let (sa, sb) = (a.symbolic(), b.symbolic());
    if sa.col_ptr() != sb.col_ptr() || sa.row_idx() != sb.row_idx() {
        return f64::INFINITY;
    }
    let (va, vb) = (a.val(), b.val());
    let scale = va.iter().chain(vb).fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    va.iter().zip(vb).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

pub fn sparse_mul_vec(a: &SparseColMat<usize, f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.nrows()];
    let s = a.symbolic();
    let (cp, ri, v) = (s.col_ptr(), s.row_idx(), a.val());
    for j in 0..a.ncols() {
        for k in cp[j]..cp[j + 1] {
            y[ri[k]] += v[k] * x[j];
        }
    }
    y
}

pub fn sparse_transpose_mul_vec(a: &SparseColMat<usize, f64>, x: &[f64]) -> Vec<f64> {
    let s = a.symbolic();
    let (cp, ri, v) = (s.col_ptr(), s.row_idx(), a.val());
    (0..a.ncols()).map(|j| (cp[j]..cp[j + 1]).map(|k| v[k] * x[ri[k]]).sum()).collect()
}

pub fn column(v: &[f64]) -> Mat<f64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

pub fn to_vec(m: &Mat<f64>) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, 0)]).collect()
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Dense Cholesky factor of an SPD matrix.
#[derive(Debug)]
pub struct DenseCholesky {
    llt: faer::linalg::solvers::Llt<f64>,
}

impl DenseCholesky {
    pub fn new(a: &Mat<f64>) -> Result<Self> {
        a.llt(Side::Lower)
            .map(|llt| Self { llt })
            .map_err(|e| Error::Assembly(format!("Cholesky factorisation failed: {e:?}")))
    }

    pub fn solve(&self, b: &Mat<f64>) -> Mat<f64> {
        self.llt.solve(b)
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        to_vec(&self.llt.solve(column(b)))
    }
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(a: &Mat<f64>) -> Result<Vec<f64>> {
    let e = a.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Solver(format!("eigensolver failed: {e:?}")))?;
    let s = e.S().column_vector();
    let mut v: Vec<f64> = (0..s.nrows()).map(|i| s[i]).collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Outcome of a 2-norm condition estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionEstimate {
    pub sigma_max: f64,
    pub sigma_min: f64,
    /// `σ_max / σ_min`, or `∞` for a numerically singular matrix.
    pub kappa: f64,
}

impl ConditionEstimate {
    fn from_extremes(sigma_max: f64, sigma_min: f64, n: usize) -> Self {
        let singular = !(sigma_min > f64::EPSILON * n as f64 * sigma_max);
        Self { sigma_max, sigma_min, kappa: if singular { f64::INFINITY } else { sigma_max / sigma_min } }
    }
}

/// Size up to which [`condition_number_2`] uses a dense SVD.
pub const DENSE_CONDITION_LIMIT: usize = 2000;

/// `κ₂` from all singular values of a dense matrix.
pub fn condition_number_dense(a: &Mat<f64>) -> Result<ConditionEstimate> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::InvalidParameter("condition number needs a nonempty square matrix".into()));
    }
    let s = a.singular_values().map_err(|e| Error::Solver(format!("SVD failed: {e:?}")))?;
    let smax = s.iter().copied().fold(0.0, f64::max);
    let smin = s.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ConditionEstimate::from_extremes(smax, smin, a.nrows()))
}

/// Largest eigenvalue of the SPD operator `op` by power iteration with a
/// Rayleigh-quotient residual test.
fn power_iteration(n: usize, op: impl Fn(&[f64]) -> Vec<f64>, tol: f64) -> f64 {
    // deterministic start with all modes present
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 104729) as f64 / 104729.0).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut theta = 0.0;
    for _ in 0..200_000 {
        let w = op(&v);
        theta = w.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        let res = norm2(&w.iter().zip(&v).map(|(a, b)| a - theta * b).collect::<Vec<_>>());
        let nw = norm2(&w);
        if nw == 0.0 {
            return 0.0;
        }
        v = w.into_iter().map(|x| x / nw).collect();
        if res <= tol * theta.abs() {
            break;
        }
    }
    theta
}

/// `κ₂` by power iteration on `AᵀA` for `σ_max` and inverse iteration with
/// a sparse LU of `A` for `σ_min`, to relative tolerance `1e-6`.
pub fn condition_number_iterative(a: &SparseColMat<usize, f64>) -> Result<ConditionEstimate> {
    let n = a.nrows();
    if n != a.ncols() || n == 0 {
        return Err(Error::InvalidParameter("condition number needs a nonempty square matrix".into()));
    }
    let tol = 1e-6;
    let lmax = power_iteration(n, |x| sparse_transpose_mul_vec(a, &sparse_mul_vec(a, x)), tol * tol);
    let smax = lmax.sqrt();
    let lu = match a.sp_lu() {
        Ok(lu) => lu,
        Err(_) => return Ok(ConditionEstimate { sigma_max: smax, sigma_min: 0.0, kappa: f64::INFINITY }),
    };
    let inv = |x: &[f64]| {
        // (AᵀA)⁻¹ x = A⁻¹ A⁻ᵀ x
        let y = lu.solve_transpose(column(x));
        to_vec(&lu.solve(&y))
    };
    let linv = power_iteration(n, inv, tol * tol);
    if !linv.is_finite() || linv <= 0.0 {
        return Ok(ConditionEstimate { sigma_max: smax, sigma_min: 0.0, kappa: f64::INFINITY });
    }
    Ok(ConditionEstimate::from_extremes(smax, 1.0 / linv.sqrt(), n))
}

/// `κ₂ = σ_max/σ_min`: dense SVD up to [`DENSE_CONDITION_LIMIT`] unknowns,
/// iterative estimate beyond.
pub fn condition_number_2(a: &SparseColMat<usize, f64>) -> Result<ConditionEstimate> {
    if a.nrows() <= DENSE_CONDITION_LIMIT {
        condition_number_dense(&a.to_dense())
    } else {
        condition_number_iterative(a)
    }
}
