//! Slab-wise and monolithic solves, the discrete Newton potential and
//! stiffness conditioning.

use std::ops::Range;
use std::sync::Arc;

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::sparse::SparseColMat;
use faer::Side;
use log::{debug, warn};

use crate::assembly::{assemble, reduce, AssemblyOptions};
use crate::linalg::{
    column, condition_number_2, norm2, relative_difference, sparse_mul_vec, to_vec, BlockMatrix, ConditionEstimate,
};
use crate::problems::{HeatProblem, Homogeneous};
use crate::space::{DiscreteSolution, DiscreteSpace};
use crate::{Error, Result};

/// Relative residual above which a solve is flagged.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Relative entrywise difference below which two slab matrices share a
/// factorisation.
const REUSE_TOLERANCE: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverMode {
    Slab,
    Monolithic,
}

impl std::str::FromStr for SolverMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slab" => Ok(Self::Slab),
            "monolithic" => Ok(Self::Monolithic),
            _ => Err(Error::InvalidParameter(format!("unknown solver `{s}` (slab|monolithic)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub mode: SolverMode,
    /// Largest relative residual over all linear solves.
    pub max_residual: f64,
    pub factorizations: usize,
    pub systems: usize,
    /// Set when some residual exceeded [`RESIDUAL_TOLERANCE`].
    pub flagged: bool,
}

fn zero_data(space: &DiscreteSpace) -> Homogeneous {
    Homogeneous { dim: space.mesh().dim(), final_time: space.mesh().final_time() }
}

fn sparse_lu(a: &SparseColMat<usize, f64>) -> Result<Lu<usize, f64>> {
    a.sp_lu().map_err(|e| Error::Solver(format!("sparse LU failed ({e:?}); is the configuration singular?")))
}

/// Solves `a x = b` with up to two steps of iterative refinement; returns
/// `x` and the relative residual.
fn solve_refined(a: &SparseColMat<usize, f64>, lu: &Lu<usize, f64>, b: &[f64]) -> (Vec<f64>, f64) {
    let nb = norm2(b);
    if nb == 0.0 {
        return (vec![0.0; b.len()], 0.0);
    }
    let mut x = to_vec(&lu.solve(column(b)));
    let mut res = 0.0;
    for step in 0..3 {
        let ax = sparse_mul_vec(a, &x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        res = norm2(&r) / nb;
        if res < 1e-13 || step == 2 {
            break;
        }
        let dx = to_vec(&lu.solve(column(&r)));
        x.iter_mut().zip(dx).for_each(|(x, d)| *x += d);
    }
    (x, res)
}

/// Solves `(M + A) U = ℓ` either slab by slab or in one system.
pub fn solve(
    space: Arc<DiscreteSpace>,
    data: &dyn HeatProblem,
    opts: &AssemblyOptions,
    mode: SolverMode,
) -> Result<(DiscreteSolution, SolveReport)> {
    match mode {
        SolverMode::Slab => solve_slabwise(space, data, opts),
        SolverMode::Monolithic => solve_monolithic(space, data, opts),
    }
}

pub fn solve_monolithic(
    space: Arc<DiscreteSpace>,
    data: &dyn HeatProblem,
    opts: &AssemblyOptions,
) -> Result<(DiscreteSolution, SolveReport)> {
    let n = space.mesh().num_elements();
    let blocks = assemble(&space, data, opts, 0..n)?;
    let red = reduce(&blocks)?;
    let total = blocks.total(&red);
    let a = total.to_sparse(0..n, 0..n)?;
    let lu = sparse_lu(&a)?;
    let (u, res) = solve_refined(&a, &lu, &red.load);
    let flux = blocks.flux(&red, &u);
    let report = SolveReport {
        mode: SolverMode::Monolithic,
        max_residual: res,
        factorizations: 1,
        systems: 1,
        flagged: res > RESIDUAL_TOLERANCE,
    };
    if report.flagged {
        warn!("monolithic solve: relative residual {res:.2e}");
    }
    let mut sol = DiscreteSolution::new(space, u)?;
    sol.flux = Some(flux);
    Ok((sol, report))
}

/// Subtracts the blocks of `total` in rows of `slab` and columns before it,
/// applied to `u`, from `rhs` (numbered locally from `dofs.start`).
fn subtract_history(total: &BlockMatrix, slab: &Range<usize>, dofs: &Range<usize>, u: &[f64], rhs: &mut [f64]) {
    let (ro, co) = (total.row_offsets(), total.col_offsets());
    for (&(i, j), b) in total.blocks() {
        if !slab.contains(&i) || j >= slab.start {
            continue;
        }
        debug_assert!(j < slab.start);
        let (r0, c0) = (ro[i] - dofs.start, co[j]);
        for jj in 0..b.ncols() {
            let x = u[c0 + jj];
            if x != 0.0 {
                for ii in 0..b.nrows() {
                    rhs[r0 + ii] -= b[(ii, jj)] * x;
                }
            }
        }
    }
}

/// Implicit time stepping through the slabs: `A⁽ⁿ⁾ U⁽ⁿ⁾ = l⁽ⁿ⁾` with the
/// upwind trace of `U⁽ⁿ⁻¹⁾` in `l⁽ⁿ⁾`. Factorisations are reused while
/// consecutive slab matrices coincide. Meshes without slab structure fall
/// back to [`solve_monolithic`].
pub fn solve_slabwise(
    space: Arc<DiscreteSpace>,
    data: &dyn HeatProblem,
    opts: &AssemblyOptions,
) -> Result<(DiscreteSolution, SolveReport)> {
    let slabs = match space.mesh().time_slabs() {
        Ok(s) => s,
        Err(e) => {
            warn!("{e}; falling back to the monolithic solver");
            return solve_monolithic(space, data, opts);
        }
    };
    let mut u = vec![0.0; space.ndofs()];
    let mut q = vec![0.0; space.q_ndofs()];
    let mut cached: Option<(SparseColMat<usize, f64>, Lu<usize, f64>)> = None;
    let mut report =
        SolveReport { mode: SolverMode::Slab, max_residual: 0.0, factorizations: 0, systems: 0, flagged: false };
    for (n, slab) in slabs.iter().enumerate() {
        let blocks = assemble(&space, data, opts, slab.clone())?;
        let red = reduce(&blocks)?;
        let total = blocks.total(&red);
        let a = total.to_sparse(slab.clone(), slab.clone())?;
        let dofs = space.range_dofs(slab);
        let mut rhs = red.load[dofs.clone()].to_vec();
        subtract_history(&total, slab, &dofs, &u, &mut rhs);
        let reuse = cached.as_ref().is_some_and(|(prev, _)| relative_difference(prev, &a) < REUSE_TOLERANCE);
        if !reuse {
            let lu = sparse_lu(&a)?;
            cached = Some((a, lu));
            report.factorizations += 1;
        }
        let (a_used, lu) = cached.as_ref().expect("factorisation");
        let (x, res) = solve_refined(a_used, lu, &rhs);
        debug!("slab {n}: {} dofs, residual {res:.2e}, reused {reuse}", x.len());
        if res > RESIDUAL_TOLERANCE {
            warn!("slab {n}: relative residual {res:.2e}");
            report.flagged = true;
        }
        report.max_residual = report.max_residual.max(res);
        report.systems += 1;
        u[dofs].copy_from_slice(&x);
        let qs = blocks.flux(&red, &u);
        let qr = space.q_dofs(slab.start).start..space.q_dofs(slab.end - 1).end;
        q[qr.clone()].copy_from_slice(&qs[qr]);
    }
    let mut sol = DiscreteSolution::new(space, u)?;
    sol.flux = Some(q);
    Ok((sol, report))
}

/// Element ranges on which `A` decouples: the time slabs, or the whole
/// mesh when there are none.
fn decoupled_ranges(space: &DiscreteSpace) -> Vec<Range<usize>> {
    space.mesh().time_slabs().unwrap_or_else(|_| std::iter::once(0..space.mesh().num_elements()).collect())
}

/// Slab-wise Cholesky factors of the reduced matrix `A`, reused while
/// consecutive slab matrices coincide.
pub struct ReducedOperator {
    space: Arc<DiscreteSpace>,
    ranges: Vec<Range<usize>>,
    /// Factor index per range.
    factor_of: Vec<usize>,
    factors: Vec<(SparseColMat<usize, f64>, Llt<usize, f64>)>,
}

impl ReducedOperator {
    pub fn new(space: Arc<DiscreteSpace>, opts: &AssemblyOptions) -> Result<Self> {
        let ranges = decoupled_ranges(&space);
        let zero = zero_data(&space);
        let mut factor_of = Vec::new();
        let mut factors: Vec<(SparseColMat<usize, f64>, Llt<usize, f64>)> = Vec::new();
        for r in &ranges {
            let blocks = assemble(&space, &zero, opts, r.clone())?;
            let red = reduce(&blocks)?;
            let a = red.a.to_sparse(r.clone(), r.clone())?;
            match factors.last() {
                Some((prev, _)) if relative_difference(prev, &a) < REUSE_TOLERANCE => {}
                _ => {
                    let llt = a.sp_cholesky(Side::Lower).map_err(|e| {
                        Error::Solver(format!("A is not positive definite ({e:?}); Dirichlet facets are required"))
                    })?;
                    factors.push((a, llt));
                }
            }
            factor_of.push(factors.len() - 1);
        }
        Ok(Self { space, ranges, factor_of, factors })
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = vec![0.0; b.len()];
        for (r, &fi) in self.ranges.iter().zip(&self.factor_of) {
            let dofs = self.space.range_dofs(r);
            let rb = &b[dofs.clone()];
            if rb.iter().all(|&v| v == 0.0) {
                continue;
            }
            let (a, llt) = &self.factors[fi];
            let mut xs = to_vec(&llt.solve(column(rb)));
            let nb = norm2(rb);
            for _ in 0..2 {
                let ax = sparse_mul_vec(a, &xs);
                let res: Vec<f64> = rb.iter().zip(&ax).map(|(b, a)| b - a).collect();
                if norm2(&res) <= 1e-14 * nb {
                    break;
                }
                let dx = to_vec(&llt.solve(column(&res)));
                xs.iter_mut().zip(dx).for_each(|(x, d)| *x += d);
            }
            x[dofs].copy_from_slice(&xs);
        }
        Ok(x)
    }

    /// `xᵀ A y`, assembled slab by slab from the stored matrices.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.ranges
            .iter()
            .zip(&self.factor_of)
            .map(|(r, &fi)| {
                let dofs = self.space.range_dofs(r);
                let ay = sparse_mul_vec(&self.factors[fi].0, &y[dofs.clone()]);
                ay.iter().zip(&x[dofs]).map(|(a, b)| a * b).sum::<f64>()
            })
            .sum()
    }
}

/// Discrete Newton potential: `N` with `A_h(N, w) = rhs(w)` for all free
/// basis functions `w`, where `rhs` holds the values `m_h(v, w)`.
pub fn newton_potential(space: Arc<DiscreteSpace>, opts: &AssemblyOptions, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; rhs.len()]);
    }
    ReducedOperator::new(space, opts)?.solve(rhs)
}

/// Stiffness matrix `M⁽ⁿ⁾ + A⁽ⁿ⁾` of slab `n` of a slab-decomposable mesh.
pub fn slab_matrix(space: &DiscreteSpace, opts: &AssemblyOptions, n: usize) -> Result<SparseColMat<usize, f64>> {
    let slabs = space.mesh().time_slabs()?;
    let r = slabs
        .get(n)
        .cloned()
        .ok_or_else(|| Error::InvalidParameter(format!("slab {n} out of range (mesh has {})", slabs.len())))?;
    let blocks = assemble(space, &zero_data(space), opts, r.clone())?;
    let red = reduce(&blocks)?;
    blocks.total(&red).to_sparse(r.clone(), r)
}

/// `κ₂` of the stiffness matrix of the first slab.
pub fn slab_condition_number(space: &DiscreteSpace, opts: &AssemblyOptions) -> Result<ConditionEstimate> {
    condition_number_2(&slab_matrix(space, opts, 0)?)
}
