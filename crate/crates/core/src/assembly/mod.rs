//! Mixed-system blocks, stabilisation and the reduced system.
//!
//! Unknowns: free `V_p` coefficients `U` and `M_p` coefficients `Q`. The
//! assembled blocks satisfy
//!
//! ```text
//! D Q + B U = ℓq,      (M + S) U − Bᵀ Q = ℓu,
//! ```
//!
//! with `B[r, u] = b_h(u, r)`, so that eliminating `Q` gives
//! `(M + A) U = ℓu + BᵀD⁻¹ℓq` with `A = S + BᵀD⁻¹B`. Element-wise
//! particular solutions are moved to the right-hand sides.

mod lifting;

use std::collections::BTreeMap;
use std::ops::Range;

use faer::{Mat, MatRef};

pub use lifting::{lifting_apply, vector_mass};

use crate::linalg::{BlockMatrix, DenseCholesky};
use crate::mesh::{FacetKind, SpaceTimeMesh};
use crate::problems::HeatProblem;
use crate::quadrature::{element_rule, facet_rule};
use crate::space::DiscreteSpace;
use crate::{Diffusion, Error, Result};

/// Flux weight `α_F` and stabilisation constant `η*`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssemblyOptions {
    pub eta_star: f64,
    pub alpha: f64,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { eta_star: 0.1, alpha: 0.5 }
    }
}

impl AssemblyOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_star > 0.0) || !self.eta_star.is_finite() {
            return Err(Error::InvalidParameter(format!("η* must be positive, got {}", self.eta_star)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("α_F must lie in [0, 1], got {}", self.alpha)));
        }
        Ok(())
    }
}

/// `η*·‖√k‖²·(p + 1)(p + d)/h_x`.
pub fn stabilization_value(eta_star: f64, k_norm_sq: f64, p: usize, d: usize, hx: f64) -> f64 {
    eta_star * k_norm_sq * ((p + 1) * (p + d)) as f64 / hx
}

/// `η_F` on a time-like facet: the maximum of [`stabilization_value`] over
/// the adjacent elements.
pub fn stabilization(mesh: &SpaceTimeMesh, facet: usize, eta_star: f64, k: &Diffusion) -> Result<f64> {
    let f = mesh.facet(facet);
    if f.kind.is_space_like() {
        return Err(Error::InvalidParameter(format!("facet {facet} is space-like and carries no stabilisation")));
    }
    if !(eta_star > 0.0) {
        return Err(Error::InvalidParameter(format!("η* must be positive, got {eta_star}")));
    }
    Ok(f.elements()
        .map(|e| {
            let el = mesh.element(e);
            stabilization_value(eta_star, k.sqrt_norm_sq(), el.degree, mesh.dim(), el.hx)
        })
        .fold(0.0, f64::max))
}

/// `a · diag(w) · bᵀ` for tabulations with functions in rows.
pub(crate) fn weighted_gram(a: MatRef<'_, f64>, w: &[f64], b: MatRef<'_, f64>) -> Mat<f64> {
    let aw = Mat::from_fn(a.nrows(), a.ncols(), |i, q| a[(i, q)] * w[q]);
    &aw * b.transpose()
}

/// `∫ g φ_i` from point values `g` for every row `φ_i` of `a`.
pub(crate) fn weighted_sum(a: MatRef<'_, f64>, w: &[f64], g: &[f64]) -> Vec<f64> {
    (0..a.nrows()).map(|i| (0..a.ncols()).map(|q| a[(i, q)] * w[q] * g[q]).sum()).collect()
}

/// Blocks of the mixed system restricted to the rows of an element range.
#[derive(Clone, Debug)]
pub struct SystemBlocks {
    pub elements: Range<usize>,
    /// Temporal upwind form `m_h`.
    pub m: BlockMatrix,
    /// Element blocks of `b^d_h`.
    pub d: BTreeMap<usize, Mat<f64>>,
    /// `B[r, u] = b_h(u, r)`.
    pub b: BlockMatrix,
    pub s: BlockMatrix,
    /// Global-length load vectors; only rows of `elements` are filled.
    pub lq: Vec<f64>,
    pub lu: Vec<f64>,
}

fn offsets(n: usize, dofs: impl Fn(usize) -> Range<usize>) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).map(|k| dofs(k).start).collect();
    v.push(if n == 0 { 0 } else { dofs(n - 1).end });
    v
}

/// Adds `local` (rows: free test functions of `i`; columns: all `n_ext`
/// functions of `j`) to block `(i, j)`; the particular column of `j`, if
/// any, is subtracted from `load` instead.
fn add_with_particular(
    target: &mut BlockMatrix,
    load: &mut [f64],
    row0: usize,
    i: usize,
    j: usize,
    local: &Mat<f64>,
    n_free: usize,
    scale: f64,
) {
    let scaled = Mat::from_fn(local.nrows(), n_free, |r, c| scale * local[(r, c)]);
    target.add(i, j, scaled.as_ref());
    if local.ncols() > n_free {
        for r in 0..local.nrows() {
            load[row0 + r] -= scale * local[(r, n_free)];
        }
    }
}

/// Assembles all forms for the rows of `elements`: volume terms of its
/// elements, time-like facets touching it and space-like facets whose
/// later element lies in it. Use a union of whole time slabs or the full
/// mesh.
pub fn assemble(
    space: &DiscreteSpace,
    data: &dyn HeatProblem,
    opts: &AssemblyOptions,
    elements: Range<usize>,
) -> Result<SystemBlocks> {
    opts.validate()?;
    let mesh = space.mesh();
    let n = mesh.num_elements();
    if elements.end > n || elements.start > elements.end {
        return Err(Error::InvalidParameter(format!("element range {elements:?} outside 0..{n}")));
    }
    let d = mesh.dim();
    let kinv = space.diffusion().inverse();
    let u_off = offsets(n, |k| space.dofs(k));
    let q_off = offsets(n, |k| space.q_dofs(k));
    let mut out = SystemBlocks {
        elements: elements.clone(),
        m: BlockMatrix::new(u_off.clone(), u_off.clone()),
        d: BTreeMap::new(),
        b: BlockMatrix::new(q_off, u_off.clone()),
        s: BlockMatrix::new(u_off.clone(), u_off),
        lq: vec![0.0; space.q_ndofs()],
        lu: vec![0.0; space.ndofs()],
    };

    for k in elements.clone() {
        assemble_volume(space, data, k, &kinv, &mut out);
    }
    let in_range = |e: usize| elements.contains(&e);
    for (fi, f) in mesh.facets().iter().enumerate() {
        let take = match f.kind {
            FacetKind::TimeInterior | FacetKind::Dirichlet => f.elements().any(in_range),
            FacetKind::Initial | FacetKind::SpaceInterior => f.after().is_some_and(in_range),
            FacetKind::Final => false,
        };
        if !take {
            continue;
        }
        match f.kind {
            FacetKind::TimeInterior => {
                let eta = stabilization(mesh, fi, opts.eta_star, space.diffusion())?;
                assemble_time_interior(space, fi, eta, opts.alpha, d, &mut out);
            }
            FacetKind::Dirichlet => {
                let eta = stabilization(mesh, fi, opts.eta_star, space.diffusion())?;
                assemble_dirichlet(space, data, fi, eta, d, &mut out);
            }
            FacetKind::SpaceInterior => assemble_space_interior(space, fi, &mut out),
            FacetKind::Initial => assemble_initial(space, data, fi, &mut out),
            FacetKind::Final => {}
        }
    }
    Ok(out)
}

fn quadrature_degree(space: &DiscreteSpace, elements: impl Iterator<Item = usize>) -> usize {
    let p = elements.map(|e| space.mesh().element(e).degree).max().unwrap_or(1);
    2 * p + 2
}

fn assemble_volume(
    space: &DiscreteSpace,
    data: &dyn HeatProblem,
    k: usize,
    kinv: &[[f64; 2]; 2],
    out: &mut SystemBlocks,
) {
    let mesh = space.mesh();
    let d = mesh.dim();
    let rule = element_rule(mesh, k, quadrature_degree(space, std::iter::once(k)));
    let basis = space.basis(k);
    let nf = basis.n_free();
    let u = basis.tabulate(&rule.points);
    let phi = space.vector_basis(k).scalar.tabulate(&rule.points);
    let ns = phi.len();
    let w = &rule.weights;
    let v_free = u.values.subrows(0, nf);

    // m_h volume part ∫ ∂ₜu v
    let mv = weighted_gram(v_free, w, u.dt.as_ref());
    let row0 = space.dofs(k).start;
    add_with_particular(&mut out.m, &mut out.lu, row0, k, k, &mv, nf, 1.0);

    // b^d_h
    let g = weighted_gram(phi.values.as_ref(), w, phi.values.as_ref());
    let dk = Mat::from_fn(d * ns, d * ns, |r, c| kinv[r / ns][c / ns] * g[(r % ns, c % ns)]);
    out.d.insert(k, dk);

    // b_h volume part ∫ ∇ₓu · r
    let mut bv = Mat::<f64>::zeros(d * ns, u.len());
    for c in 0..d {
        let gc = weighted_gram(phi.values.as_ref(), w, u.grad[c].as_ref());
        for i in 0..ns {
            for j in 0..u.len() {
                bv[(c * ns + i, j)] = gc[(i, j)];
            }
        }
    }
    let q0 = space.q_dofs(k).start;
    add_with_particular(&mut out.b, &mut out.lq, q0, k, k, &bv, nf, 1.0);

    if !data.source_is_zero() {
        let fv: Vec<f64> = rule.points.iter().map(|p| data.source(p)).collect();
        for (i, v) in weighted_sum(v_free, w, &fv).into_iter().enumerate() {
            out.lu[row0 + i] += v;
        }
    }
}

fn assemble_time_interior(space: &DiscreteSpace, fi: usize, eta: f64, alpha: f64, d: usize, out: &mut SystemBlocks) {
    let mesh = space.mesh();
    let f = mesh.facet(fi);
    let (k1, k2) = (f.owner, f.neighbor.expect("interior facet has two elements"));
    let rule = facet_rule(mesh, fi, quadrature_degree(space, [k1, k2].into_iter()));
    let w = &rule.weights;
    let (b1, b2) = (space.basis(k1), space.basis(k2));
    let (u1, u2) = (b1.tabulate(&rule.points), b2.tabulate(&rule.points));
    let (p1, p2) =
        (space.vector_basis(k1).scalar.tabulate(&rule.points), space.vector_basis(k2).scalar.tabulate(&rule.points));
    let (nf1, nf2) = (b1.n_free(), b2.n_free());

    // b_h: −∫ ⟦u⟧_N · {r}_{1−α}, ⟦u⟧_N = (u1 − u2) n, {r}_{1−α} = α r1 + (1 − α) r2
    for (ke, pe, we) in [(k1, &p1, alpha), (k2, &p2, 1.0 - alpha)] {
        if we == 0.0 {
            continue;
        }
        let ns = pe.len();
        for (kc, uc, sign, nf) in [(k1, &u1, -1.0, nf1), (k2, &u2, 1.0, nf2)] {
            let g = weighted_gram(pe.values.as_ref(), w, uc.values.as_ref());
            let mut local = Mat::<f64>::zeros(d * ns, uc.len());
            for c in 0..d {
                let nc = f.normal_x[c];
                for i in 0..ns {
                    for j in 0..uc.len() {
                        local[(c * ns + i, j)] = sign * we * nc * g[(i, j)];
                    }
                }
            }
            add_with_particular(&mut out.b, &mut out.lq, space.q_dofs(ke).start, ke, kc, &local, nf, 1.0);
        }
    }

    // s_h: η ∫ (u1 − u2)(v1 − v2)
    for (kr, ur, nr, sr) in [(k1, &u1, nf1, 1.0), (k2, &u2, nf2, -1.0)] {
        for (kc, uc, nc, sc) in [(k1, &u1, nf1, 1.0), (k2, &u2, nf2, -1.0)] {
            let g = weighted_gram(ur.values.subrows(0, nr), w, uc.values.as_ref());
            add_with_particular(&mut out.s, &mut out.lu, space.dofs(kr).start, kr, kc, &g, nc, eta * sr * sc);
        }
    }
}

fn assemble_dirichlet(
    space: &DiscreteSpace,
    data: &dyn HeatProblem,
    fi: usize,
    eta: f64,
    d: usize,
    out: &mut SystemBlocks,
) {
    let mesh = space.mesh();
    let f = mesh.facet(fi);
    let k = f.owner;
    let rule = facet_rule(mesh, fi, quadrature_degree(space, std::iter::once(k)));
    let w = &rule.weights;
    let basis = space.basis(k);
    let nf = basis.n_free();
    let u = basis.tabulate(&rule.points);
    let phi = space.vector_basis(k).scalar.tabulate(&rule.points);
    let ns = phi.len();

    // b_h: −∫ u r·n
    let g = weighted_gram(phi.values.as_ref(), w, u.values.as_ref());
    let local = Mat::from_fn(d * ns, u.len(), |r, j| -f.normal_x[r / ns] * g[(r % ns, j)]);
    let q0 = space.q_dofs(k).start;
    add_with_particular(&mut out.b, &mut out.lq, q0, k, k, &local, nf, 1.0);

    // s_h: η ∫ u v
    let s = weighted_gram(u.values.subrows(0, nf), w, u.values.as_ref());
    let row0 = space.dofs(k).start;
    add_with_particular(&mut out.s, &mut out.lu, row0, k, k, &s, nf, eta);

    // ℓq = −∫ g r·n, ℓu += η ∫ g v
    let gv: Vec<f64> = rule.points.iter().map(|p| data.dirichlet(p)).collect();
    if gv.iter().any(|&v| v != 0.0) {
        let gphi = weighted_sum(phi.values.as_ref(), w, &gv);
        for c in 0..d {
            for (i, v) in gphi.iter().enumerate() {
                out.lq[q0 + c * ns + i] -= f.normal_x[c] * v;
            }
        }
        for (i, v) in weighted_sum(u.values.subrows(0, nf), w, &gv).into_iter().enumerate() {
            out.lu[row0 + i] += eta * v;
        }
    }
}

fn assemble_space_interior(space: &DiscreteSpace, fi: usize, out: &mut SystemBlocks) {
    let mesh = space.mesh();
    let f = mesh.facet(fi);
    let (before, after) = (f.before().expect("interior"), f.after().expect("interior"));
    let rule = facet_rule(mesh, fi, quadrature_degree(space, [before, after].into_iter()));
    let w = &rule.weights;
    let (bp, bm) = (space.basis(after), space.basis(before));
    let (up, um) = (bp.tabulate(&rule.points), bm.tabulate(&rule.points));
    let vp = up.values.subrows(0, bp.n_free());
    let row0 = space.dofs(after).start;

    // −∫ v⁺ ⟦u⟧_t = ∫ v⁺u⁺ − ∫ v⁺u⁻
    let g = weighted_gram(vp, w, up.values.as_ref());
    add_with_particular(&mut out.m, &mut out.lu, row0, after, after, &g, bp.n_free(), 1.0);
    let g = weighted_gram(vp, w, um.values.as_ref());
    add_with_particular(&mut out.m, &mut out.lu, row0, after, before, &g, bm.n_free(), -1.0);
}

fn assemble_initial(space: &DiscreteSpace, data: &dyn HeatProblem, fi: usize, out: &mut SystemBlocks) {
    let mesh = space.mesh();
    let k = mesh.facet(fi).owner;
    let rule = facet_rule(mesh, fi, quadrature_degree(space, std::iter::once(k)));
    let w = &rule.weights;
    let basis = space.basis(k);
    let nf = basis.n_free();
    let u = basis.tabulate(&rule.points);
    let v = u.values.subrows(0, nf);
    let row0 = space.dofs(k).start;
    let g = weighted_gram(v, w, u.values.as_ref());
    add_with_particular(&mut out.m, &mut out.lu, row0, k, k, &g, nf, 1.0);
    let u0: Vec<f64> = rule.points.iter().map(|p| data.initial(p.x)).collect();
    for (i, val) in weighted_sum(v, w, &u0).into_iter().enumerate() {
        out.lu[row0 + i] += val;
    }
}

/// `A = S + BᵀD⁻¹B` and the reduced load `ℓu + BᵀD⁻¹ℓq` for the rows of
/// the assembled range, with the element Cholesky factors of `D`.
#[derive(Debug)]
pub struct ReducedSystem {
    pub elements: Range<usize>,
    pub a: BlockMatrix,
    pub load: Vec<f64>,
    pub d_factors: BTreeMap<usize, DenseCholesky>,
}

pub fn reduce(blocks: &SystemBlocks) -> Result<ReducedSystem> {
    let mut a = blocks.s.clone();
    let mut load = blocks.lu.clone();
    let mut d_factors = BTreeMap::new();
    let q_off = blocks.b.row_offsets();
    let u_off = blocks.b.col_offsets();
    for (&k, dk) in &blocks.d {
        let chol = DenseCholesky::new(dk)
            .map_err(|_| Error::Assembly(format!("flux mass matrix of element {k} is not positive definite")))?;
        let row: Vec<(usize, &Mat<f64>)> = blocks.b.row_blocks(k).collect();
        let solved: Vec<Mat<f64>> = row.iter().map(|(_, bkj)| chol.solve(bkj)).collect();
        for (i, bki) in &row {
            for ((j, _), g) in row.iter().zip(&solved) {
                let prod = bki.transpose() * g;
                a.add(*i, *j, prod.as_ref());
            }
        }
        let lq: Vec<f64> = blocks.lq[q_off[k]..q_off[k + 1]].to_vec();
        let dl = chol.solve_vec(&lq);
        for (i, bki) in &row {
            for c in 0..bki.ncols() {
                load[u_off[*i] + c] += (0..bki.nrows()).map(|r| bki[(r, c)] * dl[r]).sum::<f64>();
            }
        }
        d_factors.insert(k, chol);
    }
    Ok(ReducedSystem { elements: blocks.elements.clone(), a, load, d_factors })
}

impl SystemBlocks {
    /// `M + A`.
    pub fn total(&self, reduced: &ReducedSystem) -> BlockMatrix {
        self.m.sum(&reduced.a)
    }

    /// Flux coefficients `Q = D⁻¹(ℓq − B U)` on the assembled elements.
    pub fn flux(&self, reduced: &ReducedSystem, u: &[f64]) -> Vec<f64> {
        let bu = self.b.mul_vec(u);
        let q_off = self.b.row_offsets();
        let mut q = vec![0.0; self.lq.len()];
        for (&k, chol) in &reduced.d_factors {
            let r = q_off[k]..q_off[k + 1];
            let rhs: Vec<f64> = r.clone().map(|i| self.lq[i] - bu[i]).collect();
            for (i, v) in r.zip(chol.solve_vec(&rhs)) {
                q[i] = v;
            }
        }
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stabilization_examples() {
        assert!((stabilization_value(0.1, 1.0, 2, 2, 0.5) - 2.4).abs() < 1e-14);
        let a = stabilization_value(0.1, 1.0, 2, 2, 0.5);
        let b = stabilization_value(0.1, 1.0, 3, 2, 0.25);
        assert!((a.max(b) - 8.0).abs() < 1e-14);
        let k = Diffusion::isotropic(1, 4.0).unwrap();
        assert!((stabilization_value(1.0, k.sqrt_norm_sq(), 1, 1, 1.0) - 16.0).abs() < 1e-14);
    }

    #[test]
    fn options_validation() {
        assert!(AssemblyOptions { eta_star: 0.1, alpha: 1.5 }.validate().is_err());
        assert!(AssemblyOptions { eta_star: 0.0, alpha: 0.5 }.validate().is_err());
        assert!(AssemblyOptions { eta_star: 0.1, alpha: 0.0 }.validate().is_ok());
    }
}
