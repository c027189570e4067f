//! Quasi-Trefftz and embedded Trefftz spaces.

use std::sync::Arc;

use faer::Mat;

use super::{orthonormal_total_degree, orthonormalize, space_dimension, ElementBasis, Frame, MonomialSet, PolyBasis};
use crate::quadrature::Prism;
use crate::{Diffusion, Error, Point, Result, SpaceKind};

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Fills the layers `j_x1 ≥ 2` of `a` so that the scaled Taylor
/// coefficients of `H u` up to order `p − 2` equal `rhs`.
fn qt_recursion(set: &MonomialSet, frame: &Frame, kappa: f64, a: &mut [f64], rhs: impl Fn([usize; 3]) -> f64) {
    let (hx2, ht) = (frame.hx * frame.hx, frame.ht);
    let p = set.exponents().iter().map(|e| e[0] + e[1] + e[2]).max().unwrap_or(0);
    for j1 in 2..=p {
        for (idx, e) in set.exponents().iter().enumerate() {
            if e[0] != j1 {
                continue;
            }
            let i = [j1 - 2, e[1], e[2]];
            let at = |ex: [usize; 3]| set.index(ex).map_or(0.0, |j| a[j]);
            let mut v = (i[2] + 1) as f64 / ht * at([i[0], i[1], i[2] + 1]) - rhs(i);
            if frame.dim == 2 {
                v -= kappa / hx2 * ((i[1] + 2) * (i[1] + 1)) as f64 * at([i[0], i[1] + 2, i[2]]);
            }
            a[idx] = v * hx2 / (kappa * ((i[0] + 2) * (i[0] + 1)) as f64);
        }
    }
}

fn scalar_kappa(k: &Diffusion) -> Result<f64> {
    k.scalar().ok_or_else(|| Error::InvalidParameter("quasi-Trefftz spaces need k = κ·Id; use embedded Trefftz".into()))
}

/// Quasi-Trefftz space: polynomials of degree `≤ p` whose image under the
/// heat operator has vanishing Taylor coefficients up to order `p − 2` at
/// the element centre. Seeds are monomials in `(x₂, t)` on the layers
/// `j_x1 ∈ {0, 1}`; the result is orthonormalised.
pub fn qt_basis(p: usize, prism: &Prism, k: &Diffusion) -> Result<ElementBasis> {
    if p == 0 {
        return Err(Error::InvalidParameter("polynomial degree must be at least 1".into()));
    }
    let kappa = scalar_kappa(k)?;
    let frame = Frame::of(prism);
    let set = Arc::new(MonomialSet::total_degree(prism.dim, p));
    let seeds: Vec<usize> = (0..set.len()).filter(|&i| set.exponents()[i][0] <= 1).collect();
    let mut coeffs = Mat::<f64>::zeros(seeds.len(), set.len());
    for (row, &s) in seeds.iter().enumerate() {
        let mut a = vec![0.0; set.len()];
        a[s] = 1.0;
        qt_recursion(&set, &frame, kappa, &mut a, |_| 0.0);
        for (j, v) in a.into_iter().enumerate() {
            coeffs[(row, j)] = v;
        }
    }
    let expected = space_dimension(SpaceKind::QuasiTrefftz, p, prism.dim);
    if seeds.len() != expected {
        return Err(Error::Basis(format!("quasi-Trefftz seeds: {} instead of {expected}", seeds.len())));
    }
    let coeffs = orthonormalize(&frame, &set, &coeffs, &prism.rule(2 * p + 2))?;
    Ok(ElementBasis::new(SpaceKind::QuasiTrefftz, p, PolyBasis { frame, set, coeffs }))
}

/// Polynomial `u` of degree `≤ p` with `D^i(H u)(x_K, t_K) = D^i f(x_K, t_K)`
/// for all `|i| ≤ p − 2`, with zero seed layers. `derivative(i)` returns
/// `D^i f` at the element centre for `i = (i_x1, i_x2, i_t)`.
/// Returns coefficients over [`MonomialSet::total_degree`].
pub fn qt_particular_solution(
    p: usize,
    prism: &Prism,
    k: &Diffusion,
    derivative: impl Fn([usize; 3]) -> Option<f64>,
) -> Result<Vec<f64>> {
    let kappa = scalar_kappa(k)?;
    let frame = Frame::of(prism);
    let set = MonomialSet::total_degree(prism.dim, p);
    let mut taylor = std::collections::HashMap::new();
    for e in MonomialSet::total_degree(prism.dim, p.saturating_sub(2)).exponents() {
        if p < 2 {
            break;
        }
        let d = derivative(*e)
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::InvalidParameter(format!("missing source derivative {e:?}")))?;
        let scale = frame.hx.powi((e[0] + e[1]) as i32) * frame.ht.powi(e[2] as i32)
            / (factorial(e[0]) * factorial(e[1]) * factorial(e[2]));
        taylor.insert(*e, d * scale);
    }
    let mut a = vec![0.0; set.len()];
    qt_recursion(&set, &frame, kappa, &mut a, |i| taylor.get(&i).copied().unwrap_or(0.0));
    Ok(a)
}

/// Embedded Trefftz data: the weak-Trefftz null space of
/// `W[m, j] = ∫_K q_m H b_j` with `q_m` an orthonormal basis of `P^{p−2}`
/// and `b_j` an orthonormal basis of `P^p`, plus the SVD needed for
/// particular solutions.
#[derive(Clone, Debug)]
pub struct EmbeddedTrefftz {
    pub basis: ElementBasis,
    /// Orthonormal `P^p` basis; the first rows span `P^{p−2}`.
    pub trial: PolyBasis,
    pub n_test: usize,
    pub w: Mat<f64>,
    u: Mat<f64>,
    v: Mat<f64>,
    sigma: Vec<f64>,
    rank: usize,
    k: [[f64; 2]; 2],
    prism: Prism,
}

const SVD_CUTOFF: f64 = 1e-10;

pub fn embedded_trefftz(p: usize, prism: &Prism, k: &Diffusion) -> Result<EmbeddedTrefftz> {
    if p == 0 {
        return Err(Error::InvalidParameter("polynomial degree must be at least 1".into()));
    }
    let trial = orthonormal_total_degree(p, prism)?;
    let set = trial.set.clone();
    let frame = trial.frame;
    let n = trial.len();
    let n_test = if p >= 2 { MonomialSet::total_degree(prism.dim, p - 2).len() } else { 0 };
    let km = k.matrix();

    // H b_j as monomial coefficients, then W = ∫ q_m H b_j by quadrature
    let rule = prism.rule(2 * p + 2);
    let tab = set.tabulate(&frame, &rule.points);
    let mut hb = Mat::<f64>::zeros(n, set.len());
    for j in 0..n {
        for (l, v) in set.apply_heat(&frame, km, &trial.row(j)).into_iter().enumerate() {
            hb[(j, l)] = v;
        }
    }
    let hvals = &hb * &tab.values;
    let tvals = trial.coeffs.subrows(0, n_test) * &tab.values;
    let w =
        Mat::from_fn(n_test, n, |m, j| (0..rule.len()).map(|q| rule.weights[q] * tvals[(m, q)] * hvals[(j, q)]).sum());

    let (u, v, sigma) = if n_test > 0 {
        let svd = w.svd().map_err(|e| Error::Basis(format!("SVD failed: {e:?}")))?;
        let s = svd.S().column_vector();
        let sigma: Vec<f64> = (0..s.nrows()).map(|i| s[i]).collect();
        (svd.U().to_owned(), svd.V().to_owned(), sigma)
    } else {
        (Mat::zeros(0, 0), Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 }), Vec::new())
    };
    let smax = sigma.first().copied().unwrap_or(0.0);
    let rank = sigma.iter().filter(|&&s| s > SVD_CUTOFF * smax).count();
    let expected = space_dimension(SpaceKind::EmbeddedTrefftz, p, prism.dim);
    if n - rank != expected {
        return Err(Error::Basis(format!(
            "embedded Trefftz null space has dimension {} instead of {expected}",
            n - rank
        )));
    }
    // null-space vectors in trial coordinates, mapped to monomials
    let null = v.subcols(rank, n - rank).transpose().to_owned();
    let coeffs = &null * &trial.coeffs;
    let basis = ElementBasis::new(SpaceKind::EmbeddedTrefftz, p, PolyBasis { frame, set, coeffs });
    Ok(EmbeddedTrefftz { basis, trial, n_test, w, u, v, sigma, rank, k: km, prism: prism.clone() })
}

pub fn embedded_trefftz_basis(p: usize, prism: &Prism, k: &Diffusion) -> Result<ElementBasis> {
    Ok(embedded_trefftz(p, prism, k)?.basis)
}

impl EmbeddedTrefftz {
    /// Copy for a translated element.
    pub fn relocated(&self, prism: &Prism) -> Self {
        let mut et = self.clone();
        et.basis = self.basis.relocated(prism);
        et.trial = self.trial.relocated(prism);
        et.prism = prism.clone();
        et
    }

    /// `F_m = ∫_K q_m f` by quadrature.
    pub fn load(&self, f: impl Fn(&Point) -> f64) -> Vec<f64> {
        let p = self.basis.degree;
        let rule = self.prism.rule(2 * p + 4);
        let tab = self.trial.tabulate(&rule.points);
        let fv: Vec<f64> = rule.points.iter().map(&f).collect();
        (0..self.n_test).map(|m| (0..rule.len()).map(|q| rule.weights[q] * tab.values[(m, q)] * fv[q]).sum()).collect()
    }

    /// Minimal-norm least-squares solution of `W u = F` via the truncated
    /// pseudo-inverse, returned as monomial coefficients.
    pub fn particular(&self, load: &[f64]) -> Vec<f64> {
        let n = self.trial.len();
        let mut y = vec![0.0; n];
        for i in 0..self.rank {
            let proj: f64 = (0..self.n_test).map(|m| self.u[(m, i)] * load[m]).sum::<f64>() / self.sigma[i];
            for (j, yj) in y.iter_mut().enumerate() {
                *yj += self.v[(j, i)] * proj;
            }
        }
        let nm = self.trial.set.len();
        (0..nm).map(|l| (0..n).map(|j| y[j] * self.trial.coeffs[(j, l)]).sum()).collect()
    }

    /// `‖W c − F‖` for trial-basis coordinates of monomial coefficients `c`.
    pub fn residual(&self, coeffs: &[f64], load: &[f64]) -> f64 {
        let y = self.trial_coordinates(coeffs);
        (0..self.n_test)
            .map(|m| {
                let r: f64 = (0..y.len()).map(|j| self.w[(m, j)] * y[j]).sum::<f64>() - load[m];
                r * r
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Coordinates of a polynomial of degree `≤ p` in the orthonormal trial basis.
    pub fn trial_coordinates(&self, coeffs: &[f64]) -> Vec<f64> {
        let rule = self.prism.rule(2 * self.basis.degree + 2);
        let tab = self.trial.set.tabulate(&self.trial.frame, &rule.points);
        let tv = self.trial.tabulate(&rule.points);
        let f: Vec<f64> =
            (0..rule.len()).map(|q| (0..coeffs.len()).map(|l| coeffs[l] * tab.values[(l, q)]).sum()).collect();
        (0..self.trial.len())
            .map(|j| (0..rule.len()).map(|q| rule.weights[q] * tv.values[(j, q)] * f[q]).sum())
            .collect()
    }

    pub fn diffusion_matrix(&self) -> [[f64; 2]; 2] {
        self.k
    }
}

/// Particular solution on an embedded Trefftz element for the source `f`.
pub fn embedded_particular_solution(et: &EmbeddedTrefftz, f: impl Fn(&Point) -> f64) -> Vec<f64> {
    et.particular(&et.load(f))
}
