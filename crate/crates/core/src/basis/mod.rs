//! Element bases in scaled monomials.
//!
//! Every polynomial on an element `K` is stored as a coefficient vector over
//! the scaled monomials `ξ^j τ^{j_t}` with `ξ = (x − x_K)/h_Kx` and
//! `τ = (t − t_K)/h_Kt`, centred at the element centroid.

mod monomial;
mod trefftz;

use std::sync::Arc;

use faer::Mat;

pub use monomial::{Exponent, Frame, MonomialSet};
pub use trefftz::{
    embedded_particular_solution, embedded_trefftz, embedded_trefftz_basis, qt_basis, qt_particular_solution,
    EmbeddedTrefftz,
};

use crate::quadrature::{Prism, QuadRule};
use crate::{binomial, Error, Point, Result, SpaceKind};

/// Values, spatial gradients and time derivatives of a family of functions
/// at a list of points; row `i`, column `q` is function `i` at point `q`.
#[derive(Clone, Debug)]
pub struct Tabulation {
    pub values: Mat<f64>,
    pub grad: [Mat<f64>; 2],
    pub dt: Mat<f64>,
}

impl Tabulation {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn npoints(&self) -> usize {
        self.values.ncols()
    }
}

/// A family of polynomials given by a coefficient matrix over a monomial set.
#[derive(Clone, Debug)]
pub struct PolyBasis {
    pub frame: Frame,
    pub set: Arc<MonomialSet>,
    /// `len × set.len()`.
    pub coeffs: Mat<f64>,
}

impl PolyBasis {
    pub fn len(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn tabulate(&self, points: &[Point]) -> Tabulation {
        let (n, nm, nq) = (self.len(), self.set.len(), points.len());
        // column-major copy of the coefficients, accumulated point by point
        let c: Vec<f64> = (0..nm).flat_map(|l| (0..n).map(move |i| (i, l))).map(|(i, l)| self.coeffs[(i, l)]).collect();
        let mut mono = vec![[0.0; 4]; nm];
        let mut pw = Vec::new();
        let mut out = vec![[0.0; 4]; n * nq];
        for (q, p) in points.iter().enumerate() {
            self.set.eval_point(&self.frame, p, &mut pw, &mut mono);
            let col = &mut out[q * n..(q + 1) * n];
            for (l, m) in mono.iter().enumerate() {
                for (o, &cil) in col.iter_mut().zip(&c[l * n..(l + 1) * n]) {
                    o[0] += cil * m[0];
                    o[1] += cil * m[1];
                    o[2] += cil * m[2];
                    o[3] += cil * m[3];
                }
            }
        }
        let part = |k: usize| Mat::from_fn(n, nq, |i, q| out[q * n + i][k]);
        Tabulation { values: part(0), grad: [part(1), part(2)], dt: part(3) }
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.coeffs.ncols()).map(|j| self.coeffs[(i, j)]).collect()
    }

    /// The same functions on a translated copy of the element: scaled
    /// monomial coefficients are invariant under translation.
    pub fn relocated(&self, prism: &Prism) -> Self {
        Self { frame: Frame { center: prism.centroid(), tc: prism.t_center(), ..self.frame }, ..self.clone() }
    }
}

/// Scalar basis of `V_p(K)`, optionally with an element-wise particular
/// solution appended as an extra function whose coefficient is fixed to 1.
#[derive(Clone, Debug)]
pub struct ElementBasis {
    pub kind: SpaceKind,
    pub degree: usize,
    /// Free basis functions followed by the particular solution, if any.
    poly: PolyBasis,
    n_free: usize,
}

impl ElementBasis {
    pub fn new(kind: SpaceKind, degree: usize, poly: PolyBasis) -> Self {
        let n_free = poly.len();
        Self { kind, degree, poly, n_free }
    }

    /// Appends a particular solution given by monomial coefficients.
    pub fn with_particular(mut self, coeffs: &[f64]) -> Result<Self> {
        if self.has_particular() {
            return Err(Error::Basis("particular solution already set".into()));
        }
        if coeffs.len() != self.poly.set.len() {
            return Err(Error::Basis("particular solution has the wrong number of coefficients".into()));
        }
        let old = &self.poly.coeffs;
        let (n, m) = (old.nrows(), old.ncols());
        self.poly.coeffs = Mat::from_fn(n + 1, m, |i, j| if i < n { old[(i, j)] } else { coeffs[j] });
        Ok(self)
    }

    pub fn has_particular(&self) -> bool {
        self.poly.len() > self.n_free
    }

    /// Number of basis functions with free coefficients.
    pub fn n_free(&self) -> usize {
        self.n_free
    }

    /// Free functions plus the particular solution.
    pub fn n_ext(&self) -> usize {
        self.poly.len()
    }

    pub fn frame(&self) -> &Frame {
        &self.poly.frame
    }

    pub fn set(&self) -> &Arc<MonomialSet> {
        &self.poly.set
    }

    /// Coefficients of all `n_ext` functions.
    pub fn poly(&self) -> &PolyBasis {
        &self.poly
    }

    /// Tabulates all `n_ext` functions.
    pub fn tabulate(&self, points: &[Point]) -> Tabulation {
        self.poly.tabulate(points)
    }

    /// Copy for a translated element, without particular solution.
    pub fn relocated(&self, prism: &Prism) -> Self {
        let mut poly = self.poly.relocated(prism);
        poly.coeffs = poly.coeffs.subrows(0, self.n_free).to_owned();
        Self { kind: self.kind, degree: self.degree, poly, n_free: self.n_free }
    }

    /// Monomial coefficients of the free part.
    pub fn free_coeffs(&self) -> Mat<f64> {
        self.poly.coeffs.subrows(0, self.n_free).to_owned()
    }

    /// Monomial coefficients of the particular solution.
    pub fn particular(&self) -> Option<Vec<f64>> {
        self.has_particular().then(|| self.poly.row(self.n_free))
    }

    /// Point evaluation of `Σ c_i b_i` over the `n_ext` functions: value, gradient, time derivative.
    pub fn eval(&self, c: &[f64], p: &Point) -> (f64, [f64; 2], f64) {
        let tab = self.tabulate(std::slice::from_ref(p));
        let dot = |m: &Mat<f64>| (0..c.len()).map(|i| c[i] * m[(i, 0)]).sum::<f64>();
        (dot(&tab.values), [dot(&tab.grad[0]), dot(&tab.grad[1])], dot(&tab.dt))
    }
}

/// Basis of `M_p(K) = (W)^d` as `d` copies of a scalar basis of `W`.
/// Function `c·n + j` is `e_c φ_j` with `n` the scalar dimension.
#[derive(Clone, Debug)]
pub struct VectorBasis {
    pub dim: usize,
    pub scalar: PolyBasis,
}

impl VectorBasis {
    pub fn scalar_len(&self) -> usize {
        self.scalar.len()
    }

    pub fn len(&self) -> usize {
        self.dim * self.scalar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn relocated(&self, prism: &Prism) -> Self {
        Self { dim: self.dim, scalar: self.scalar.relocated(prism) }
    }
}

/// Dimension of `V_p(K)` for `d` space dimensions.
pub fn space_dimension(kind: SpaceKind, p: usize, d: usize) -> usize {
    match kind {
        SpaceKind::TensorProduct => (p + 1) * binomial(p + d, d),
        SpaceKind::Standard => binomial(p + d + 1, p),
        SpaceKind::QuasiTrefftz | SpaceKind::EmbeddedTrefftz => {
            binomial(p + d, d) + if p >= 1 { binomial(p - 1 + d, d) } else { 0 }
        }
    }
}

/// Orthonormalises the rows of `coeffs` in `L²` with respect to `rule`
/// by modified Gram–Schmidt with one reorthogonalisation pass.
pub fn orthonormalize(frame: &Frame, set: &MonomialSet, coeffs: &Mat<f64>, rule: &QuadRule) -> Result<Mat<f64>> {
    let tab = set.tabulate(frame, &rule.points);
    let sw: Vec<f64> = rule.weights.iter().map(|w| w.sqrt()).collect();
    let vals = coeffs * &tab.values;
    let (n, nq, nm) = (coeffs.nrows(), rule.len(), coeffs.ncols());
    let mut y: Vec<Vec<f64>> = (0..n).map(|i| (0..nq).map(|q| vals[(i, q)] * sw[q]).collect()).collect();
    let mut c: Vec<Vec<f64>> = (0..n).map(|i| (0..nm).map(|j| coeffs[(i, j)]).collect()).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    for i in 0..n {
        let norm0 = dot(&y[i], &y[i]).sqrt();
        for _pass in 0..2 {
            for j in 0..i {
                let r = dot(&y[j], &y[i]);
                let (yj, cj) = (y[j].clone(), c[j].clone());
                y[i].iter_mut().zip(&yj).for_each(|(a, b)| *a -= r * b);
                c[i].iter_mut().zip(&cj).for_each(|(a, b)| *a -= r * b);
            }
        }
        let norm = dot(&y[i], &y[i]).sqrt();
        if !(norm > 1e-12 * norm0) {
            return Err(Error::Basis(format!("function {i} is linearly dependent on its predecessors")));
        }
        y[i].iter_mut().for_each(|a| *a /= norm);
        c[i].iter_mut().for_each(|a| *a /= norm);
    }
    Ok(Mat::from_fn(n, nm, |i, j| c[i][j]))
}

fn identity(n: usize) -> Mat<f64> {
    Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
}

fn check_degree(p: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::InvalidParameter("polynomial degree must be at least 1".into()));
    }
    Ok(())
}

/// Orthonormal basis of the space-time polynomials of total degree `≤ p`.
pub fn orthonormal_total_degree(p: usize, prism: &Prism) -> Result<PolyBasis> {
    let frame = Frame::of(prism);
    let set = Arc::new(MonomialSet::total_degree(prism.dim, p));
    let coeffs = orthonormalize(&frame, &set, &identity(set.len()), &prism.rule(2 * p + 2))?;
    Ok(PolyBasis { frame, set, coeffs })
}

/// `V_p(K) = P^p(K)`: orthonormalised scaled monomials of total degree `≤ p`.
pub fn standard_basis(p: usize, prism: &Prism) -> Result<ElementBasis> {
    check_degree(p)?;
    Ok(ElementBasis::new(SpaceKind::Standard, p, orthonormal_total_degree(p, prism)?))
}

/// Coefficients of the Legendre polynomial `L_n(2τ)` in powers of `τ`.
fn shifted_legendre(n: usize) -> Vec<f64> {
    let mut prev = vec![1.0];
    let mut cur = vec![0.0, 1.0];
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let mut next = vec![0.0; k + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += (2 * k + 1) as f64 * c / (k + 1) as f64;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= k as f64 * c / (k + 1) as f64;
        }
        prev = cur;
        cur = next;
    }
    cur.iter().enumerate().map(|(i, c)| c * 2f64.powi(i as i32)).collect()
}

/// Orthonormal basis of `P^p(K_x) ⊗ P^p(K_t)`: an orthonormal spatial basis
/// times normalised Legendre polynomials in time.
pub fn orthonormal_tensor(p: usize, prism: &Prism) -> Result<PolyBasis> {
    let frame = Frame::of(prism);
    let spatial = MonomialSet::spatial(prism.dim, p);
    let (xs, ws) = prism.spatial_rule(2 * p + 2);
    let srule =
        QuadRule { points: xs.iter().map(|&x| Point::new(x, frame.tc)).collect(), weights: ws, degree: 2 * p + 2 };
    let phi = orthonormalize(&frame, &spatial, &identity(spatial.len()), &srule)?;
    let set = Arc::new(MonomialSet::tensor(prism.dim, p));
    let ht = prism.ht();
    let ns = spatial.len();
    let mut coeffs = Mat::<f64>::zeros((p + 1) * ns, set.len());
    for n in 0..=p {
        let leg = shifted_legendre(n);
        let scale = ((2 * n + 1) as f64 / ht).sqrt();
        for a in 0..ns {
            let row = n * ns + a;
            for (b, e) in spatial.exponents().iter().enumerate() {
                for (k, l) in leg.iter().enumerate() {
                    let j = set.index([e[0], e[1], k]).expect("tensor set contains products");
                    coeffs[(row, j)] += phi[(a, b)] * l * scale;
                }
            }
        }
    }
    Ok(PolyBasis { frame, set, coeffs })
}

/// `V_p(K) = P^p(K_x) ⊗ P^p(K_t)` with a Legendre basis in time.
pub fn tensor_product_basis(p: usize, prism: &Prism) -> Result<ElementBasis> {
    check_degree(p)?;
    Ok(ElementBasis::new(SpaceKind::TensorProduct, p, orthonormal_tensor(p, prism)?))
}

/// Basis of `M_p(K)`: the tensor-product space for [`SpaceKind::TensorProduct`],
/// `P^p(K)` otherwise, in each of the `d` components.
pub fn vector_space(kind: SpaceKind, p: usize, prism: &Prism) -> Result<VectorBasis> {
    check_degree(p)?;
    let scalar = match kind {
        SpaceKind::TensorProduct => orthonormal_tensor(p, prism)?,
        _ => orthonormal_total_degree(p, prism)?,
    };
    Ok(VectorBasis { dim: prism.dim, scalar })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn prism(dim: usize) -> Prism {
        if dim == 1 {
            Prism::new(1, vec![[0.2, 0.0], [0.7, 0.0]], (0.1, 0.35)).unwrap()
        } else {
            Prism::new(2, vec![[0.1, 0.2], [0.6, 0.25], [0.3, 0.7]], (0.0, 0.3)).unwrap()
        }
    }

    fn gram(b: &PolyBasis, prism: &Prism, q: usize) -> Mat<f64> {
        let rule = prism.rule(q);
        let tab = b.tabulate(&rule.points);
        Mat::from_fn(b.len(), b.len(), |i, j| {
            (0..rule.len()).map(|k| rule.weights[k] * tab.values[(i, k)] * tab.values[(j, k)]).sum()
        })
    }

    fn max_offdiag_identity(g: &Mat<f64>) -> f64 {
        let mut e: f64 = 0.0;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                e = e.max((g[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        e
    }

    #[test]
    fn dimensions() {
        assert_eq!(standard_basis(1, &prism(1)).unwrap().n_free(), 3);
        assert_eq!(standard_basis(2, &prism(2)).unwrap().n_free(), 10);
        assert_eq!(tensor_product_basis(1, &prism(1)).unwrap().n_free(), 4);
        assert_eq!(tensor_product_basis(2, &prism(2)).unwrap().n_free(), 18);
        for d in 1..=2 {
            for p in 1..=6 {
                assert_eq!(space_dimension(SpaceKind::Standard, p, d), binomial(p + d + 1, p));
                let pr = prism(d);
                assert_eq!(standard_basis(p, &pr).unwrap().n_free(), space_dimension(SpaceKind::Standard, p, d));
                assert_eq!(
                    tensor_product_basis(p, &pr).unwrap().n_free(),
                    space_dimension(SpaceKind::TensorProduct, p, d)
                );
            }
        }
        assert_eq!(space_dimension(SpaceKind::QuasiTrefftz, 6, 2), 49);
        assert_eq!(space_dimension(SpaceKind::Standard, 6, 2), 84);
        assert!(standard_basis(0, &prism(1)).is_err());
    }

    #[test]
    fn orthonormal_gram() {
        for d in 1..=2 {
            for p in 1..=4 {
                let pr = prism(d);
                let s = standard_basis(p, &pr).unwrap();
                assert!(max_offdiag_identity(&gram(s.poly(), &pr, 2 * p + 2)) < 1e-10);
                let t = tensor_product_basis(p, &pr).unwrap();
                assert!(max_offdiag_identity(&gram(t.poly(), &pr, 2 * p + 2)) < 1e-10);
            }
        }
    }

    #[test]
    fn legendre_factors_orthogonal_in_time() {
        let pr = prism(1);
        let (a, b) = pr.time;
        let (ts, ws) = crate::quadrature::gauss_interval(a, b, 12);
        let tc = pr.t_center();
        for m in 0..=4 {
            for n in 0..m {
                let (lm, ln) = (shifted_legendre(m), shifted_legendre(n));
                let ev = |c: &[f64], t: f64| {
                    c.iter().enumerate().map(|(k, c)| c * ((t - tc) / (b - a)).powi(k as i32)).sum::<f64>()
                };
                let g: f64 = ts.iter().zip(&ws).map(|(&t, w)| w * ev(&lm, t) * ev(&ln, t)).sum();
                assert!(g.abs() < 1e-12);
            }
        }
        // L₂(s) = (3s² − 1)/2 with s = 2τ
        assert_eq!(shifted_legendre(2), vec![-0.5, 0.0, 6.0]);
    }

    #[test]
    fn scaled_monomial_derivatives() {
        let pr = prism(2);
        let f = Frame::of(&pr);
        let set = MonomialSet::total_degree(2, 1);
        let pts = [Point::new(f.center, f.tc), Point::new([0.3, 0.3], 0.2)];
        let tab = set.tabulate(&f, &pts);
        let ix = set.index([1, 0, 0]).unwrap();
        let i0 = set.index([0, 0, 0]).unwrap();
        assert_eq!(tab.values[(i0, 0)], 1.0);
        assert_eq!(tab.values[(ix, 0)], 0.0);
        assert_eq!(tab.grad[0][(i0, 1)], 0.0);
        assert!((tab.grad[0][(ix, 1)] - 1.0 / f.hx).abs() < 1e-14);
    }

    #[test]
    fn finite_difference_gradients() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for d in 1..=2 {
            let pr = prism(d);
            let b = standard_basis(3, &pr).unwrap();
            let h = 1e-7 * (pr.hx().powi(2) + pr.ht().powi(2)).sqrt();
            for _ in 0..5 {
                let c = pr.centroid();
                let p =
                    Point::new([c[0] + rng.gen_range(-0.02..0.02), c[1] + rng.gen_range(-0.02..0.02)], pr.t_center());
                let tab = b.tabulate(&[p]);
                for i in 0..b.n_free() {
                    let mut coef = vec![0.0; b.n_ext()];
                    coef[i] = 1.0;
                    let f = |q: Point| b.eval(&coef, &q).0;
                    let fd_t = (f(Point::new(p.x, p.t + h)) - f(Point::new(p.x, p.t - h))) / (2.0 * h);
                    let fd_x = (f(Point::new([p.x[0] + h, p.x[1]], p.t)) - f(Point::new([p.x[0] - h, p.x[1]], p.t)))
                        / (2.0 * h);
                    let scale = 1.0 + tab.dt[(i, 0)].abs().max(tab.grad[0][(i, 0)].abs());
                    assert!((fd_t - tab.dt[(i, 0)]).abs() < 1e-6 * scale);
                    assert!((fd_x - tab.grad[0][(i, 0)]).abs() < 1e-6 * scale);
                }
            }
        }
    }
}
