use std::collections::HashMap;

use faer::Mat;

use super::Tabulation;
use crate::quadrature::Prism;
use crate::Point;

/// Exponents `(j_x1, j_x2, j_t)`; `j_x2 = 0` in one space dimension.
pub type Exponent = [usize; 3];

/// Centre and scales of the scaled monomials on an element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub dim: usize,
    pub center: [f64; 2],
    pub tc: f64,
    pub hx: f64,
    pub ht: f64,
}

impl Frame {
    pub fn of(prism: &Prism) -> Self {
        Self { dim: prism.dim, center: prism.centroid(), tc: prism.t_center(), hx: prism.hx(), ht: prism.ht() }
    }

    /// Scaled coordinates `(ξ₁, ξ₂, τ)` of `p`.
    pub fn scaled(&self, p: &Point) -> [f64; 3] {
        [
            (p.x[0] - self.center[0]) / self.hx,
            if self.dim == 2 { (p.x[1] - self.center[1]) / self.hx } else { 0.0 },
            (p.t - self.tc) / self.ht,
        ]
    }
}

/// Ordered set of monomial exponents.
#[derive(Clone, Debug)]
pub struct MonomialSet {
    dim: usize,
    exps: Vec<Exponent>,
    lookup: HashMap<Exponent, usize>,
}

impl MonomialSet {
    fn from_exponents(dim: usize, exps: Vec<Exponent>) -> Self {
        let lookup = exps.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        Self { dim, exps, lookup }
    }

    /// Space-time monomials of total degree `≤ p`, graded by degree.
    pub fn total_degree(dim: usize, p: usize) -> Self {
        let mut exps = Vec::new();
        for deg in 0..=p {
            for jt in (0..=deg).rev() {
                let rest = deg - jt;
                if dim == 1 {
                    exps.push([rest, 0, jt]);
                } else {
                    for j2 in 0..=rest {
                        exps.push([rest - j2, j2, jt]);
                    }
                }
            }
        }
        Self::from_exponents(dim, exps)
    }

    /// Spatial monomials of total degree `≤ p`, graded by degree.
    pub fn spatial(dim: usize, p: usize) -> Self {
        let exps = Self::total_degree(dim, p).exps.into_iter().filter(|e| e[2] == 0).collect();
        Self::from_exponents(dim, exps)
    }

    /// Spatial total degree `≤ p` times time degree `≤ p`.
    pub fn tensor(dim: usize, p: usize) -> Self {
        let spatial = Self::spatial(dim, p);
        let mut exps = Vec::new();
        for jt in 0..=p {
            for e in &spatial.exps {
                exps.push([e[0], e[1], jt]);
            }
        }
        Self::from_exponents(dim, exps)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponents(&self) -> &[Exponent] {
        &self.exps
    }

    pub fn index(&self, e: Exponent) -> Option<usize> {
        self.lookup.get(&e).copied()
    }

    fn max_exponent(&self) -> usize {
        self.exps.iter().map(|e| e[0].max(e[1]).max(e[2])).max().unwrap_or(0)
    }

    /// Value, `∂_{x₁}`, `∂_{x₂}` and `∂ₜ` of every monomial at `p`, written
    /// to `out`; `pw` is scratch space.
    pub(crate) fn eval_point(&self, frame: &Frame, p: &Point, pw: &mut Vec<[f64; 3]>, out: &mut [[f64; 4]]) {
        let maxdeg = self.max_exponent();
        pw.clear();
        pw.push([1.0; 3]);
        let s = frame.scaled(p);
        for k in 1..=maxdeg {
            let prev = pw[k - 1];
            pw.push([prev[0] * s[0], prev[1] * s[1], prev[2] * s[2]]);
        }
        for (e, o) in self.exps.iter().zip(out.iter_mut()) {
            let (a, b, c) = (pw[e[0]][0], pw[e[1]][1], pw[e[2]][2]);
            o[0] = a * b * c;
            o[1] = if e[0] > 0 { e[0] as f64 * pw[e[0] - 1][0] * b * c / frame.hx } else { 0.0 };
            o[2] = if e[1] > 0 { e[1] as f64 * a * pw[e[1] - 1][1] * c / frame.hx } else { 0.0 };
            o[3] = if e[2] > 0 { e[2] as f64 * a * b * pw[e[2] - 1][2] / frame.ht } else { 0.0 };
        }
    }

    /// Values and derivatives of every monomial (rows) at every point (columns).
    pub fn tabulate(&self, frame: &Frame, points: &[Point]) -> Tabulation {
        let (n, nq) = (self.len(), points.len());
        let mut buf = vec![[0.0; 4]; n];
        let mut pw = Vec::new();
        let mut cols = Vec::with_capacity(n * nq);
        for p in points {
            self.eval_point(frame, p, &mut pw, &mut buf);
            cols.extend_from_slice(&buf);
        }
        let part = |c: usize| Mat::from_fn(n, nq, |i, q| cols[q * n + i][c]);
        Tabulation { values: part(0), grad: [part(1), part(2)], dt: part(3) }
    }

    /// Coefficients of `∂ₜ u` for `u` given by `c`.
    pub fn time_derivative(&self, frame: &Frame, c: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (i, e) in self.exps.iter().enumerate() {
            if e[2] > 0 && c[i] != 0.0 {
                let j = self.index([e[0], e[1], e[2] - 1]).expect("downward closed set");
                out[j] += c[i] * e[2] as f64 / frame.ht;
            }
        }
        out
    }

    /// Coefficients of `H u = ∂ₜu − ∇·(k∇u)` for `u` given by `c`.
    pub fn apply_heat(&self, frame: &Frame, k: [[f64; 2]; 2], c: &[f64]) -> Vec<f64> {
        let mut out = self.time_derivative(frame, c);
        let h2 = frame.hx * frame.hx;
        for (i, e) in self.exps.iter().enumerate() {
            if c[i] == 0.0 {
                continue;
            }
            let mut add = |target: Exponent, factor: f64| {
                let j = self.index(target).expect("downward closed set");
                out[j] -= c[i] * factor / h2;
            };
            if e[0] >= 2 {
                add([e[0] - 2, e[1], e[2]], k[0][0] * (e[0] * (e[0] - 1)) as f64);
            }
            if e[1] >= 2 {
                add([e[0], e[1] - 2, e[2]], k[1][1] * (e[1] * (e[1] - 1)) as f64);
            }
            if e[0] >= 1 && e[1] >= 1 {
                add([e[0] - 1, e[1] - 1, e[2]], (k[0][1] + k[1][0]) * (e[0] * e[1]) as f64);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binomial;

    #[test]
    fn set_sizes() {
        for d in 1..=2 {
            for p in 0..=6 {
                assert_eq!(MonomialSet::total_degree(d, p).len(), binomial(p + d + 1, d + 1));
                assert_eq!(MonomialSet::spatial(d, p).len(), binomial(p + d, d));
                assert_eq!(MonomialSet::tensor(d, p).len(), (p + 1) * binomial(p + d, d));
            }
        }
    }

    #[test]
    fn heat_of_heat_polynomial_vanishes() {
        // x² + 2t centred at the origin with unit scales
        let f = Frame { dim: 1, center: [0.0; 2], tc: 0.0, hx: 1.0, ht: 1.0 };
        let set = MonomialSet::total_degree(1, 2);
        let mut c = vec![0.0; set.len()];
        c[set.index([2, 0, 0]).unwrap()] = 1.0;
        c[set.index([0, 0, 1]).unwrap()] = 2.0;
        let h = set.apply_heat(&f, [[1.0, 0.0], [0.0, 0.0]], &c);
        assert!(h.iter().all(|&v| v == 0.0));
    }
}
