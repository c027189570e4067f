//! Benchmark problems with exact solutions.

use std::f64::consts::PI;

use crate::mesh::BoxDomain;
use crate::{Diffusion, Error, Point, Result};

/// Data of `∂ₜu − ∇·(k∇u) = f` in `Ω × (0, T)`, `u = g_D` on `∂Ω`,
/// `u(·, 0) = u₀`, together with the exact solution.
pub trait HeatProblem: Send + Sync + std::fmt::Debug {
    fn name(&self) -> String;
    fn dim(&self) -> usize;
    fn domain(&self) -> BoxDomain {
        BoxDomain::unit(self.dim())
    }
    fn final_time(&self) -> f64;
    fn diffusion(&self) -> Diffusion {
        Diffusion::isotropic(self.dim(), 1.0).expect("unit diffusion")
    }
    fn source(&self, p: &Point) -> f64;
    fn source_is_zero(&self) -> bool {
        false
    }
    /// `∂^{i_x1}_{x1} ∂^{i_x2}_{x2} ∂^{i_t}_t f` at `p`, if available.
    fn source_derivative(&self, p: &Point, order: [usize; 3]) -> Option<f64>;
    fn initial(&self, x: [f64; 2]) -> f64 {
        self.exact(&Point::new(x, 0.0))
    }
    fn dirichlet(&self, p: &Point) -> f64 {
        self.exact(p)
    }
    fn exact(&self, p: &Point) -> f64;
    fn exact_gradient(&self, p: &Point) -> [f64; 2];
    fn exact_dt(&self, p: &Point) -> f64;
}

/// `∂ⁿ/∂xⁿ sin(πx) = πⁿ sin(πx + nπ/2)`.
fn dsin(x: f64, n: usize) -> f64 {
    PI.powi(n as i32) * (PI * x + n as f64 * 0.5 * PI).sin()
}

/// `e^{−t} Π sin(π x_i)` on `(0, 1)^d × (0, 1)`.
#[derive(Clone, Debug)]
pub struct SmoothSine {
    pub dim: usize,
}

impl SmoothSine {
    fn spatial(&self, x: [f64; 2], order: [usize; 2]) -> f64 {
        let s = dsin(x[0], order[0]);
        if self.dim == 2 {
            s * dsin(x[1], order[1])
        } else if order[1] == 0 {
            s
        } else {
            0.0
        }
    }

    fn rate(&self) -> f64 {
        self.dim as f64 * PI * PI - 1.0
    }
}

impl HeatProblem for SmoothSine {
    fn name(&self) -> String {
        format!("smooth-{}d", self.dim)
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn final_time(&self) -> f64 {
        1.0
    }
    fn source(&self, p: &Point) -> f64 {
        self.rate() * self.exact(p)
    }
    fn source_derivative(&self, p: &Point, o: [usize; 3]) -> Option<f64> {
        let sign = if o[2].is_multiple_of(2) { 1.0 } else { -1.0 };
        Some(self.rate() * sign * (-p.t).exp() * self.spatial(p.x, [o[0], o[1]]))
    }
    fn exact(&self, p: &Point) -> f64 {
        (-p.t).exp() * self.spatial(p.x, [0, 0])
    }
    fn exact_gradient(&self, p: &Point) -> [f64; 2] {
        let e = (-p.t).exp();
        [e * self.spatial(p.x, [1, 0]), e * self.spatial(p.x, [0, 1])]
    }
    fn exact_dt(&self, p: &Point) -> f64 {
        -self.exact(p)
    }
}

/// `e^{−t} sin(πx) sin(πy)` on `(0, 1)² × (0, 1)`.
pub fn smooth_2d() -> SmoothSine {
    SmoothSine { dim: 2 }
}

/// `e^{−t} sin(πx)` on `(0, 1) × (0, 1)`.
pub fn smooth_1d() -> SmoothSine {
    SmoothSine { dim: 1 }
}

/// `t^α sin(πx) sin(πy)` on `(0, 1)² × (0, 0.1)`, singular at `t = 0`.
/// The source `(α t^{α−1} + 2π² t^α) sin(πx) sin(πy)` is unbounded at
/// `t = 0`; Gauss points never sample it there.
#[derive(Clone, Debug)]
pub struct InitialLayer {
    pub alpha: f64,
}

/// `β(β−1)…(β−n+1) t^{β−n}`.
fn dpow(t: f64, beta: f64, n: usize) -> f64 {
    let c: f64 = (0..n).map(|i| beta - i as f64).product();
    c * t.powf(beta - n as f64)
}

impl HeatProblem for InitialLayer {
    fn name(&self) -> String {
        "initial-layer".into()
    }
    fn dim(&self) -> usize {
        2
    }
    fn final_time(&self) -> f64 {
        0.1
    }
    fn source(&self, p: &Point) -> f64 {
        let a = self.alpha;
        (a * p.t.powf(a - 1.0) + 2.0 * PI * PI * p.t.powf(a)) * dsin(p.x[0], 0) * dsin(p.x[1], 0)
    }
    fn source_derivative(&self, p: &Point, o: [usize; 3]) -> Option<f64> {
        let a = self.alpha;
        let time = a * dpow(p.t, a - 1.0, o[2]) + 2.0 * PI * PI * dpow(p.t, a, o[2]);
        Some(time * dsin(p.x[0], o[0]) * dsin(p.x[1], o[1]))
    }
    fn initial(&self, _x: [f64; 2]) -> f64 {
        0.0
    }
    fn exact(&self, p: &Point) -> f64 {
        p.t.powf(self.alpha) * dsin(p.x[0], 0) * dsin(p.x[1], 0)
    }
    fn exact_gradient(&self, p: &Point) -> [f64; 2] {
        let ta = p.t.powf(self.alpha);
        [ta * dsin(p.x[0], 1) * dsin(p.x[1], 0), ta * dsin(p.x[0], 0) * dsin(p.x[1], 1)]
    }
    fn exact_dt(&self, p: &Point) -> f64 {
        dpow(p.t, self.alpha, 1) * dsin(p.x[0], 0) * dsin(p.x[1], 0)
    }
}

pub fn initial_layer() -> InitialLayer {
    InitialLayer { alpha: 0.75 }
}

/// Heat flow from `u₀ = 1` with `u = 0` on `x ∈ {0, 1}`: the Fourier series
/// `Σ_{n=0}^{N} 4/((2n+1)π) sin((2n+1)πx) exp(−(2n+1)²π²t)`, truncated at
/// `N = terms`. The neglected tail is bounded by `e^{−(2N+3)²π²t}` times a
/// harmonic-series factor, negligible for `t ≳ 10⁻⁵` at `N = 500`.
#[derive(Clone, Debug)]
pub struct Incompatible1d {
    pub terms: usize,
}

impl Incompatible1d {
    fn series(&self, p: &Point, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
        // terms with (2n+1)²π²t > 80 are below 1e-30 relative to the leading
        // one and are skipped; the rest is summed from the smallest term up
        let last = if p.t > 0.0 {
            let n = ((80.0 / (PI * PI * p.t)).sqrt() - 1.0) / 2.0;
            (n.ceil().max(0.0) as usize).min(self.terms)
        } else {
            self.terms
        };
        (0..=last)
            .rev()
            .map(|n| {
                let m = (2 * n + 1) as f64 * PI;
                let decay = (-m * m * p.t).exp();
                if decay == 0.0 {
                    0.0
                } else {
                    4.0 / m * decay * f(m, p.x[0], m * m)
                }
            })
            .sum()
    }
}

impl HeatProblem for Incompatible1d {
    fn name(&self) -> String {
        "incompatible-1d".into()
    }
    fn dim(&self) -> usize {
        1
    }
    fn final_time(&self) -> f64 {
        1.0
    }
    fn source(&self, _p: &Point) -> f64 {
        0.0
    }
    fn source_is_zero(&self) -> bool {
        true
    }
    fn source_derivative(&self, _p: &Point, _o: [usize; 3]) -> Option<f64> {
        Some(0.0)
    }
    fn initial(&self, _x: [f64; 2]) -> f64 {
        1.0
    }
    fn dirichlet(&self, _p: &Point) -> f64 {
        0.0
    }
    fn exact(&self, p: &Point) -> f64 {
        self.series(p, |m, x, _| (m * x).sin())
    }
    fn exact_gradient(&self, p: &Point) -> [f64; 2] {
        [self.series(p, |m, x, _| m * (m * x).cos()), 0.0]
    }
    fn exact_dt(&self, p: &Point) -> f64 {
        self.series(p, |m, x, m2| -m2 * (m * x).sin())
    }
}

pub fn incompatible_1d() -> Incompatible1d {
    Incompatible1d { terms: 500 }
}

/// Heat polynomial `v_n(x, t) = Σ_k n!/(k!(n−2k)!) x^{n−2k} t^k`, which
/// satisfies `∂ₜv_n = ∂ₓ²v_n`, `∂ₓv_n = n v_{n−1}`.
pub fn heat_polynomial(n: usize, x: f64, t: f64) -> f64 {
    let fact = |m: usize| (1..=m).map(|i| i as f64).product::<f64>();
    (0..=n / 2).map(|k| fact(n) / (fact(k) * fact(n - 2 * k)) * x.powi((n - 2 * k) as i32) * t.powi(k as i32)).sum()
}

/// Exact polynomial solution of degree `p` with `f = 0`, `k = Id`:
/// `v_p(x, t)` in 1D and `v_p(x, t) + y·v_{p−1}(x, t)` in 2D.
#[derive(Clone, Debug)]
pub struct HeatPolynomial {
    pub dim: usize,
    pub degree: usize,
}

impl HeatPolynomial {
    fn v(&self, n: isize, x: f64, t: f64) -> f64 {
        if n < 0 {
            0.0
        } else {
            heat_polynomial(n as usize, x, t)
        }
    }
}

impl HeatProblem for HeatPolynomial {
    fn name(&self) -> String {
        format!("polynomial-{}d-p{}", self.dim, self.degree)
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn final_time(&self) -> f64 {
        1.0
    }
    fn source(&self, _p: &Point) -> f64 {
        0.0
    }
    fn source_is_zero(&self) -> bool {
        true
    }
    fn source_derivative(&self, _p: &Point, _o: [usize; 3]) -> Option<f64> {
        Some(0.0)
    }
    fn exact(&self, p: &Point) -> f64 {
        let n = self.degree as isize;
        let (x, t) = (p.x[0], p.t);
        let mut u = self.v(n, x, t);
        if self.dim == 2 {
            u += p.x[1] * self.v(n - 1, x, t);
        }
        u
    }
    fn exact_gradient(&self, p: &Point) -> [f64; 2] {
        let n = self.degree as isize;
        let (x, t) = (p.x[0], p.t);
        let mut gx = n as f64 * self.v(n - 1, x, t);
        let mut gy = 0.0;
        if self.dim == 2 {
            gx += p.x[1] * (n - 1) as f64 * self.v(n - 2, x, t);
            gy = self.v(n - 1, x, t);
        }
        [gx, gy]
    }
    fn exact_dt(&self, p: &Point) -> f64 {
        let n = self.degree as isize;
        let (x, t) = (p.x[0], p.t);
        let mut d = (n * (n - 1)) as f64 * self.v(n - 2, x, t);
        if self.dim == 2 {
            d += p.x[1] * ((n - 1) * (n - 2)) as f64 * self.v(n - 3, x, t);
        }
        d
    }
}

pub fn polynomial_manufactured(dim: usize, p: usize) -> Result<HeatPolynomial> {
    if !(1..=2).contains(&dim) || p == 0 {
        return Err(Error::InvalidParameter(format!(
            "polynomial problem needs d ∈ {{1, 2}} and p ≥ 1 (d = {dim}, p = {p})"
        )));
    }
    Ok(HeatPolynomial { dim, degree: p })
}

/// All data zero on `(0, 1)^d × (0, T)`.
#[derive(Clone, Debug)]
pub struct Homogeneous {
    pub dim: usize,
    pub final_time: f64,
}

impl HeatProblem for Homogeneous {
    fn name(&self) -> String {
        format!("homogeneous-{}d", self.dim)
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn final_time(&self) -> f64 {
        self.final_time
    }
    fn source(&self, _p: &Point) -> f64 {
        0.0
    }
    fn source_is_zero(&self) -> bool {
        true
    }
    fn source_derivative(&self, _p: &Point, _o: [usize; 3]) -> Option<f64> {
        Some(0.0)
    }
    fn exact(&self, _p: &Point) -> f64 {
        0.0
    }
    fn exact_gradient(&self, _p: &Point) -> [f64; 2] {
        [0.0; 2]
    }
    fn exact_dt(&self, _p: &Point) -> f64 {
        0.0
    }
}

/// Looks a problem up by its command-line name. `dim` and `degree` are
/// used by the families that need them.
pub fn problem_by_name(name: &str, dim: usize, degree: usize) -> Result<Box<dyn HeatProblem>> {
    Ok(match name {
        "smooth" => {
            if !(1..=2).contains(&dim) {
                return Err(Error::InvalidParameter(format!("smooth problem needs d ∈ {{1, 2}}, got {dim}")));
            }
            Box::new(SmoothSine { dim })
        }
        "smooth-1d" => Box::new(smooth_1d()),
        "smooth-2d" => Box::new(smooth_2d()),
        "initial-layer" => Box::new(initial_layer()),
        "incompatible-1d" => Box::new(incompatible_1d()),
        "polynomial" => Box::new(polynomial_manufactured(dim, degree)?),
        "homogeneous" => Box::new(Homogeneous { dim, final_time: 1.0 }),
        other => return Err(Error::InvalidParameter(format!("unknown problem `{other}`"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// `∂ₜu − Δu − f` with the Laplacian from central differences of the
    /// exact gradient.
    fn residual(pb: &dyn HeatProblem, p: &Point) -> f64 {
        let h = 1e-6;
        let mut lap = 0.0;
        for i in 0..pb.dim() {
            let (mut a, mut b) = (*p, *p);
            a.x[i] += h;
            b.x[i] -= h;
            lap += (pb.exact_gradient(&a)[i] - pb.exact_gradient(&b)[i]) / (2.0 * h);
        }
        pb.exact_dt(p) - lap - pb.source(p)
    }

    fn random_point(rng: &mut impl Rng, pb: &dyn HeatProblem, tmin: f64) -> Point {
        let t = rng.gen_range(tmin..pb.final_time());
        Point::new([rng.gen_range(0.05..0.95), if pb.dim() == 2 { rng.gen_range(0.05..0.95) } else { 0.0 }], t)
    }

    #[test]
    fn pde_residuals() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let problems: Vec<(Box<dyn HeatProblem>, f64)> = vec![
            (Box::new(smooth_2d()), 0.0),
            (Box::new(smooth_1d()), 0.0),
            (Box::new(initial_layer()), 1e-3),
            (Box::new(incompatible_1d()), 1e-3),
            (Box::new(polynomial_manufactured(1, 3).unwrap()), 0.0),
            (Box::new(polynomial_manufactured(2, 4).unwrap()), 0.0),
        ];
        for (pb, tmin) in &problems {
            for _ in 0..100 {
                let p = random_point(&mut rng, pb.as_ref(), tmin.max(1e-6));
                let scale = 1.0 + pb.exact_dt(&p).abs();
                assert!(residual(pb.as_ref(), &p).abs() < 1e-6 * scale, "{}", pb.name());
            }
        }
    }

    #[test]
    fn smooth_values() {
        let pb = smooth_2d();
        assert!((pb.exact(&Point::new([0.5, 0.5], 0.0)) - 1.0).abs() < 1e-15);
        let p = Point::new([0.3, 0.8], 0.4);
        assert!((pb.source(&p) / pb.exact(&p) - (2.0 * PI * PI - 1.0)).abs() < 1e-12);
        // derivative of the source against a difference quotient
        let h = 1e-6;
        let fd =
            (pb.source(&Point::new([0.3 + h, 0.8], 0.4)) - pb.source(&Point::new([0.3 - h, 0.8], 0.4))) / (2.0 * h);
        assert!((pb.source_derivative(&p, [1, 0, 0]).unwrap() - fd).abs() < 1e-6 * fd.abs());
        assert_eq!(pb.source_derivative(&p, [0, 0, 1]).unwrap(), -pb.source(&p));
    }

    #[test]
    fn initial_layer_values() {
        let pb = initial_layer();
        assert_eq!(pb.exact(&Point::new([0.3, 0.6], 0.0)), 0.0);
        assert_eq!(pb.alpha, 0.75);
        let p = Point::new([0.3, 0.6], 0.02);
        let h = 1e-7;
        let fd = (pb.source(&Point::new(p.x, p.t + h)) - pb.source(&Point::new(p.x, p.t - h))) / (2.0 * h);
        assert!((pb.source_derivative(&p, [0, 0, 1]).unwrap() - fd).abs() < 1e-5 * fd.abs());
    }

    #[test]
    fn incompatible_values() {
        let pb = incompatible_1d();
        assert_eq!(pb.exact(&Point::new([0.0, 0.0], 0.3)), 0.0);
        // Leibniz: partial sums at x = 1/2, t → 0 approach 1
        let u = pb.exact(&Point::new([0.5, 0.0], 1e-9));
        assert!((u - 1.0).abs() < 2e-3);
        assert_eq!(pb.terms, 500);
        assert_eq!(pb.initial([0.4, 0.0]), 1.0);
    }

    #[test]
    fn heat_polynomials() {
        let p2 = polynomial_manufactured(1, 2).unwrap();
        let p3 = polynomial_manufactured(1, 3).unwrap();
        let p1 = polynomial_manufactured(1, 1).unwrap();
        let pt = Point::new([0.7, 0.0], 0.4);
        assert!((p2.exact(&pt) - (0.49 + 0.8)).abs() < 1e-14);
        assert!((p3.exact(&pt) - (0.343 + 6.0 * 0.7 * 0.4)).abs() < 1e-14);
        assert_eq!(p1.exact(&pt), 0.7);
        assert!(polynomial_manufactured(3, 2).is_err());
        assert!(problem_by_name("nope", 1, 1).is_err());
    }
}
