//! Gauss-type quadrature on space-time prisms and their facets.

use crate::mesh::{FacetGeometry, SpaceTimeMesh, SpatialMesh};
use crate::{Error, Point, Result};

/// One-dimensional rule on `(−1, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule1d {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Space-time quadrature rule.
#[derive(Clone, Debug, Default)]
pub struct QuadRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// Polynomial degree integrated exactly on affine geometry.
    pub degree: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }
}

/// `n`-point Gauss–Legendre rule, exact up to degree `2n − 1`.
pub fn gauss_legendre(n: usize) -> Result<Rule1d> {
    if n == 0 {
        return Err(Error::InvalidParameter("Gauss rule needs at least one point".into()));
    }
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        points[i] = -x;
        points[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.0;
    }
    Ok(Rule1d { points, weights })
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// Number of Gauss points needed for exactness degree `q`.
pub fn points_for_degree(q: usize) -> usize {
    q / 2 + 1
}

/// Gauss rule mapped to `(a, b)`, as `(points, weights)`.
pub fn gauss_interval(a: f64, b: f64, q: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = gauss_legendre(points_for_degree(q)).expect("n ≥ 1");
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    (rule.points.iter().map(|x| m + r * x).collect(), rule.weights.iter().map(|w| r * w).collect())
}

/// Spatial rule on cell `c`: Gauss on intervals, collapsed Gauss on triangles.
pub fn cell_rule(mesh: &SpatialMesh, c: usize, q: usize) -> (Vec<[f64; 2]>, Vec<f64>) {
    let cell = mesh.cell(c);
    let v: Vec<[f64; 2]> = cell.vertices.iter().map(|&i| mesh.vertices()[i]).collect();
    if mesh.dim() == 1 {
        let (xs, ws) = gauss_interval(v[0][0], v[1][0], q);
        return (xs.into_iter().map(|x| [x, 0.0]).collect(), ws);
    }
    triangle_rule(v[0], v[1], v[2], q)
}

/// Collapsed (Duffy) rule on the triangle `abc`, exact to degree `q`.
pub fn triangle_rule(a: [f64; 2], b: [f64; 2], c: [f64; 2], q: usize) -> (Vec<[f64; 2]>, Vec<f64>) {
    let area2 = ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs();
    let (us, wus) = gauss_interval(0.0, 1.0, q);
    // the Jacobian adds one degree in the collapsed direction
    let (vs, wvs) = gauss_interval(0.0, 1.0, q + 1);
    let mut pts = Vec::with_capacity(us.len() * vs.len());
    let mut wts = Vec::with_capacity(us.len() * vs.len());
    for (&v, &wv) in vs.iter().zip(&wvs) {
        for (&u, &wu) in us.iter().zip(&wus) {
            let (s, t) = (u * (1.0 - v), v);
            pts.push([a[0] + s * (b[0] - a[0]) + t * (c[0] - a[0]), a[1] + s * (b[1] - a[1]) + t * (c[1] - a[1])]);
            wts.push(area2 * (1.0 - v) * wu * wv);
        }
    }
    (pts, wts)
}

/// Spatial rule on side `s`: a single unit-weight point in 1D, Gauss on edges in 2D.
pub fn side_rule(mesh: &SpatialMesh, s: usize, q: usize) -> (Vec<[f64; 2]>, Vec<f64>) {
    let side = mesh.side(s);
    let v: Vec<[f64; 2]> = side.vertices.iter().map(|&i| mesh.vertices()[i]).collect();
    if mesh.dim() == 1 {
        return (vec![v[0]], vec![1.0]);
    }
    let (ss, ws) = gauss_interval(0.0, 1.0, q);
    let pts = ss.iter().map(|&s| [v[0][0] + s * (v[1][0] - v[0][0]), v[0][1] + s * (v[1][1] - v[0][1])]).collect();
    (pts, ws.iter().map(|w| w * side.measure).collect())
}

fn tensor(space: (Vec<[f64; 2]>, Vec<f64>), time: (Vec<f64>, Vec<f64>), q: usize) -> QuadRule {
    let mut rule = QuadRule { degree: q, ..Default::default() };
    for (&t, &wt) in time.0.iter().zip(&time.1) {
        for (&x, &wx) in space.0.iter().zip(&space.1) {
            rule.points.push(Point::new(x, t));
            rule.weights.push(wx * wt);
        }
    }
    rule
}

/// Geometry of a single prism `K_x × (t0, t1)`, independent of any mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct Prism {
    pub dim: usize,
    /// Vertices of `K_x` (2 in 1D, 3 in 2D); unused components are zero.
    pub vertices: Vec<[f64; 2]>,
    pub time: (f64, f64),
}

impl Prism {
    pub fn new(dim: usize, vertices: Vec<[f64; 2]>, time: (f64, f64)) -> Result<Self> {
        if vertices.len() != dim + 1 || !(time.1 > time.0) {
            return Err(Error::Mesh("prism needs d + 1 vertices and a positive time step".into()));
        }
        Ok(Self { dim, vertices, time })
    }

    pub fn of_element(mesh: &SpaceTimeMesh, k: usize) -> Self {
        let el = mesh.element(k);
        let cell = mesh.spatial().cell(el.cell);
        Self {
            dim: mesh.dim(),
            vertices: cell.vertices.iter().map(|&v| mesh.spatial().vertices()[v]).collect(),
            time: el.time,
        }
    }

    pub fn centroid(&self) -> [f64; 2] {
        let n = self.vertices.len() as f64;
        let mut c = [0.0; 2];
        for v in &self.vertices {
            c[0] += v[0] / n;
            c[1] += v[1] / n;
        }
        c
    }

    pub fn t_center(&self) -> f64 {
        0.5 * (self.time.0 + self.time.1)
    }

    /// Spatial diameter `h_Kx`.
    pub fn hx(&self) -> f64 {
        let mut h: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                h = h.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
        }
        h
    }

    pub fn ht(&self) -> f64 {
        self.time.1 - self.time.0
    }

    pub fn spatial_rule(&self, q: usize) -> (Vec<[f64; 2]>, Vec<f64>) {
        let v = &self.vertices;
        if self.dim == 1 {
            let (a, b) = (v[0][0].min(v[1][0]), v[0][0].max(v[1][0]));
            let (xs, ws) = gauss_interval(a, b, q);
            (xs.into_iter().map(|x| [x, 0.0]).collect(), ws)
        } else {
            triangle_rule(v[0], v[1], v[2], q)
        }
    }

    /// Rule exact for space-time polynomials of total degree `q`.
    pub fn rule(&self, q: usize) -> QuadRule {
        tensor(self.spatial_rule(q), gauss_interval(self.time.0, self.time.1, q), q)
    }
}

/// Rule on element `k` exact for space-time polynomials of total degree `q`.
pub fn element_rule(mesh: &SpaceTimeMesh, k: usize, q: usize) -> QuadRule {
    let el = mesh.element(k);
    tensor(cell_rule(mesh.spatial(), el.cell, q), gauss_interval(el.time.0, el.time.1, q), q)
}

/// Rule on facet `f`: the cell rule at fixed `t` for space-like facets,
/// side rule × Gauss in time for time-like facets.
pub fn facet_rule(mesh: &SpaceTimeMesh, f: usize, q: usize) -> QuadRule {
    match mesh.facet(f).geometry {
        FacetGeometry::SpaceLike { cell, time } => {
            tensor(cell_rule(mesh.spatial(), cell, q), (vec![time], vec![1.0]), q)
        }
        FacetGeometry::TimeLike { side, interval } => {
            tensor(side_rule(mesh.spatial(), side, q), gauss_interval(interval.0, interval.1, q), q)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_tensor_mesh, BoxDomain, DegreeRule, FacetKind, TimePartition};

    #[test]
    fn classical_gauss_values() {
        let r = gauss_legendre(1).unwrap();
        assert_eq!((r.points[0], r.weights[0]), (0.0, 2.0));
        let r = gauss_legendre(2).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((r.points[0] + s).abs() < 1e-15 && (r.points[1] - s).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15 && (r.weights[1] - 1.0).abs() < 1e-15);
        let r = gauss_legendre(3).unwrap();
        let x4: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| w * x.powi(4)).sum();
        assert!((x4 - 0.4).abs() < 1e-15);
        assert!(gauss_legendre(0).is_err());
    }

    #[test]
    fn gauss_exactness_and_symmetry() {
        for n in 1..=20 {
            let r = gauss_legendre(n).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0));
            assert!(r.points.windows(2).all(|w| w[0] < w[1]));
            for deg in 0..2 * n {
                let num: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg + 1) as f64 };
                assert!((num - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn triangle_monomials() {
        // ∫_T x^a y^b over the reference triangle = a! b! / (a+b+2)!
        let fact = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
        for q in 0..10 {
            let (p, w) = triangle_rule([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], q);
            for a in 0..=q {
                for b in 0..=q - a {
                    let num: f64 = p.iter().zip(&w).map(|(x, w)| w * x[0].powi(a as i32) * x[1].powi(b as i32)).sum();
                    let exact = fact(a) * fact(b) / fact(a + b + 2);
                    assert!((num - exact).abs() < 1e-14, "q={q} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn prism_integrals() {
        let part = TimePartition::uniform(1.0, 1).unwrap();
        let m = build_tensor_mesh(&BoxDomain::unit(1), 1, &part, &DegreeRule::Uniform(1)).unwrap();
        let r = element_rule(&m, 0, 2);
        assert!((r.integrate(|p| p.x[0] * p.t) - 0.25).abs() < 1e-15);
        assert!((r.measure() - 1.0).abs() < 1e-15);

        // reference-triangle prism over (0, 1): ∫ x² y t = (2!·1!/5!)·(1/2) = 1/120
        let spatial = SpatialMesh::new(2, vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![vec![0, 1, 2]], &[]).unwrap();
        let m = crate::mesh::SpaceTimeMesh::extrude(spatial, &part, &DegreeRule::Uniform(1)).unwrap();
        let r = element_rule(&m, 0, 4);
        assert!((r.integrate(|p| p.x[0] * p.x[0] * p.x[1] * p.t) - 1.0 / 120.0).abs() < 1e-16);
    }

    #[test]
    fn facet_integrals() {
        let part = TimePartition::uniform(1.0, 2).unwrap();
        let m = build_tensor_mesh(&BoxDomain::unit(2), 2, &part, &DegreeRule::Uniform(1)).unwrap();
        for (f, facet) in m.facets().iter().enumerate() {
            let r = facet_rule(&m, f, 4);
            assert!((r.measure() - facet.measure).abs() < 1e-14);
            if facet.kind == FacetKind::Dirichlet && facet.normal_x[1] == -1.0 {
                if let FacetGeometry::TimeLike { interval: (0.0, 0.5), .. } = facet.geometry {
                    assert!((r.integrate(|p| p.t * p.t) - 0.5 / 24.0).abs() < 1e-15);
                }
            }
        }
        let part = TimePartition::uniform(0.5, 1).unwrap();
        let m = build_tensor_mesh(&BoxDomain::unit(1), 1, &part, &DegreeRule::Uniform(1)).unwrap();
        let f = m.groups().dirichlet[0];
        assert!((facet_rule(&m, f, 2).integrate(|p| p.t * p.t) - 1.0 / 24.0).abs() < 1e-15);
    }
}
