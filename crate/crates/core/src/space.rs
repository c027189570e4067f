//! Global discrete spaces `V_p(T_h)` and `M_p(T_h)` and discrete solutions.

use std::collections::HashMap;
use std::ops::Range;
use std::sync::Arc;

use crate::basis::{
    embedded_trefftz, qt_basis, qt_particular_solution, standard_basis, tensor_product_basis, vector_space,
    ElementBasis, EmbeddedTrefftz, VectorBasis,
};
use crate::mesh::SpaceTimeMesh;
use crate::problems::HeatProblem;
use crate::quadrature::Prism;
use crate::{Diffusion, Error, Point, Result, SpaceKind};

/// Shape of an element up to translation, used to share bases.
#[derive(Clone, PartialEq, Eq, Hash)]
struct ShapeKey {
    degree: usize,
    offsets: Vec<[i64; 2]>,
    hx: u64,
    ht: u64,
}

/// Drops the low 20 mantissa bits so that values agreeing to about
/// `2⁻³²` relative share a key.
fn coarse_bits(v: f64) -> u64 {
    (v.to_bits() + (1 << 19)) >> 20
}

impl ShapeKey {
    fn of(prism: &Prism, degree: usize) -> Self {
        let c = prism.centroid();
        let hx = prism.hx();
        let q = |v: f64| (v / hx * 1e10).round() as i64;
        Self {
            degree,
            offsets: prism.vertices.iter().map(|v| [q(v[0] - c[0]), q(v[1] - c[1])]).collect(),
            hx: coarse_bits(hx),
            ht: coarse_bits(prism.ht()),
        }
    }
}

enum Cached {
    Plain(ElementBasis),
    Embedded(Box<EmbeddedTrefftz>),
}

/// Per-element bases of `V_p(K)` and `M_p(K)` with global DoF numbering.
/// Elements own contiguous DoF ranges in element order.
#[derive(Clone, Debug)]
pub struct DiscreteSpace {
    mesh: Arc<SpaceTimeMesh>,
    kind: SpaceKind,
    diffusion: Diffusion,
    scalar: Vec<Arc<ElementBasis>>,
    vector: Vec<Arc<VectorBasis>>,
    u_offsets: Vec<usize>,
    q_offsets: Vec<usize>,
}

impl DiscreteSpace {
    /// Homogeneous space: no particular solutions.
    pub fn new(mesh: Arc<SpaceTimeMesh>, kind: SpaceKind, diffusion: Diffusion) -> Result<Self> {
        Self::build(mesh, kind, diffusion, None)
    }

    /// Space for `problem`: Trefftz spaces get an element-wise particular
    /// solution when the source is nonzero.
    pub fn for_problem(mesh: Arc<SpaceTimeMesh>, kind: SpaceKind, problem: &dyn HeatProblem) -> Result<Self> {
        let source = (kind.is_trefftz() && !problem.source_is_zero()).then_some(problem);
        Self::build(mesh, kind, problem.diffusion(), source)
    }

    fn build(
        mesh: Arc<SpaceTimeMesh>,
        kind: SpaceKind,
        diffusion: Diffusion,
        source: Option<&dyn HeatProblem>,
    ) -> Result<Self> {
        if diffusion.dim() != mesh.dim() {
            return Err(Error::InvalidParameter("diffusion and mesh dimensions differ".into()));
        }
        let n = mesh.num_elements();
        let mut scalar_cache: HashMap<ShapeKey, Cached> = HashMap::new();
        let mut vector_cache: HashMap<ShapeKey, VectorBasis> = HashMap::new();
        let mut scalar = Vec::with_capacity(n);
        let mut vector = Vec::with_capacity(n);
        for k in 0..n {
            let prism = Prism::of_element(&mesh, k);
            let p = mesh.element(k).degree;
            let key = ShapeKey::of(&prism, p);
            if !scalar_cache.contains_key(&key) {
                let entry = match kind {
                    SpaceKind::TensorProduct => Cached::Plain(tensor_product_basis(p, &prism)?),
                    SpaceKind::Standard => Cached::Plain(standard_basis(p, &prism)?),
                    SpaceKind::QuasiTrefftz => Cached::Plain(qt_basis(p, &prism, &diffusion)?),
                    SpaceKind::EmbeddedTrefftz => Cached::Embedded(Box::new(embedded_trefftz(p, &prism, &diffusion)?)),
                };
                scalar_cache.insert(key.clone(), entry);
            }
            let basis = match (&scalar_cache[&key], source) {
                (Cached::Plain(b), None) => b.relocated(&prism),
                (Cached::Embedded(et), None) => et.basis.relocated(&prism),
                (Cached::Plain(b), Some(pb)) => {
                    let b = b.relocated(&prism);
                    let c = Point::new(prism.centroid(), prism.t_center());
                    let part = qt_particular_solution(p, &prism, &diffusion, |i| pb.source_derivative(&c, i))?;
                    b.with_particular(&part)?
                }
                (Cached::Embedded(et), Some(pb)) => {
                    let et = et.relocated(&prism);
                    let part = et.particular(&et.load(|x| pb.source(x)));
                    et.basis.with_particular(&part)?
                }
            };
            scalar.push(Arc::new(basis));
            let vb = match vector_cache.get(&key) {
                Some(v) => v.relocated(&prism),
                None => {
                    let v = vector_space(kind, p, &prism)?;
                    vector_cache.insert(key, v.clone());
                    v
                }
            };
            vector.push(Arc::new(vb));
        }
        let mut u_offsets = vec![0];
        let mut q_offsets = vec![0];
        for k in 0..n {
            u_offsets.push(u_offsets[k] + scalar[k].n_free());
            q_offsets.push(q_offsets[k] + vector[k].len());
        }
        Ok(Self { mesh, kind, diffusion, scalar, vector, u_offsets, q_offsets })
    }

    pub fn mesh(&self) -> &Arc<SpaceTimeMesh> {
        &self.mesh
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn diffusion(&self) -> &Diffusion {
        &self.diffusion
    }

    pub fn basis(&self, k: usize) -> &ElementBasis {
        &self.scalar[k]
    }

    pub fn vector_basis(&self, k: usize) -> &VectorBasis {
        &self.vector[k]
    }

    /// Number of free `V_p` DoFs.
    pub fn ndofs(&self) -> usize {
        *self.u_offsets.last().expect("offsets")
    }

    pub fn dofs(&self, k: usize) -> Range<usize> {
        self.u_offsets[k]..self.u_offsets[k + 1]
    }

    pub fn q_ndofs(&self) -> usize {
        *self.q_offsets.last().expect("offsets")
    }

    pub fn q_dofs(&self, k: usize) -> Range<usize> {
        self.q_offsets[k]..self.q_offsets[k + 1]
    }

    /// DoFs of a contiguous element range.
    pub fn range_dofs(&self, elements: &Range<usize>) -> Range<usize> {
        self.u_offsets[elements.start]..self.u_offsets[elements.end]
    }

    pub fn has_particular(&self) -> bool {
        self.scalar.iter().any(|b| b.has_particular())
    }

    /// Coefficients of element `k` over its `n_ext` functions: the free
    /// ones from `u`, then 1 for the particular solution.
    pub fn local_coefficients(&self, u: &[f64], k: usize) -> Vec<f64> {
        let mut c = u[self.dofs(k)].to_vec();
        if self.scalar[k].has_particular() {
            c.push(1.0);
        }
        c
    }
}

/// Discrete solution `u_h` with optional flux `q_h`.
#[derive(Clone, Debug)]
pub struct DiscreteSolution {
    pub space: Arc<DiscreteSpace>,
    /// Free `V_p` coefficients.
    pub coefficients: Vec<f64>,
    pub flux: Option<Vec<f64>>,
}

impl DiscreteSolution {
    pub fn new(space: Arc<DiscreteSpace>, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != space.ndofs() {
            return Err(Error::InvalidParameter(format!(
                "{} coefficients for {} DoFs",
                coefficients.len(),
                space.ndofs()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::Solver("non-finite solution coefficients".into()));
        }
        Ok(Self { space, coefficients, flux: None })
    }

    /// Value, spatial gradient and time derivative of `u_h|_K` at `p`.
    pub fn eval(&self, k: usize, p: &Point) -> (f64, [f64; 2], f64) {
        let c = self.space.local_coefficients(&self.coefficients, k);
        self.space.basis(k).eval(&c, p)
    }

    /// Element containing `p`, preferring the earliest when `p` lies on
    /// a shared boundary.
    pub fn locate(&self, p: &Point) -> Option<usize> {
        let mesh = self.space.mesh();
        let eps = 1e-12;
        (0..mesh.num_elements()).find(|&k| {
            let el = mesh.element(k);
            if p.t < el.time.0 - eps || p.t > el.time.1 + eps {
                return false;
            }
            let cell = mesh.spatial().cell(el.cell);
            let v: Vec<[f64; 2]> = cell.vertices.iter().map(|&i| mesh.spatial().vertices()[i]).collect();
            if mesh.dim() == 1 {
                let (a, b) = (v[0][0].min(v[1][0]), v[0][0].max(v[1][0]));
                p.x[0] >= a - eps && p.x[0] <= b + eps
            } else {
                let cross = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
                    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
                };
                let area = cross(v[0], v[1], v[2]);
                let l = [cross(v[1], v[2], p.x) / area, cross(v[2], v[0], p.x) / area, cross(v[0], v[1], p.x) / area];
                l.iter().all(|&x| x >= -eps)
            }
        })
    }

    /// `u_h(p)`, if `p` lies in the mesh.
    pub fn value_at(&self, p: &Point) -> Option<f64> {
        self.locate(p).map(|k| self.eval(k, p).0)
    }

    pub fn ndofs(&self) -> usize {
        self.coefficients.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_tensor_mesh, BoxDomain, DegreeRule, TimePartition};
    use crate::problems::{smooth_1d, smooth_2d};

    fn mesh(dim: usize, n: usize, p: usize) -> Arc<SpaceTimeMesh> {
        let tp = TimePartition::uniform(1.0, n).unwrap();
        Arc::new(build_tensor_mesh(&BoxDomain::unit(dim), n, &tp, &DegreeRule::Uniform(p)).unwrap())
    }

    #[test]
    fn dof_counts() {
        let m = mesh(2, 2, 2);
        let k = Diffusion::isotropic(2, 1.0).unwrap();
        for (kind, per) in [
            (SpaceKind::TensorProduct, 18),
            (SpaceKind::Standard, 10),
            (SpaceKind::QuasiTrefftz, 9),
            (SpaceKind::EmbeddedTrefftz, 9),
        ] {
            let s = DiscreteSpace::new(m.clone(), kind, k).unwrap();
            assert_eq!(s.ndofs(), per * m.num_elements());
            assert_eq!(s.dofs(1), per..2 * per);
            let q = if kind == SpaceKind::TensorProduct { 18 } else { 10 };
            assert_eq!(s.q_ndofs(), 2 * q * m.num_elements());
        }
    }

    #[test]
    fn shared_bases_match_fresh_ones() {
        let m = mesh(2, 2, 2);
        let k = Diffusion::isotropic(2, 1.0).unwrap();
        let s = DiscreteSpace::new(m.clone(), SpaceKind::Standard, k).unwrap();
        for e in 0..m.num_elements() {
            let fresh = standard_basis(2, &Prism::of_element(&m, e)).unwrap();
            let c = m.element(e).center();
            let pt = Point::new([c.x[0] + 0.01, c.x[1] - 0.02], c.t + 0.03);
            let a = s.basis(e).tabulate(&[pt]);
            let b = fresh.tabulate(&[pt]);
            for i in 0..fresh.n_free() {
                assert!((a.values[(i, 0)] - b.values[(i, 0)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn particular_solutions_only_for_trefftz_with_source() {
        let m = mesh(1, 4, 3);
        let pb = smooth_1d();
        for kind in SpaceKind::ALL {
            let s = DiscreteSpace::for_problem(m.clone(), kind, &pb).unwrap();
            assert_eq!(s.has_particular(), kind.is_trefftz());
        }
        let m2 = mesh(2, 2, 2);
        let s = DiscreteSpace::for_problem(m2, SpaceKind::QuasiTrefftz, &smooth_2d()).unwrap();
        assert!(s.has_particular());
    }

    #[test]
    fn locate_and_eval() {
        let m = mesh(2, 2, 1);
        let s = Arc::new(DiscreteSpace::new(m, SpaceKind::Standard, Diffusion::isotropic(2, 1.0).unwrap()).unwrap());
        let sol = DiscreteSolution::new(s.clone(), vec![0.0; s.ndofs()]).unwrap();
        assert_eq!(sol.value_at(&Point::new([0.3, 0.3], 0.7)), Some(0.0));
        assert_eq!(sol.value_at(&Point::new([1.3, 0.3], 0.7)), None);
        assert!(DiscreteSolution::new(s, vec![0.0; 3]).is_err());
    }
}
