use faer::Mat;

use super::weighted_gram;
use crate::linalg::DenseCholesky;
use crate::mesh::FacetKind;
use crate::quadrature::{element_rule, facet_rule};
use crate::space::DiscreteSpace;
use crate::Result;

/// `L²` mass matrix of the vector basis of element `k`.
pub fn vector_mass(space: &DiscreteSpace, k: usize) -> Mat<f64> {
    let mesh = space.mesh();
    let p = mesh.element(k).degree;
    let rule = element_rule(mesh, k, 2 * p + 2);
    let phi = space.vector_basis(k).scalar.tabulate(&rule.points);
    let g = weighted_gram(phi.values.as_ref(), &rule.weights, phi.values.as_ref());
    let ns = phi.len();
    let d = mesh.dim();
    Mat::from_fn(d * ns, d * ns, |r, c| if r / ns == c / ns { g[(r % ns, c % ns)] } else { 0.0 })
}

/// Lifting `L v` of the `V_p` function with free coefficients `v`
/// (particular solutions included), as `M_p` coefficients: element-wise
/// solves of `∫ L v · r = ∫_{F^time} ⟦v⟧_N · {r}_{1−α} + ∫_{F^D} v r·n`.
/// Jumps are evaluated pointwise at facet quadrature nodes.
pub fn lifting_apply(space: &DiscreteSpace, alpha: f64, v: &[f64]) -> Result<Vec<f64>> {
    let mesh = space.mesh();
    let d = mesh.dim();
    let mut out = vec![0.0; space.q_ndofs()];
    let value_at = |k: usize, pts: &[crate::Point]| -> Vec<f64> {
        let c = space.local_coefficients(v, k);
        let tab = space.basis(k).tabulate(pts);
        (0..pts.len()).map(|q| (0..c.len()).map(|i| c[i] * tab.values[(i, q)]).sum()).collect()
    };
    for k in 0..mesh.num_elements() {
        let ns = space.vector_basis(k).scalar_len();
        let mut rhs = vec![0.0; d * ns];
        for &fi in mesh.element_facets(k) {
            let f = mesh.facet(fi);
            let (weight, jump_owner) = match f.kind {
                FacetKind::TimeInterior => (if f.owner == k { alpha } else { 1.0 - alpha }, true),
                FacetKind::Dirichlet => (1.0, false),
                _ => continue,
            };
            if weight == 0.0 {
                continue;
            }
            let p = f.elements().map(|e| mesh.element(e).degree).max().unwrap_or(1);
            let rule = facet_rule(mesh, fi, 2 * p + 2);
            let mut jump = value_at(f.owner, &rule.points);
            if jump_owner {
                let other = value_at(f.neighbor.expect("interior facet"), &rule.points);
                jump.iter_mut().zip(other).for_each(|(a, b)| *a -= b);
            }
            let phi = space.vector_basis(k).scalar.tabulate(&rule.points);
            for i in 0..ns {
                let s: f64 = (0..rule.len()).map(|q| rule.weights[q] * jump[q] * phi.values[(i, q)]).sum();
                for c in 0..d {
                    rhs[c * ns + i] += weight * f.normal_x[c] * s;
                }
            }
        }
        if rhs.iter().all(|&x| x == 0.0) {
            continue;
        }
        let chol = DenseCholesky::new(&vector_mass(space, k))?;
        let sol = chol.solve_vec(&rhs);
        out[space.q_dofs(k)].copy_from_slice(&sol);
    }
    Ok(out)
}
