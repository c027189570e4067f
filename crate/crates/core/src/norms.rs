//! Error functionals: `|·|_J`, `‖·‖_LDG`, `‖·‖_{LDG⁺}`, `‖·‖_{LDG,N}`,
//! the `L²(Q_T)` error and experimental orders of convergence.
//!
//! All functions measure `e = u − u_h` for an exact solution `u` taken from
//! a [`HeatProblem`]; passing `None` measures `e = −u_h`, which is how the
//! norms of discrete functions are evaluated.

use std::sync::Arc;

use crate::assembly::{lifting_apply, stabilization, AssemblyOptions};
use crate::basis::Tabulation;
use crate::mesh::FacetKind;
use crate::problems::HeatProblem;
use crate::quadrature::{element_rule, facet_rule, QuadRule};
use crate::solve::newton_potential;
use crate::space::{DiscreteSolution, DiscreteSpace};
use crate::{Point, Result};

/// Squared contributions to the error norms.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NormTerms {
    /// `‖√k ∇_LDG e‖²`.
    pub volume_gradient: f64,
    /// `‖η^½ ⟦e⟧_N‖²` on time-like interior facets.
    pub time_jumps: f64,
    /// `‖η^½ e‖²` on Dirichlet facets.
    pub dirichlet: f64,
    /// `Σ λ_K ‖∂ₜe‖²_{L²(K)}`.
    pub lambda_dt: f64,
    /// `½‖e‖²` on `Ω × {T}`.
    pub j_final: f64,
    /// `½‖⟦e⟧_t‖²` on interior space-like facets.
    pub j_space: f64,
    /// `½‖e‖²` on `Ω × {0}`.
    pub j_initial: f64,
    /// `‖N_h e‖²_LDG`; zero unless requested.
    pub newton: f64,
    /// `‖e‖²_{L²(Q_T)}`.
    pub l2: f64,
}

impl NormTerms {
    pub fn jump_sq(&self) -> f64 {
        self.j_final + self.j_space + self.j_initial
    }

    pub fn ldg_sq(&self) -> f64 {
        self.volume_gradient + self.time_jumps + self.dirichlet
    }

    pub fn ldg_plus_sq(&self) -> f64 {
        self.ldg_sq() + self.jump_sq() + self.lambda_dt
    }

    pub fn ldg_newton_sq(&self) -> f64 {
        self.jump_sq() + self.ldg_sq() + self.newton
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormReport {
    pub h: f64,
    pub p: usize,
    pub n_dofs: usize,
    pub error_l2: f64,
    pub error_ldg: f64,
    pub error_ldg_plus: f64,
    /// `None` when the Newton-potential term was not computed.
    pub error_ldgn: Option<f64>,
    pub terms: NormTerms,
}

fn degree_of(space: &DiscreteSpace, elements: impl Iterator<Item = usize>) -> usize {
    elements.map(|e| space.mesh().element(e).degree).max().unwrap_or(1)
}

/// Quadrature exactness for error integrals.
fn error_degree(p: usize) -> usize {
    2 * p + 4
}

/// Values, gradients and time derivatives of `u_h|_K` at the rule points.
fn discrete_values(sol: &DiscreteSolution, k: usize, pts: &[Point]) -> (Vec<f64>, Vec<[f64; 2]>, Vec<f64>) {
    let c = sol.space.local_coefficients(&sol.coefficients, k);
    let tab: Tabulation = sol.space.basis(k).tabulate(pts);
    let dot = |m: &faer::Mat<f64>, q: usize| (0..c.len()).map(|i| c[i] * m[(i, q)]).sum::<f64>();
    let n = pts.len();
    (
        (0..n).map(|q| dot(&tab.values, q)).collect(),
        (0..n).map(|q| [dot(&tab.grad[0], q), dot(&tab.grad[1], q)]).collect(),
        (0..n).map(|q| dot(&tab.dt, q)).collect(),
    )
}

struct Exact<'a>(Option<&'a dyn HeatProblem>);

impl Exact<'_> {
    fn value(&self, p: &Point) -> f64 {
        self.0.map_or(0.0, |pb| pb.exact(p))
    }
    fn gradient(&self, p: &Point) -> [f64; 2] {
        self.0.map_or([0.0; 2], |pb| pb.exact_gradient(p))
    }
    fn dt(&self, p: &Point) -> f64 {
        self.0.map_or(0.0, |pb| pb.exact_dt(p))
    }
    fn initial(&self, x: [f64; 2]) -> f64 {
        self.0.map_or(0.0, |pb| pb.initial(x))
    }
}

fn integrate(rule: &QuadRule, f: impl Fn(usize) -> f64) -> f64 {
    (0..rule.len()).map(|q| rule.weights[q] * f(q)).sum()
}

/// `|e|²_J` terms: final, interior space-like and initial facets.
fn jump_terms(sol: &DiscreteSolution, exact: &Exact<'_>, terms: &mut NormTerms) {
    let space = &sol.space;
    let mesh = space.mesh();
    for (fi, f) in mesh.facets().iter().enumerate() {
        if !f.kind.is_space_like() {
            continue;
        }
        let p = degree_of(space, f.elements());
        let rule = facet_rule(mesh, fi, error_degree(p));
        match f.kind {
            FacetKind::Final => {
                let (uh, _, _) = discrete_values(sol, f.owner, &rule.points);
                terms.j_final += 0.5 * integrate(&rule, |q| (exact.value(&rule.points[q]) - uh[q]).powi(2));
            }
            FacetKind::Initial => {
                let (uh, _, _) = discrete_values(sol, f.owner, &rule.points);
                terms.j_initial += 0.5 * integrate(&rule, |q| (exact.initial(rule.points[q].x) - uh[q]).powi(2));
            }
            FacetKind::SpaceInterior => {
                let (um, _, _) = discrete_values(sol, f.before().expect("interior"), &rule.points);
                let (up, _, _) = discrete_values(sol, f.after().expect("interior"), &rule.points);
                terms.j_space += 0.5 * integrate(&rule, |q| (up[q] - um[q]).powi(2));
            }
            _ => {}
        }
    }
}

/// Volume terms (`∇_LDG e`, `λ ∂ₜe`, `L²`) and time-like facet terms.
fn ldg_terms(sol: &DiscreteSolution, exact: &Exact<'_>, opts: &AssemblyOptions, terms: &mut NormTerms) -> Result<()> {
    let space = &sol.space;
    let mesh = space.mesh();
    let d = mesh.dim();
    let k = space.diffusion().matrix();
    let lifting = lifting_apply(space, opts.alpha, &sol.coefficients)?;
    for e in 0..mesh.num_elements() {
        let el = mesh.element(e);
        let rule = element_rule(mesh, e, error_degree(el.degree));
        let (uh, guh, dtuh) = discrete_values(sol, e, &rule.points);
        let phi = space.vector_basis(e).scalar.tabulate(&rule.points);
        let ns = phi.len();
        let lc = &lifting[space.q_dofs(e)];
        let (mut vol, mut lam, mut l2) = (0.0, 0.0, 0.0);
        for (q, pt) in rule.points.iter().enumerate() {
            let gu = exact.gradient(pt);
            let mut g = [0.0; 2];
            for c in 0..d {
                let lift: f64 = (0..ns).map(|j| lc[c * ns + j] * phi.values[(j, q)]).sum();
                g[c] = gu[c] - guh[q][c] + lift;
            }
            let kg = [k[0][0] * g[0] + k[0][1] * g[1], k[1][0] * g[0] + k[1][1] * g[1]];
            let w = rule.weights[q];
            vol += w * (kg[0] * g[0] + kg[1] * g[1]);
            lam += w * (exact.dt(pt) - dtuh[q]).powi(2);
            l2 += w * (exact.value(pt) - uh[q]).powi(2);
        }
        terms.volume_gradient += vol;
        terms.lambda_dt += el.lambda * lam;
        terms.l2 += l2;
    }
    for (fi, f) in mesh.facets().iter().enumerate() {
        if !matches!(f.kind, FacetKind::TimeInterior | FacetKind::Dirichlet) {
            continue;
        }
        let eta = stabilization(mesh, fi, opts.eta_star, space.diffusion())?;
        let rule = facet_rule(mesh, fi, error_degree(degree_of(space, f.elements())));
        let (u1, _, _) = discrete_values(sol, f.owner, &rule.points);
        match f.neighbor {
            Some(nb) => {
                let (u2, _, _) = discrete_values(sol, nb, &rule.points);
                terms.time_jumps += eta * integrate(&rule, |q| (u1[q] - u2[q]).powi(2));
            }
            None => {
                terms.dirichlet += eta * integrate(&rule, |q| (exact.value(&rule.points[q]) - u1[q]).powi(2));
            }
        }
    }
    Ok(())
}

/// Right-hand side `m_h(e, w)` over the free basis functions `w`.
pub fn newton_rhs(sol: &DiscreteSolution, exact: Option<&dyn HeatProblem>) -> Vec<f64> {
    let exact = Exact(exact);
    let space = &sol.space;
    let mesh = space.mesh();
    let mut rhs = vec![0.0; space.ndofs()];
    let mut add = |k: usize, pts: &[Point], w: &[f64], g: &dyn Fn(usize) -> f64| {
        let basis = space.basis(k);
        let tab = basis.tabulate(pts);
        let r0 = space.dofs(k).start;
        for i in 0..basis.n_free() {
            rhs[r0 + i] += (0..pts.len()).map(|q| w[q] * g(q) * tab.values[(i, q)]).sum::<f64>();
        }
    };
    for e in 0..mesh.num_elements() {
        let rule = element_rule(mesh, e, error_degree(mesh.element(e).degree));
        let (_, _, dtuh) = discrete_values(sol, e, &rule.points);
        add(e, &rule.points, &rule.weights, &|q| exact.dt(&rule.points[q]) - dtuh[q]);
    }
    for (fi, f) in mesh.facets().iter().enumerate() {
        match f.kind {
            FacetKind::SpaceInterior => {
                let (before, after) = (f.before().expect("interior"), f.after().expect("interior"));
                let rule = facet_rule(mesh, fi, error_degree(degree_of(space, f.elements())));
                let (um, _, _) = discrete_values(sol, before, &rule.points);
                let (up, _, _) = discrete_values(sol, after, &rule.points);
                // −∫ w⁺ ⟦e⟧_t with ⟦e⟧_t = e⁻ − e⁺ = u_h⁺ − u_h⁻
                add(after, &rule.points, &rule.weights, &|q| -(up[q] - um[q]));
            }
            FacetKind::Initial => {
                let rule = facet_rule(mesh, fi, error_degree(degree_of(space, f.elements())));
                let (up, _, _) = discrete_values(sol, f.owner, &rule.points);
                add(f.owner, &rule.points, &rule.weights, &|q| exact.initial(rule.points[q].x) - up[q]);
            }
            _ => {}
        }
    }
    rhs
}

/// `‖N_h e‖²_LDG = m_h(e, N_h e)`.
pub fn newton_term(sol: &DiscreteSolution, exact: Option<&dyn HeatProblem>, opts: &AssemblyOptions) -> Result<f64> {
    let rhs = newton_rhs(sol, exact);
    let n = newton_potential(Arc::clone(&sol.space), opts, &rhs)?;
    Ok(rhs.iter().zip(&n).map(|(a, b)| a * b).sum::<f64>().max(0.0))
}

/// All squared terms; the Newton-potential term only if `with_newton`.
pub fn error_terms(
    sol: &DiscreteSolution,
    exact: Option<&dyn HeatProblem>,
    opts: &AssemblyOptions,
    with_newton: bool,
) -> Result<NormTerms> {
    let mut terms = NormTerms::default();
    let ex = Exact(exact);
    jump_terms(sol, &ex, &mut terms);
    ldg_terms(sol, &ex, opts, &mut terms)?;
    if with_newton {
        terms.newton = newton_term(sol, exact, opts)?;
    }
    Ok(terms)
}

pub fn jump_seminorm(sol: &DiscreteSolution, exact: Option<&dyn HeatProblem>) -> f64 {
    let mut terms = NormTerms::default();
    jump_terms(sol, &Exact(exact), &mut terms);
    terms.jump_sq().sqrt()
}

pub fn ldg_norm(sol: &DiscreteSolution, exact: Option<&dyn HeatProblem>, opts: &AssemblyOptions) -> Result<f64> {
    Ok(error_terms(sol, exact, opts, false)?.ldg_sq().sqrt())
}

pub fn ldg_plus_norm(sol: &DiscreteSolution, exact: Option<&dyn HeatProblem>, opts: &AssemblyOptions) -> Result<f64> {
    Ok(error_terms(sol, exact, opts, false)?.ldg_plus_sq().sqrt())
}

pub fn ldg_newton_norm(sol: &DiscreteSolution, exact: Option<&dyn HeatProblem>, opts: &AssemblyOptions) -> Result<f64> {
    Ok(error_terms(sol, exact, opts, true)?.ldg_newton_sq().sqrt())
}

pub fn l2_error(sol: &DiscreteSolution, exact: Option<&dyn HeatProblem>) -> f64 {
    let ex = Exact(exact);
    let space = &sol.space;
    let mesh = space.mesh();
    (0..mesh.num_elements())
        .map(|e| {
            let rule = element_rule(mesh, e, error_degree(mesh.element(e).degree));
            let (uh, _, _) = discrete_values(sol, e, &rule.points);
            integrate(&rule, |q| (ex.value(&rule.points[q]) - uh[q]).powi(2))
        })
        .sum::<f64>()
        .sqrt()
}

/// Full report for `u − u_h`.
pub fn evaluate(sol: &DiscreteSolution, exact: Option<&dyn HeatProblem>, opts: &AssemblyOptions) -> Result<NormReport> {
    evaluate_with(sol, exact, opts, true)
}

/// Report for `u − u_h`, skipping the Newton-potential solve unless `with_newton`.
pub fn evaluate_with(
    sol: &DiscreteSolution,
    exact: Option<&dyn HeatProblem>,
    opts: &AssemblyOptions,
    with_newton: bool,
) -> Result<NormReport> {
    let terms = error_terms(sol, exact, opts, with_newton)?;
    let mesh = sol.space.mesh();
    Ok(NormReport {
        h: mesh.elements().iter().map(|e| e.h).fold(0.0, f64::max),
        p: mesh.max_degree(),
        n_dofs: sol.ndofs(),
        error_l2: terms.l2.sqrt(),
        error_ldg: terms.ldg_sq().sqrt(),
        error_ldg_plus: terms.ldg_plus_sq().sqrt(),
        error_ldgn: with_newton.then(|| terms.ldg_newton_sq().sqrt()),
        terms,
    })
}

/// Rates `log(e_{i−1}/e_i) / log(h_{i−1}/h_i)`; the first entry is `None`.
pub fn eoc(errors: &[f64], h: &[f64]) -> Vec<Option<f64>> {
    let mut out = vec![None; errors.len().min(h.len())];
    for i in 1..out.len() {
        out[i] = Some((errors[i - 1] / errors[i]).ln() / (h[i - 1] / h[i]).ln());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eoc_examples() {
        assert_eq!(eoc(&[0.04, 0.01], &[1.0, 0.5]), vec![None, Some(2.0)]);
        assert_eq!(eoc(&[0.3, 0.3], &[1.0, 0.5])[1], Some(0.0));
        let h: Vec<f64> = (0..5).map(|i| 0.5f64.powi(i) * 0.7).collect();
        let e: Vec<f64> = h.iter().map(|h| 3.0 * h.powi(3)).collect();
        for r in eoc(&e, &h).into_iter().skip(1) {
            assert!((r.unwrap() - 3.0).abs() < 1e-12);
        }
        assert_eq!(eoc(&[1.0], &[1.0]), vec![None]);
    }
}
