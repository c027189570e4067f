//! Lifting examples, structural properties of the assembled blocks and
//! elementary norm values.

use std::sync::Arc;

use stldg::assembly::{assemble, lifting_apply, reduce, AssemblyOptions};
use stldg::linalg::{symmetric_eigenvalues, DenseCholesky};
use stldg::mesh::{build_tensor_mesh, BoxDomain, DegreeRule, TimePartition};
use stldg::norms::{error_terms, jump_seminorm, l2_error};
use stldg::problems::{smooth_1d, smooth_2d, HeatProblem, Homogeneous};
use stldg::quadrature::element_rule;
use stldg::solve::{solve_slabwise, SolverMode};
use stldg::space::{DiscreteSolution, DiscreteSpace};
use stldg::{Diffusion, Point, SpaceKind};

fn space(kind: SpaceKind, dim: usize, nx: usize, nt: usize, p: usize) -> Arc<DiscreteSpace> {
    let tp = TimePartition::uniform(1.0, nt).unwrap();
    let mesh = build_tensor_mesh(&BoxDomain::unit(dim), nx, &tp, &DegreeRule::Uniform(p)).unwrap();
    Arc::new(DiscreteSpace::new(Arc::new(mesh), kind, Diffusion::isotropic(dim, 1.0).unwrap()).unwrap())
}

/// Element-wise `L²` projection of `g` onto the free basis functions.
fn project(s: &DiscreteSpace, g: impl Fn(&Point, usize) -> f64) -> Vec<f64> {
    let mut v = vec![0.0; s.ndofs()];
    for k in 0..s.mesh().num_elements() {
        let p = s.mesh().element(k).degree;
        let rule = element_rule(s.mesh(), k, 2 * p + 4);
        let tab = s.basis(k).tabulate(&rule.points);
        let n = s.dofs(k).len();
        let mass = faer::Mat::from_fn(n, n, |i, j| {
            (0..rule.len()).map(|q| rule.weights[q] * tab.values[(i, q)] * tab.values[(j, q)]).sum()
        });
        let rhs: Vec<f64> = (0..n)
            .map(|i| (0..rule.len()).map(|q| rule.weights[q] * g(&rule.points[q], k) * tab.values[(i, q)]).sum())
            .collect();
        let c = DenseCholesky::new(&mass).unwrap().solve_vec(&rhs);
        v[s.dofs(k)].copy_from_slice(&c);
    }
    v
}

/// First component of the lifting on element `k` at `p`.
fn lifting_at(s: &DiscreteSpace, lift: &[f64], k: usize, p: Point) -> f64 {
    let vb = s.vector_basis(k);
    let tab = vb.scalar.tabulate(&[p]);
    let c = &lift[s.q_dofs(k)];
    (0..vb.scalar_len()).map(|i| c[i] * tab.values[(i, 0)]).sum()
}

fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!((a - b).abs() < tol, "{what}: {a} vs {b}");
}

#[test]
fn lifting_of_linear_function_on_one_element() {
    // (L v, r) = ∫ r(1, t) dt for v = x; its Riesz representer in Q1 is 6x − 2
    let s = space(SpaceKind::TensorProduct, 1, 1, 1, 1);
    let v = project(&s, |p, _| p.x[0]);
    let lift = lifting_apply(&s, 0.5, &v).unwrap();
    for &(x, t) in &[(0.0, 0.0), (0.25, 0.7), (1.0, 0.3), (0.6, 1.0)] {
        assert_close(lifting_at(&s, &lift, 0, Point::new([x, 0.0], t)), 6.0 * x - 2.0, 1e-12, "Q1");
    }
    // in Q2 the representer gains 5 P̃₂(x) P̃₂(1) = 5(6x² − 6x + 1)
    let s = space(SpaceKind::TensorProduct, 1, 1, 1, 2);
    let v = project(&s, |p, _| p.x[0]);
    let lift = lifting_apply(&s, 0.5, &v).unwrap();
    for &(x, t) in &[(0.1, 0.2), (0.9, 0.8)] {
        let expected = 30.0 * x * x - 24.0 * x + 3.0;
        assert_close(lifting_at(&s, &lift, 0, Point::new([x, 0.0], t)), expected, 1e-12, "Q2");
    }
}

#[test]
fn lifting_of_continuous_function_ignores_alpha() {
    // v = x is continuous: only the Dirichlet facet x = 1 contributes, so the
    // lifting is 2(6s − 2) on [½, 1] with s = 2x − 1 and zero on [0, ½]
    for kind in SpaceKind::ALL {
        let s = space(kind, 1, 2, 1, 1);
        let v = project(&s, |p, _| p.x[0]);
        for alpha in [0.0, 0.3, 1.0] {
            let lift = lifting_apply(&s, alpha, &v).unwrap();
            for &(x, t) in &[(0.0, 0.5), (0.4, 0.9)] {
                assert_close(lifting_at(&s, &lift, 0, Point::new([x, 0.0], t)), 0.0, 1e-12, kind.label());
            }
            for &(x, t) in &[(0.5, 0.0), (0.8, 0.4), (1.0, 1.0)] {
                let expected = 2.0 * (6.0 * (2.0 * x - 1.0) - 2.0);
                assert_close(lifting_at(&s, &lift, 1, Point::new([x, 0.0], t)), expected, 1e-11, kind.label());
            }
        }
    }
}

#[test]
fn lifting_of_step_function() {
    // v = 1 on [0, ½], 0 on [½, 1]; endpoint representers on an interval of
    // length ½ are 2(6s − 2) (right) and 2(4 − 6s) (left)
    let s = space(SpaceKind::TensorProduct, 1, 2, 1, 1);
    let v = project(&s, |_, k| if k == 0 { 1.0 } else { 0.0 });
    let at = |lift: &[f64], k: usize, x: f64| lifting_at(&s, lift, k, Point::new([x, 0.0], 0.5));
    let half = lifting_apply(&s, 0.5, &v).unwrap();
    for x in [0.0, 0.2, 0.5] {
        let sx = 2.0 * x;
        assert_close(at(&half, 0, x), 0.5 * 2.0 * (6.0 * sx - 2.0) - 2.0 * (4.0 - 6.0 * sx), 1e-12, "element 0");
    }
    for x in [0.5, 0.7, 1.0] {
        let sx = 2.0 * x - 1.0;
        assert_close(at(&half, 1, x), 0.5 * 2.0 * (4.0 - 6.0 * sx), 1e-12, "element 1");
    }
    // the lifting is affine in α
    let l0 = lifting_apply(&s, 0.0, &v).unwrap();
    let l1 = lifting_apply(&s, 1.0, &v).unwrap();
    for i in 0..half.len() {
        assert_close(l0[i] + l1[i], 2.0 * half[i], 1e-12, "affine in α");
    }
    // one-sided averages put the interior jump entirely on one element
    let interior = |l: &[f64], k: usize| at(l, k, if k == 0 { 0.25 } else { 0.75 });
    let e1 = [interior(&l0, 1), interior(&l1, 1)];
    assert!(e1.iter().any(|v| v.abs() < 1e-12) && e1.iter().any(|v| v.abs() > 0.1), "{e1:?}");
}

#[test]
fn reduced_matrix_is_symmetric_and_flux_mass_positive() {
    for kind in SpaceKind::ALL {
        for alpha in [0.0, 0.5, 1.0] {
            let s = space(kind, 2, 2, 2, 2);
            let n = s.mesh().num_elements();
            let opts = AssemblyOptions { eta_star: 0.1, alpha };
            let zero = Homogeneous { dim: 2, final_time: 1.0 };
            let blocks = assemble(&s, &zero, &opts, 0..n).unwrap();
            let red = reduce(&blocks).unwrap();
            let a = red.a.to_dense();
            let scale = (0..a.nrows()).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
            for i in 0..a.nrows() {
                for j in 0..i {
                    assert!((a[(i, j)] - a[(j, i)]).abs() <= 1e-12 * scale, "{kind}: A not symmetric");
                }
            }
            assert!(symmetric_eigenvalues(&a).unwrap().iter().all(|&l| l > 0.0), "{kind}: A not positive");
            assert_eq!(blocks.d.len(), n);
            for dk in blocks.d.values() {
                let ev = symmetric_eigenvalues(dk).unwrap();
                assert!(ev.iter().all(|&l| l > 0.0), "{kind}: D block not SPD");
            }
        }
    }
}

#[test]
fn system_is_block_lower_triangular_in_slabs() {
    let s = space(SpaceKind::Standard, 1, 3, 4, 2);
    let slabs = s.mesh().time_slabs().unwrap();
    let slab_of = |k: usize| slabs.iter().position(|r| r.contains(&k)).unwrap();
    let n = s.mesh().num_elements();
    let zero = Homogeneous { dim: 1, final_time: 1.0 };
    let blocks = assemble(&s, &zero, &AssemblyOptions::default(), 0..n).unwrap();
    let red = reduce(&blocks).unwrap();
    let total = blocks.total(&red);
    let mut coupled = 0;
    for (&(i, j), b) in total.blocks() {
        let nonzero = (0..b.nrows()).any(|r| (0..b.ncols()).any(|c| b[(r, c)] != 0.0));
        if !nonzero {
            continue;
        }
        let (si, sj) = (slab_of(i), slab_of(j));
        assert!(sj == si || sj + 1 == si, "block ({i}, {j}) couples slab {si} to slab {sj}");
        coupled += usize::from(sj + 1 == si);
    }
    assert!(coupled > 0, "no coupling to the previous slab");
    // A itself never leaves a slab
    for (&(i, j), _) in red.a.blocks() {
        assert_eq!(slab_of(i), slab_of(j));
    }
}

#[test]
fn constant_function_norms() {
    for dim in 1..=2 {
        for kind in SpaceKind::ALL {
            let s = space(kind, dim, 2, 3, 2);
            let v = project(&s, |_, _| 1.0);
            let sol = DiscreteSolution::new(s, v).unwrap();
            // ½‖1‖² at t = 0 and t = T, no interior jumps
            assert_close(jump_seminorm(&sol, None), 1.0, 1e-12, "J");
            assert_close(l2_error(&sol, None), 1.0, 1e-12, "L²");
        }
    }
}

#[test]
fn zero_data_gives_zero_solution() {
    for dim in 1..=2 {
        let zero = Homogeneous { dim, final_time: 1.0 };
        for kind in SpaceKind::ALL {
            let s = space(kind, dim, 2, 2, 2);
            let (sol, _) = solve_slabwise(s, &zero, &AssemblyOptions::default()).unwrap();
            assert!(sol.coefficients.iter().all(|&c| c == 0.0), "{kind}");
        }
    }
}

#[test]
fn newton_norm_dominates_ldg_norm() {
    let problems: [Box<dyn HeatProblem>; 2] = [Box::new(smooth_1d()), Box::new(smooth_2d())];
    for pb in &problems {
        for kind in SpaceKind::ALL {
            let tp = TimePartition::uniform(pb.final_time(), 2).unwrap();
            let mesh = build_tensor_mesh(&pb.domain(), 2, &tp, &DegreeRule::Uniform(2)).unwrap();
            let s = Arc::new(DiscreteSpace::for_problem(Arc::new(mesh), kind, pb.as_ref()).unwrap());
            let opts = AssemblyOptions::default();
            let (sol, _) = stldg::solve::solve(s, pb.as_ref(), &opts, SolverMode::Slab).unwrap();
            let t = error_terms(&sol, Some(pb.as_ref()), &opts, true).unwrap();
            assert!(t.newton > 0.0);
            assert!(t.ldg_newton_sq() >= t.ldg_sq());
            assert!(t.ldg_plus_sq() >= t.ldg_sq());
            assert!(t.jump_sq() > 0.0);
        }
    }
}
