//! Exact reproduction of heat polynomials and solver-path agreement.

use std::sync::Arc;

use stldg::assembly::AssemblyOptions;
use stldg::mesh::{build_tensor_mesh, DegreeRule, TimePartition};
use stldg::norms::l2_error;
use stldg::problems::{polynomial_manufactured, smooth_1d, HeatProblem};
use stldg::solve::{solve_monolithic, solve_slabwise};
use stldg::space::DiscreteSpace;
use stldg::SpaceKind;

fn space_for(pb: &dyn HeatProblem, kind: SpaceKind, n: usize, p: usize) -> Arc<DiscreteSpace> {
    let tp = TimePartition::uniform(pb.final_time(), n).unwrap();
    let mesh = build_tensor_mesh(&pb.domain(), n, &tp, &DegreeRule::Uniform(p)).unwrap();
    Arc::new(DiscreteSpace::for_problem(Arc::new(mesh), kind, pb).unwrap())
}

#[test]
fn heat_polynomials_are_reproduced() {
    for dim in 1..=2 {
        for p in 1..=3 {
            let pb = polynomial_manufactured(dim, p).unwrap();
            for kind in SpaceKind::ALL {
                let s = space_for(&pb, kind, if dim == 1 { 4 } else { 2 }, p);
                let (sol, rep) = solve_slabwise(s, &pb, &AssemblyOptions::default()).unwrap();
                assert!(!rep.flagged);
                let e = l2_error(&sol, Some(&pb));
                assert!(e < 1e-9, "d = {dim}, p = {p}, {kind}: L² error {e:e}");
            }
        }
    }
}

#[test]
fn slab_and_monolithic_agree() {
    let pb = smooth_1d();
    for kind in SpaceKind::ALL {
        let s = space_for(&pb, kind, 4, 2);
        let (a, ra) = solve_slabwise(s.clone(), &pb, &AssemblyOptions::default()).unwrap();
        let (b, _) = solve_monolithic(s, &pb, &AssemblyOptions::default()).unwrap();
        assert_eq!(ra.systems, 4);
        assert_eq!(ra.factorizations, 1);
        let scale = b.coefficients.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let diff = a.coefficients.iter().zip(&b.coefficients).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(diff / scale < 1e-10, "{kind}: {diff:e}");
    }
}
