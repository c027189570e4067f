//! Energy identities for random discrete functions.

use std::sync::Arc;

use proptest::prelude::*;
use stldg::assembly::{assemble, reduce, AssemblyOptions};
use stldg::mesh::{build_tensor_mesh, BoxDomain, DegreeRule, TimePartition};
use stldg::norms::{error_terms, jump_seminorm, ldg_norm};
use stldg::problems::Homogeneous;
use stldg::space::{DiscreteSolution, DiscreteSpace};
use stldg::{Diffusion, SpaceKind};

fn space(kind: SpaceKind, nx: usize, nt: usize, p: usize, dim: usize) -> Arc<DiscreteSpace> {
    let tp = TimePartition::uniform(1.0, nt).unwrap();
    let mesh = build_tensor_mesh(&BoxDomain::unit(dim), nx, &tp, &DegreeRule::Uniform(p)).unwrap();
    Arc::new(DiscreteSpace::new(Arc::new(mesh), kind, Diffusion::isotropic(dim, 1.0).unwrap()).unwrap())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

fn check(kind: SpaceKind, alpha: f64, dim: usize, coeffs: Vec<f64>) {
    let s = space(kind, if dim == 1 { 4 } else { 2 }, 2, 2, dim);
    let n = s.mesh().num_elements();
    let opts = AssemblyOptions { eta_star: 0.1, alpha };
    let zero = Homogeneous { dim, final_time: 1.0 };
    let blocks = assemble(&s, &zero, &opts, 0..n).unwrap();
    let red = reduce(&blocks).unwrap();
    let v: Vec<f64> = coeffs.into_iter().cycle().take(s.ndofs()).collect();
    let sol = DiscreteSolution::new(s.clone(), v.clone()).unwrap();
    let m = blocks.m.bilinear(&v, &v);
    let a = red.a.bilinear(&v, &v);
    let j2 = jump_seminorm(&sol, None).powi(2);
    let ldg2 = ldg_norm(&sol, None, &opts).unwrap().powi(2);
    assert!(rel(m, j2) < 1e-10, "m_h(v,v) = {m}, |v|_J² = {j2}");
    assert!(rel(a, ldg2) < 1e-10, "A(v,v) = {a}, ‖v‖²_LDG = {ldg2}");
    assert!(rel(m + a, j2 + ldg2) < 1e-10);
    let t = error_terms(&sol, None, &opts, false).unwrap();
    assert!(rel(t.ldg_sq(), ldg2) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energy_identities_1d(coeffs in prop::collection::vec(-1.0f64..1.0, 64), kind in 0usize..4, alpha in prop::sample::select(vec![0.0, 0.5, 0.3, 1.0])) {
        check(SpaceKind::ALL[kind], alpha, 1, coeffs);
    }
}

#[test]
fn energy_identities_2d() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for kind in SpaceKind::ALL {
        let c: Vec<f64> = (0..97).map(|_| rng.gen_range(-1.0..1.0)).collect();
        check(kind, 0.5, 2, c);
    }
}
