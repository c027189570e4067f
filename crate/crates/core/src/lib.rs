//! Space-time local discontinuous Galerkin (LDG) discretisation of the heat
//! equation `∂ₜu − ∇·(k∇u) = f` on prismatic space-time meshes.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: spatial meshes extruded over time partitions, facet taxonomy
//!   (initial, final, space-like, Dirichlet, time-like) and time slabs.
//! - [`quadrature`]: Gauss rules on prisms and on every facet type.
//! - [`basis`]: tensor-product, standard, quasi-Trefftz and embedded Trefftz
//!   element spaces, all expressed in scaled monomials.
//! - [`space`]: the global broken spaces `V_p × M_p` with dof numbering.
//! - [`assembly`]: the mixed blocks `M, D, B, S`, the reduced operator
//!   `A = S + BᵀD⁻¹B`, stabilisation and the lifting operator.
//! - [`solve`]: monolithic and slab-by-slab solves, the discrete Newton
//!   potential and 2-norm condition numbers.
//! - [`norms`]: the jump functional and the LDG, LDG⁺ and LDG-Newton norms.
//! - [`problems`]: benchmark problems with exact solutions.
//! - [`study`]: h-, p-, hp- and conditioning studies producing table rows.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod assembly;
pub mod basis;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod norms;
pub mod problems;
pub mod quadrature;
pub mod solve;
pub mod space;
pub mod study;

pub use error::{Error, Result};

/// A point in space-time. Unused spatial components are zero.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point {
    pub x: [f64; 2],
    pub t: f64,
}

impl Point {
    pub fn new(x: [f64; 2], t: f64) -> Self {
        Self { x, t }
    }
}

/// Spatial discretisation kind of the scalar space `V_p(K)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    TensorProduct,
    Standard,
    QuasiTrefftz,
    EmbeddedTrefftz,
}

impl SpaceKind {
    pub const ALL: [SpaceKind; 4] =
        [SpaceKind::TensorProduct, SpaceKind::Standard, SpaceKind::QuasiTrefftz, SpaceKind::EmbeddedTrefftz];

    /// Short label used in tables (`tensor`, `standard`, `qtrefftz`, `etrefftz`).
    pub fn label(self) -> &'static str {
        match self {
            SpaceKind::TensorProduct => "tensor",
            SpaceKind::Standard => "standard",
            SpaceKind::QuasiTrefftz => "qtrefftz",
            SpaceKind::EmbeddedTrefftz => "etrefftz",
        }
    }

    pub fn is_trefftz(self) -> bool {
        matches!(self, SpaceKind::QuasiTrefftz | SpaceKind::EmbeddedTrefftz)
    }
}

impl std::str::FromStr for SpaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tensor" => Ok(SpaceKind::TensorProduct),
            "standard" => Ok(SpaceKind::Standard),
            "qtrefftz" => Ok(SpaceKind::QuasiTrefftz),
            "etrefftz" => Ok(SpaceKind::EmbeddedTrefftz),
            other => Err(Error::InvalidParameter(format!("unknown space kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Binomial coefficient `C(n, k)`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Constant symmetric positive definite diffusion tensor `k` (1×1 or 2×2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diffusion {
    dim: usize,
    k: [[f64; 2]; 2],
}

impl Diffusion {
    pub fn new(dim: usize, k: [[f64; 2]; 2]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidParameter(format!("unsupported dimension {dim}")));
        }
        let mut k = k;
        if dim == 1 {
            k = [[k[0][0], 0.0], [0.0, 0.0]];
        }
        if (k[0][1] - k[1][0]).abs() > 1e-14 * (k[0][0].abs() + k[1][1].abs()) {
            return Err(Error::InvalidParameter("diffusion tensor is not symmetric".into()));
        }
        let d = Self { dim, k };
        let (lo, _) = d.eigenvalue_range();
        if !(lo > 0.0) {
            return Err(Error::InvalidParameter("diffusion tensor is not positive definite".into()));
        }
        Ok(d)
    }

    /// `κ·Id`.
    pub fn isotropic(dim: usize, kappa: f64) -> Result<Self> {
        Self::new(dim, [[kappa, 0.0], [0.0, kappa]])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        self.k
    }

    /// Returns `κ` when `k = κ·Id`.
    pub fn scalar(&self) -> Option<f64> {
        let k = self.k;
        (self.dim == 1 || (k[0][1] == 0.0 && k[0][0] == k[1][1])).then_some(k[0][0])
    }

    pub fn inverse(&self) -> [[f64; 2]; 2] {
        let k = self.k;
        if self.dim == 1 {
            return [[1.0 / k[0][0], 0.0], [0.0, 0.0]];
        }
        let det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
        [[k[1][1] / det, -k[0][1] / det], [-k[1][0] / det, k[0][0] / det]]
    }

    fn eigenvalue_range(&self) -> (f64, f64) {
        let k = self.k;
        if self.dim == 1 {
            return (k[0][0], k[0][0]);
        }
        let m = 0.5 * (k[0][0] + k[1][1]);
        let r = (0.25 * (k[0][0] - k[1][1]).powi(2) + k[0][1] * k[1][0]).sqrt();
        (m - r, m + r)
    }

    /// `‖√k‖₂²`, the largest eigenvalue of `k`.
    pub fn sqrt_norm_sq(&self) -> f64 {
        self.eigenvalue_range().1
    }

    /// `k·v`.
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let k = self.k;
        [k[0][0] * v[0] + k[0][1] * v[1], k[1][0] * v[0] + k[1][1] * v[1]]
    }
}
