//! Orthogonal polynomial bases, quadrature rules and the BDM dual basis.

pub mod bdm;
pub mod ortho;
pub mod quadrature;

pub use bdm::{bdm_basis, ref_edge, ref_edge_normal, ref_edge_point, BdmBasis, MAX_DEGREE};
pub use ortho::{dubiner, dubiner_dim, facet_legendre, jacobi, legendre};
pub use quadrature::{interval_rule, triangle_rule, IntervalRule, QuadRule, TriangleRule};

use crate::Vec2;

/// Scalar orthogonal families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrthoKind {
    /// Orthonormal Legendre polynomials on `[0, 1]` (only `pt[0]` is used).
    Legendre1D,
    /// Dubiner polynomials on the reference triangle.
    DubinerTri,
}

/// Values and gradients of all members of degree ≤ `k`, ordered by total degree.
/// For `Legendre1D` the gradient's first entry holds the derivative.
pub fn eval_orthobasis(kind: OrthoKind, k: usize, pt: Vec2) -> (Vec<f64>, Vec<Vec2>) {
    match kind {
        OrthoKind::Legendre1D => {
            let (v, d) = facet_legendre(k, pt[0]);
            (v, d.into_iter().map(|d| [d, 0.0]).collect())
        }
        OrthoKind::DubinerTri => dubiner(k, pt),
    }
}
