//! High-order H(div)-conforming hybrid discontinuous Galerkin discretization of the
//! unsteady incompressible Navier-Stokes equations on triangles.
//!
//! The velocity lives in a BDM space with normal continuity plus a facet space for the
//! tangential trace, so discrete solutions are exactly divergence-free. Convection is
//! handled by an upwind DG operator on a broken polynomial space and combined with
//! implicit Stokes-Brinkman solves by operator splitting.

pub mod bench;
pub mod error;
pub mod fespace;
pub mod forms;
pub mod linsys;
pub mod mesh2d;
pub mod polybasis;
pub mod timeloop;

pub use error::{Error, Result};

/// Plain 2D point or vector.
pub type Vec2 = [f64; 2];
/// Row-major 2×2 matrix, `m[i][j]`.
pub type Mat2 = [[f64; 2]; 2];
