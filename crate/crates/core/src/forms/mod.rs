//! Element and global assembly of the viscous, mass, divergence, transfer and convection
//! operators of the hybrid H(div) discretization.

mod convection;
mod stokes;
mod tables;
mod transfer;
mod viscous;

use std::sync::Arc;

pub use convection::{BoundaryTrace, Convection};
pub use stokes::{assemble_element_blocks, assemble_load, assemble_traction, ElementBlocks};
pub use transfer::Transfer;
pub use viscous::{assemble_viscous, assemble_viscous_projected_explicit, realize_projected_jumps, ViscousBlocks};

use crate::error::{Error, Result};
use crate::fespace::{build_space, FESpace, SpaceKind};
use crate::mesh2d::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum JumpVariant {
    Full,
    Projected,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FormConfig {
    pub nu: f64,
    pub alpha: f64,
    pub variant: JumpVariant,
}

impl FormConfig {
    /// Default penalty `α = 10 k²`.
    pub fn new(nu: f64, k: usize, variant: JumpVariant) -> Self {
        FormConfig { nu, alpha: 10.0 * (k * k) as f64, variant }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) {
            return Err(Error::InvalidParameter(format!("viscosity must be positive, got {}", self.nu)));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("penalty must be positive, got {}", self.alpha)));
        }
        Ok(())
    }
}

/// The discrete spaces of one velocity degree `k` on a mesh.
#[derive(Debug, Clone)]
pub struct Spaces {
    pub mesh: Arc<Mesh>,
    pub k: usize,
    pub w: Arc<FESpace>,
    /// Tangential facet space of degree `k`.
    pub f_full: Arc<FESpace>,
    /// Tangential facet space of degree `k − 1`.
    pub f_reduced: Arc<FESpace>,
    pub q: Arc<FESpace>,
    /// Broken vector space of degree `k` for convection.
    pub v: Arc<FESpace>,
}

impl Spaces {
    pub fn new(mesh: Arc<Mesh>, k: usize) -> Result<Spaces> {
        if k == 0 {
            return Err(Error::UnsupportedSpace("velocity degree must be at least 1".into()));
        }
        let sp = |kind, d| build_space(mesh.clone(), kind, d).map(Arc::new);
        Ok(Spaces {
            k,
            w: sp(SpaceKind::Hdiv, k)?,
            f_full: sp(SpaceKind::FacetTan, k)?,
            f_reduced: sp(SpaceKind::FacetTan, k - 1)?,
            q: sp(SpaceKind::PressureDG, k - 1)?,
            v: sp(SpaceKind::VectorDG, k)?,
            mesh,
        })
    }

    /// Facet space matching the jump variant.
    pub fn facet(&self, variant: JumpVariant) -> &Arc<FESpace> {
        match variant {
            JumpVariant::Full => &self.f_full,
            JumpVariant::Projected => &self.f_reduced,
        }
    }
}

/// Everything needed to apply and solve with the discrete operators.
#[derive(Debug)]
pub struct Discretization {
    pub spaces: Spaces,
    pub cfg: FormConfig,
    pub blocks: ElementBlocks,
    pub transfer: Transfer,
    pub convection: Convection,
}

impl Discretization {
    pub fn new(mesh: Arc<Mesh>, k: usize, cfg: FormConfig) -> Result<Discretization> {
        let spaces = Spaces::new(mesh, k)?;
        let blocks = assemble_element_blocks(&spaces, &cfg)?;
        let transfer = Transfer::new(&spaces)?;
        let convection = Convection::new(&spaces);
        Ok(Discretization { spaces, cfg, blocks, transfer, convection })
    }

    pub fn facet_space(&self) -> &Arc<FESpace> {
        self.spaces.facet(self.cfg.variant)
    }

    pub fn n_w(&self) -> usize {
        self.spaces.w.ndof
    }

    pub fn n_f(&self) -> usize {
        self.facet_space().ndof
    }

    pub fn n_q(&self) -> usize {
        self.spaces.q.ndof
    }
}

#[cfg(test)]
mod tests;
