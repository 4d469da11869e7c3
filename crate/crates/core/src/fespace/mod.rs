//! Global finite element spaces, dof maps, Dirichlet data and field evaluation.
//!
//! Dof numbering is deterministic: facet dofs first (by facet index, then mode), then
//! element-interior dofs (by element, then local index).

mod eval;
mod interp;

use std::sync::Arc;

use nalgebra::DMatrix;

pub use eval::{
    evaluate_field, max_divergence, max_velocity, physical_hdiv, physical_scalar_grads, write_field_dump, FieldValue,
    GeoPoint,
};
pub use interp::{interpolate, set_dirichlet, DirichletData, VectorFn};

use crate::error::{Error, Result};
use crate::mesh2d::Mesh;
use crate::polybasis::{bdm_basis, dubiner_dim, facet_legendre, interval_rule, BdmBasis, MAX_DEGREE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    /// Normal-continuous BDM velocities `W_h`.
    Hdiv,
    /// Tangential facet traces `F_h` (scalar per facet in 2D).
    FacetTan,
    /// Discontinuous scalar pressures `Q_h`.
    PressureDG,
    /// Discontinuous vector fields `V_h`, x-component block first in each element.
    VectorDG,
}

#[derive(Debug)]
pub struct FESpace {
    pub kind: SpaceKind,
    pub degree: usize,
    pub mesh: Arc<Mesh>,
    pub ndof: usize,
    per_element: usize,
    dofs: Vec<usize>,
    signs: Vec<f64>,
    pub dirichlet_mask: Vec<bool>,
    bdm: Option<Arc<BdmBasis>>,
    /// For `FacetTan` on curved facets: `ψ_i = Σ_j T_ij ℓ_j`, orthogonal under arc length.
    facet_transforms: Vec<Option<DMatrix<f64>>>,
}

impl FESpace {
    pub fn new(mesh: Arc<Mesh>, kind: SpaceKind, degree: usize) -> Result<FESpace> {
        build_space(mesh, kind, degree)
    }

    /// Global dof indices of an element, in local order.
    pub fn element_dofs(&self, elem: usize) -> &[usize] {
        &self.dofs[elem * self.per_element..(elem + 1) * self.per_element]
    }

    /// Orientation signs matching [`FESpace::element_dofs`].
    pub fn element_signs(&self, elem: usize) -> &[f64] {
        &self.signs[elem * self.per_element..(elem + 1) * self.per_element]
    }

    pub fn dofs_per_element(&self) -> usize {
        self.per_element
    }

    pub fn bdm(&self) -> Option<&Arc<BdmBasis>> {
        self.bdm.as_ref()
    }

    /// Number of facet-attached dofs (`Hdiv`, `FacetTan`).
    pub fn n_facet_dofs(&self) -> usize {
        match self.kind {
            SpaceKind::Hdiv | SpaceKind::FacetTan => self.mesh.n_facets() * (self.degree + 1),
            _ => 0,
        }
    }

    /// Facet basis values at global facet parameter `s` (`FacetTan` only).
    pub fn facet_values(&self, facet: usize, s: f64) -> Vec<f64> {
        let (l, _) = facet_legendre(self.degree, s);
        match &self.facet_transforms[facet] {
            None => l,
            Some(t) => (0..=self.degree).map(|i| (0..=i).map(|j| t[(i, j)] * l[j]).sum()).collect(),
        }
    }

    /// Gathers element-local coefficients (signs applied) from a global vector.
    pub fn gather(&self, elem: usize, global: &[f64]) -> Vec<f64> {
        self.element_dofs(elem).iter().zip(self.element_signs(elem)).map(|(&g, &s)| s * global[g]).collect()
    }

    /// Marks dofs on facets carrying any of the labels as Dirichlet dofs.
    pub fn mark_dirichlet(&mut self, labels: &[&str]) -> Result<()> {
        for l in labels {
            if !self.mesh.has_label(l) {
                return Err(Error::MissingLabel(l.to_string()));
            }
        }
        if !matches!(self.kind, SpaceKind::Hdiv | SpaceKind::FacetTan) {
            return Ok(());
        }
        let n = self.degree + 1;
        for (&f, label) in &self.mesh.boundary_markers {
            if labels.contains(&label.as_str()) {
                for j in 0..n {
                    self.dirichlet_mask[f * n + j] = true;
                }
            }
        }
        Ok(())
    }
}

/// Builds a global space of the given kind and polynomial degree.
pub fn build_space(mesh: Arc<Mesh>, kind: SpaceKind, degree: usize) -> Result<FESpace> {
    if degree > MAX_DEGREE || (kind == SpaceKind::Hdiv && degree == 0) {
        return Err(Error::UnsupportedSpace(format!("{kind:?} of degree {degree}")));
    }
    let ne = mesh.n_elements();
    let nf = mesh.n_facets();
    let mut bdm = None;
    let mut facet_transforms = Vec::new();
    let (ndof, per_element, dofs, signs) = match kind {
        SpaceKind::Hdiv => {
            let k = degree;
            let basis = bdm_basis(k)?;
            let nint = basis.n_interior_dofs();
            let per = basis.dim();
            let mut dofs = Vec::with_capacity(ne * per);
            let mut signs = Vec::with_capacity(ne * per);
            for elem in 0..ne {
                for e in 0..3 {
                    let f = mesh.element_facets[elem][e];
                    let owner = mesh.facets[f].owner == elem;
                    for j in 0..=k {
                        dofs.push(f * (k + 1) + j);
                        signs.push(if owner || j % 2 == 1 { 1.0 } else { -1.0 });
                    }
                }
                for i in 0..nint {
                    dofs.push(nf * (k + 1) + elem * nint + i);
                    signs.push(1.0);
                }
            }
            bdm = Some(basis);
            (nf * (k + 1) + ne * nint, per, dofs, signs)
        }
        SpaceKind::FacetTan => {
            let n = degree + 1;
            let mut dofs = Vec::with_capacity(ne * 3 * n);
            for elem in 0..ne {
                for e in 0..3 {
                    let f = mesh.element_facets[elem][e];
                    dofs.extend((0..n).map(|j| f * n + j));
                }
            }
            facet_transforms = (0..nf).map(|f| curved_facet_transform(&mesh, f, degree)).collect();
            (nf * n, 3 * n, dofs, vec![1.0; ne * 3 * n])
        }
        SpaceKind::PressureDG | SpaceKind::VectorDG => {
            let comps = if kind == SpaceKind::VectorDG { 2 } else { 1 };
            let per = comps * dubiner_dim(degree);
            (ne * per, per, (0..ne * per).collect(), vec![1.0; ne * per])
        }
    };
    if facet_transforms.is_empty() {
        facet_transforms = vec![None; nf];
    }
    Ok(FESpace {
        kind,
        degree,
        mesh,
        ndof,
        per_element,
        dofs,
        signs,
        dirichlet_mask: vec![false; ndof],
        bdm,
        facet_transforms,
    })
}

/// Orthogonalization of the Legendre trace basis under the curved arc-length measure.
fn curved_facet_transform(mesh: &Mesh, f: usize, degree: usize) -> Option<DMatrix<f64>> {
    let facet = &mesh.facets[f];
    if !mesh.is_curved(facet.owner) {
        return None;
    }
    let n = degree + 1;
    let rule = interval_rule(2 * degree + 2 * mesh.geometry_order + 4);
    let mut gram = DMatrix::zeros(n, n);
    let mut length = 0.0;
    for (s, w) in rule.points.iter().zip(&rule.weights) {
        let (_, dx) = mesh.facet_point(f, *s);
        let ds = (dx[0] * dx[0] + dx[1] * dx[1]).sqrt();
        length += w * ds;
        let (l, _) = facet_legendre(degree, *s);
        for i in 0..n {
            for j in 0..n {
                gram[(i, j)] += w * ds * l[i] * l[j];
            }
        }
    }
    let chol = gram.cholesky().expect("facet Gram matrix is SPD");
    let linv = chol.l().try_inverse().expect("Cholesky factor is invertible");
    Some(linv * length.sqrt())
}

/// Coefficient vector bound to a space.
#[derive(Debug, Clone)]
pub struct FEField {
    pub space: Arc<FESpace>,
    pub coeffs: Vec<f64>,
}

impl FEField {
    pub fn zeros(space: Arc<FESpace>) -> FEField {
        let n = space.ndof;
        FEField { space, coeffs: vec![0.0; n] }
    }

    pub fn new(space: Arc<FESpace>, coeffs: Vec<f64>) -> Result<FEField> {
        if coeffs.len() != space.ndof {
            return Err(Error::InvalidParameter(format!(
                "coefficient length {} does not match ndof {}",
                coeffs.len(),
                space.ndof
            )));
        }
        Ok(FEField { space, coeffs })
    }
}

/// Composite velocity `u = (u_T, u_F)`.
#[derive(Debug, Clone)]
pub struct VelocityField {
    pub w: FEField,
    pub f: FEField,
}

impl VelocityField {
    pub fn new(w: FEField, f: FEField) -> Result<VelocityField> {
        if !Arc::ptr_eq(&w.space.mesh, &f.space.mesh) {
            return Err(Error::MeshMismatch);
        }
        Ok(VelocityField { w, f })
    }
}
