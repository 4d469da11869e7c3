//! Dof and fill statistics of the condensed vector reaction-diffusion operator.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Serialize;

use crate::error::Result;
use crate::forms::{JumpVariant, Spaces};
use crate::mesh2d::Mesh;
use crate::polybasis::dubiner_dim;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SparsityMethod {
    /// Analytic count for a standard DG method with element-neighbor coupling.
    StdDgEstimate,
    Hdg,
    /// HDG with projected jumps.
    Phdg,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SparsityReport {
    pub method: SparsityMethod,
    pub k: usize,
    pub dof: usize,
    pub cdof: usize,
    /// Structural nonzeros in the lower triangle of the (condensed) matrix.
    #[serde(rename = "nnzA")]
    pub nnz_a: usize,
}

pub fn sparsity_report(mesh: &Arc<Mesh>, k: usize, method: SparsityMethod) -> Result<SparsityReport> {
    let variant = match method {
        SparsityMethod::StdDgEstimate => {
            let n = 2 * dubiner_dim(k);
            let ne = mesh.n_elements();
            let ni = mesh.facets.iter().filter(|f| !f.is_boundary()).count();
            let dof = ne * n;
            return Ok(SparsityReport { method, k, dof, cdof: dof, nnz_a: ne * n * (n + 1) / 2 + ni * n * n });
        }
        SparsityMethod::Hdg => JumpVariant::Full,
        SparsityMethod::Phdg => JumpVariant::Projected,
    };
    let spaces = Spaces::new(mesh.clone(), k)?;
    let fs = spaces.facet(variant);
    let nwf = spaces.w.n_facet_dofs();
    // after eliminating interior W dofs each element couples all of its facet dofs densely
    let mut pattern = BTreeSet::new();
    for elem in 0..mesh.n_elements() {
        let mut c: Vec<usize> = spaces.w.element_dofs(elem).iter().copied().filter(|&g| g < nwf).collect();
        c.extend(fs.element_dofs(elem).iter().map(|g| nwf + g));
        for &a in &c {
            for &b in &c {
                if b <= a {
                    pattern.insert((a, b));
                }
            }
        }
    }
    Ok(SparsityReport { method, k, dof: spaces.w.ndof + fs.ndof, cdof: nwf + fs.ndof, nnz_a: pattern.len() })
}
