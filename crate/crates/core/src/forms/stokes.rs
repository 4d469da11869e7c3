//! Stokes element blocks: viscous, velocity mass, divergence, and right-hand sides.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::viscous::{assemble_viscous, edge_point, realize_projected_jumps, QuadContext, ViscousBlocks};
use super::{FormConfig, JumpVariant, Spaces};
use crate::error::Result;
use crate::fespace::{physical_hdiv, GeoPoint};
use crate::Vec2;

/// Per-element dense matrices of the Stokes operator.
///
/// Velocity matrices act on signed local W coefficients followed by the local facet dofs.
#[derive(Debug, Clone)]
pub struct ElementBlocks {
    pub variant: JumpVariant,
    pub viscous: ViscousBlocks,
    /// `∫ u_T · v_T` on local W dofs.
    pub mass: Vec<DMatrix<f64>>,
    /// `−∫ q div v_T`, pressure rows by W columns.
    pub div: Vec<DMatrix<f64>>,
    /// `∫ q` for the pressure basis.
    pub pressure_mean: Vec<DVector<f64>>,
}

pub fn assemble_element_blocks(spaces: &Spaces, cfg: &FormConfig) -> Result<ElementBlocks> {
    let full = assemble_viscous(spaces, cfg)?;
    let viscous = match cfg.variant {
        JumpVariant::Full => full,
        JumpVariant::Projected => realize_projected_jumps(&full)?,
    };
    let k = spaces.k;
    let ctx = QuadContext::new(spaces, k - 1);
    let mesh = &spaces.mesh;
    let nq = spaces.q.dofs_per_element();
    let local: Vec<_> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|elem| {
            let vt = ctx.vol(mesh.is_curved(elem));
            let signs = spaces.w.element_signs(elem);
            let nw = signs.len();
            let mut m = DMatrix::zeros(nw, nw);
            let mut d = DMatrix::zeros(nq, nw);
            let mut mean = DVector::zeros(nq);
            for (q, (p, w)) in vt.rule.points.iter().zip(&vt.rule.weights).enumerate() {
                let geo = GeoPoint::at(mesh, elem, *p);
                let (pv, _) = physical_hdiv(&vt.bdm_v[q], &vt.bdm_g[q], &geo);
                let c = w * geo.det;
                for a in 0..nw {
                    for b in a..nw {
                        let v = c * signs[a] * signs[b] * (pv[a][0] * pv[b][0] + pv[a][1] * pv[b][1]);
                        m[(a, b)] += v;
                        if a != b {
                            m[(b, a)] += v;
                        }
                    }
                }
                for i in 0..nq {
                    mean[i] += c * vt.phi[q][i];
                    for a in 0..nw {
                        d[(i, a)] -= w * vt.phi[q][i] * vt.bdm_div[q][a] * signs[a];
                    }
                }
            }
            (m, d, mean)
        })
        .collect();
    let mut mass = Vec::with_capacity(local.len());
    let mut div = Vec::with_capacity(local.len());
    let mut pressure_mean = Vec::with_capacity(local.len());
    for (m, d, p) in local {
        mass.push(m);
        div.push(d);
        pressure_mean.push(p);
    }
    Ok(ElementBlocks { variant: cfg.variant, viscous, mass, div, pressure_mean })
}

impl ElementBlocks {
    /// Global indices of local velocity dofs in the stacked `[W, F]` numbering.
    pub fn velocity_dofs(&self, spaces: &Spaces, elem: usize) -> Vec<usize> {
        let nw = spaces.w.ndof;
        let mut d = spaces.w.element_dofs(elem).to_vec();
        d.extend(spaces.facet(self.variant).element_dofs(elem).iter().map(|i| nw + i));
        d
    }

    /// `A u` for a stacked `[W, F]` vector.
    pub fn apply_viscous(&self, spaces: &Spaces, u: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; u.len()];
        for (elem, a) in self.viscous.a.iter().enumerate() {
            let dofs = self.velocity_dofs(spaces, elem);
            let x = DVector::from_iterator(dofs.len(), dofs.iter().map(|&i| u[i]));
            let r = a * x;
            for (i, &g) in dofs.iter().enumerate() {
                y[g] += r[i];
            }
        }
        y
    }

    /// `M_U w` on the W block.
    pub fn apply_mass(&self, spaces: &Spaces, w: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; w.len()];
        for (elem, m) in self.mass.iter().enumerate() {
            let dofs = spaces.w.element_dofs(elem);
            let x = DVector::from_iterator(dofs.len(), dofs.iter().map(|&i| w[i]));
            let r = m * x;
            for (i, &g) in dofs.iter().enumerate() {
                y[g] += r[i];
            }
        }
        y
    }

    /// `D w`, one entry per pressure dof.
    pub fn apply_div(&self, spaces: &Spaces, w: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; spaces.q.ndof];
        for (elem, d) in self.div.iter().enumerate() {
            let dofs = spaces.w.element_dofs(elem);
            let x = DVector::from_iterator(dofs.len(), dofs.iter().map(|&i| w[i]));
            let r = d * x;
            for (i, &g) in spaces.q.element_dofs(elem).iter().enumerate() {
                y[g] += r[i];
            }
        }
        y
    }

    /// `Dᵀ p` on the W block.
    pub fn apply_div_t(&self, spaces: &Spaces, p: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; spaces.w.ndof];
        for (elem, d) in self.div.iter().enumerate() {
            let pd = spaces.q.element_dofs(elem);
            let x = DVector::from_iterator(pd.len(), pd.iter().map(|&i| p[i]));
            let r = d.tr_mul(&x);
            for (i, &g) in spaces.w.element_dofs(elem).iter().enumerate() {
                y[g] += r[i];
            }
        }
        y
    }

    /// `∫ p` of a pressure field.
    pub fn pressure_mean(&self, spaces: &Spaces, p: &[f64]) -> f64 {
        (0..self.pressure_mean.len())
            .map(|elem| {
                let pd = spaces.q.element_dofs(elem);
                pd.iter().zip(self.pressure_mean[elem].iter()).map(|(&i, m)| p[i] * m).sum::<f64>()
            })
            .sum()
    }

    /// Dense global viscous matrix on `[W, F]` (small meshes only).
    pub fn dense_viscous(&self, spaces: &Spaces) -> DMatrix<f64> {
        let n = spaces.w.ndof + spaces.facet(self.variant).ndof;
        let mut a = DMatrix::zeros(n, n);
        for (elem, loc) in self.viscous.a.iter().enumerate() {
            let dofs = self.velocity_dofs(spaces, elem);
            for (i, &gi) in dofs.iter().enumerate() {
                for (j, &gj) in dofs.iter().enumerate() {
                    a[(gi, gj)] += loc[(i, j)];
                }
            }
        }
        a
    }
}

/// Load functional `∫ f · v_T` on W.
///
/// Integrated with four degrees more than the matrices since `f` is usually not polynomial.
pub fn assemble_load(spaces: &Spaces, f: &(dyn Fn(Vec2) -> Vec2 + Sync)) -> Vec<f64> {
    let ctx = QuadContext::with_extra(spaces, 0, 4);
    let mesh = &spaces.mesh;
    let local: Vec<Vec<f64>> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|elem| {
            let vt = ctx.vol(mesh.is_curved(elem));
            let signs = spaces.w.element_signs(elem);
            let mut b = vec![0.0; signs.len()];
            for (q, (p, w)) in vt.rule.points.iter().zip(&vt.rule.weights).enumerate() {
                let geo = GeoPoint::at(mesh, elem, *p);
                let (pv, _) = physical_hdiv(&vt.bdm_v[q], &vt.bdm_g[q], &geo);
                let fx = f(geo.x);
                for m in 0..b.len() {
                    b[m] += w * geo.det * signs[m] * (fx[0] * pv[m][0] + fx[1] * pv[m][1]);
                }
            }
            b
        })
        .collect();
    let mut out = vec![0.0; spaces.w.ndof];
    for (elem, b) in local.iter().enumerate() {
        for (i, &g) in spaces.w.element_dofs(elem).iter().enumerate() {
            out[g] += b[i];
        }
    }
    out
}

/// Boundary traction functional `∫ g · v` on labeled facets, split into the W part
/// (normal component) and the facet part (tangential component). `g` receives the point
/// and the outward normal.
pub fn assemble_traction(
    spaces: &Spaces,
    variant: JumpVariant,
    labels: &[&str],
    g: &(dyn Fn(Vec2, Vec2) -> Vec2 + Sync),
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mesh = &spaces.mesh;
    for l in labels {
        if !mesh.has_label(l) {
            return Err(crate::error::Error::MissingLabel(l.to_string()));
        }
    }
    let fsp = spaces.facet(variant);
    let ctx = QuadContext::new(spaces, 0);
    let mut bw = vec![0.0; spaces.w.ndof];
    let mut bf = vec![0.0; fsp.ndof];
    for (&f, label) in &mesh.boundary_markers {
        if !labels.contains(&label.as_str()) {
            continue;
        }
        let facet = &mesh.facets[f];
        let elem = facet.owner;
        let e = facet.local_edges[0];
        let et = ctx.edge(mesh.is_curved(elem));
        let signs = spaces.w.element_signs(elem);
        let wd = spaces.w.element_dofs(elem);
        for (q, (t, w)) in et.rule.points.iter().zip(&et.rule.weights).enumerate() {
            let ep = edge_point(spaces, elem, e, *t, *w);
            let (pv, _) = physical_hdiv(&et.bdm_v[e][q], &et.bdm_g[e][q], &ep.geo);
            let gx = g(ep.geo.x, ep.normal);
            let gn = gx[0] * ep.normal[0] + gx[1] * ep.normal[1];
            let gt = gx[0] * ep.tangent[0] + gx[1] * ep.tangent[1];
            for m in 0..signs.len() {
                let vn = pv[m][0] * ep.normal[0] + pv[m][1] * ep.normal[1];
                bw[wd[m]] += ep.weight * signs[m] * gn * vn;
            }
            let psi = fsp.facet_values(f, ep.s);
            let n = fsp.degree + 1;
            for j in 0..n {
                bf[f * n + j] += ep.weight * gt * psi[j];
            }
        }
    }
    Ok((bw, bf))
}
