//! Hybrid interior-penalty viscous form with full or projected tangential jumps.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::tables::{EdgeTables, VolumeTables};
use super::{FormConfig, Spaces};
use crate::error::{Error, Result};
use crate::fespace::{physical_hdiv, FESpace, GeoPoint};
use crate::polybasis::{ref_edge, ref_edge_point};

/// Element matrices of the viscous form on local dofs `[W (signed), F]`.
///
/// Local F dofs are ordered by local edge, then mode, and use the global facet parameter.
#[derive(Debug, Clone)]
pub struct ViscousBlocks {
    pub facet_degree: usize,
    pub n_w: usize,
    pub a: Vec<DMatrix<f64>>,
}

impl ViscousBlocks {
    pub fn n_local(&self) -> usize {
        self.n_w + 3 * (self.facet_degree + 1)
    }
}

pub(crate) struct QuadContext {
    pub affine_vol: VolumeTables,
    pub curved_vol: Option<VolumeTables>,
    pub affine_edge: EdgeTables,
    pub curved_edge: Option<EdgeTables>,
}

impl QuadContext {
    /// Tables with degree `2k + 2` (plus `2g` on curved elements) and scalar degree `sdeg`.
    pub fn new(spaces: &Spaces, sdeg: usize) -> Self {
        Self::with_extra(spaces, sdeg, 0)
    }

    pub fn with_extra(spaces: &Spaces, sdeg: usize, extra: usize) -> Self {
        let base = 2 * spaces.k + 2 + extra;
        let bdm = spaces.w.bdm().expect("Hdiv space");
        let g = spaces.mesh.geometry_order;
        let curved = (0..spaces.mesh.n_elements()).any(|e| spaces.mesh.is_curved(e));
        QuadContext {
            affine_vol: VolumeTables::new(bdm, sdeg, base),
            curved_vol: curved.then(|| VolumeTables::new(bdm, sdeg, base + 2 * g)),
            affine_edge: EdgeTables::new(bdm, sdeg, base),
            curved_edge: curved.then(|| EdgeTables::new(bdm, sdeg, base + 2 * g)),
        }
    }

    pub fn vol(&self, curved: bool) -> &VolumeTables {
        if curved {
            self.curved_vol.as_ref().expect("curved tables")
        } else {
            &self.affine_vol
        }
    }

    pub fn edge(&self, curved: bool) -> &EdgeTables {
        if curved {
            self.curved_edge.as_ref().expect("curved tables")
        } else {
            &self.affine_edge
        }
    }
}

/// Data of one facet quadrature point seen from an element.
pub(crate) struct EdgePoint {
    /// Quadrature weight times `ds/dt`.
    pub weight: f64,
    /// Global facet parameter.
    pub s: f64,
    /// Outward unit normal of the element.
    pub normal: [f64; 2],
    /// Unit tangent in the facet's global direction.
    pub tangent: [f64; 2],
    pub geo: GeoPoint,
}

pub(crate) fn edge_point(spaces: &Spaces, elem: usize, e: usize, t: f64, w: f64) -> EdgePoint {
    let mesh = &spaces.mesh;
    let p = ref_edge_point(e, t);
    let geo = GeoPoint::at(mesh, elem, p);
    let (a, b) = ref_edge(e);
    let d = [b[0] - a[0], b[1] - a[1]];
    let j = &geo.jac;
    let dx = [j[0][0] * d[0] + j[0][1] * d[1], j[1][0] * d[0] + j[1][1] * d[1]];
    let len = (dx[0] * dx[0] + dx[1] * dx[1]).sqrt();
    let tl = [dx[0] / len, dx[1] / len];
    let owner = mesh.owns_edge(elem, e);
    EdgePoint {
        weight: w * len,
        s: if owner { t } else { 1.0 - t },
        normal: [tl[1], -tl[0]],
        tangent: if owner { tl } else { [-tl[0], -tl[1]] },
        geo,
    }
}

fn volume_part(spaces: &Spaces, ctx: &QuadContext, elem: usize, nu: f64, a: &mut DMatrix<f64>) {
    let mesh = &spaces.mesh;
    let curved = mesh.is_curved(elem);
    let vt = ctx.vol(curved);
    let signs = spaces.w.element_signs(elem);
    let nw = signs.len();
    for (q, (p, w)) in vt.rule.points.iter().zip(&vt.rule.weights).enumerate() {
        let geo = GeoPoint::at(mesh, elem, *p);
        let (_, pg) = physical_hdiv(&vt.bdm_v[q], &vt.bdm_g[q], &geo);
        let c = nu * w * geo.det;
        for m in 0..nw {
            for n in m..nw {
                let g = &pg[m];
                let h = &pg[n];
                let v = c
                    * signs[m]
                    * signs[n]
                    * (g[0][0] * h[0][0] + g[0][1] * h[0][1] + g[1][0] * h[1][0] + g[1][1] * h[1][1]);
                a[(m, n)] += v;
                if n != m {
                    a[(n, m)] += v;
                }
            }
        }
    }
}

/// Jump and normal-derivative vectors at an edge point, W part only (signed).
fn w_traces(spaces: &Spaces, et: &EdgeTables, elem: usize, e: usize, q: usize, ep: &EdgePoint) -> (Vec<f64>, Vec<f64>) {
    let signs = spaces.w.element_signs(elem);
    let (pv, pg) = physical_hdiv(&et.bdm_v[e][q], &et.bdm_g[e][q], &ep.geo);
    let (n, t) = (ep.normal, ep.tangent);
    let jump = pv.iter().zip(signs).map(|(v, s)| s * (v[0] * t[0] + v[1] * t[1])).collect();
    let dn = pg
        .iter()
        .zip(signs)
        .map(|(g, s)| {
            let gn = [g[0][0] * n[0] + g[0][1] * n[1], g[1][0] * n[0] + g[1][1] * n[1]];
            s * (gn[0] * t[0] + gn[1] * t[1])
        })
        .collect();
    (jump, dn)
}

/// Element matrix of the full-jump form with facet degree `fspace.degree`.
pub(crate) fn full_element(
    spaces: &Spaces,
    ctx: &QuadContext,
    cfg: &FormConfig,
    fspace: &FESpace,
    elem: usize,
) -> DMatrix<f64> {
    let mesh = &spaces.mesh;
    let nw = spaces.w.dofs_per_element();
    let nfm = fspace.degree + 1;
    let n = nw + 3 * nfm;
    let mut a = DMatrix::zeros(n, n);
    volume_part(spaces, ctx, elem, cfg.nu, &mut a);
    let et = ctx.edge(mesh.is_curved(elem));
    for e in 0..3 {
        let f = mesh.element_facets[elem][e];
        let h = mesh.facets[f].diameter;
        for (q, (t, w)) in et.rule.points.iter().zip(&et.rule.weights).enumerate() {
            let ep = edge_point(spaces, elem, e, *t, *w);
            let (jw, dw) = w_traces(spaces, et, elem, e, q, &ep);
            let mut ja = DVector::zeros(n);
            let mut db = DVector::zeros(n);
            for m in 0..nw {
                ja[m] = jw[m];
                db[m] = dw[m];
            }
            let psi = fspace.facet_values(f, ep.s);
            for j in 0..nfm {
                ja[nw + e * nfm + j] = -psi[j];
            }
            let c = cfg.nu * ep.weight;
            a.ger(-c, &db, &ja, 1.0);
            a.ger(-c, &ja, &db, 1.0);
            a.ger(c * cfg.alpha / h, &ja, &ja, 1.0);
        }
    }
    a
}

/// Element matrix of the projected-jump form assembled with an explicit facet L² projection
/// onto degree `k − 1` (facet dofs of degree `k − 1`).
pub(crate) fn projected_element(spaces: &Spaces, ctx: &QuadContext, cfg: &FormConfig, elem: usize) -> DMatrix<f64> {
    let mesh = &spaces.mesh;
    let k = spaces.k;
    let fspace = &spaces.f_reduced;
    let nw = spaces.w.dofs_per_element();
    let n = nw + 3 * k;
    let mut a = DMatrix::zeros(n, n);
    volume_part(spaces, ctx, elem, cfg.nu, &mut a);
    let et = ctx.edge(mesh.is_curved(elem));
    for e in 0..3 {
        let f = mesh.element_facets[elem][e];
        let h = mesh.facets[f].diameter;
        // moments against ψ_i, i < k, of the normal-derivative term and of the jump
        let mut bmom = vec![DVector::zeros(n); k];
        let mut pj = vec![DVector::zeros(n); k];
        let mut length = 0.0;
        for (q, (t, w)) in et.rule.points.iter().zip(&et.rule.weights).enumerate() {
            let ep = edge_point(spaces, elem, e, *t, *w);
            let (jw, dw) = w_traces(spaces, et, elem, e, q, &ep);
            let psi = fspace.facet_values(f, ep.s);
            length += ep.weight;
            for i in 0..k {
                let c = ep.weight * psi[i];
                for m in 0..nw {
                    bmom[i][m] += c * dw[m];
                    pj[i][m] += c * jw[m];
                }
            }
        }
        for i in 0..k {
            for m in 0..nw {
                pj[i][m] /= length;
            }
            pj[i][nw + e * k + i] = -1.0;
        }
        for i in 0..k {
            a.ger(-cfg.nu, &bmom[i], &pj[i], 1.0);
            a.ger(-cfg.nu, &pj[i], &bmom[i], 1.0);
            a.ger(cfg.nu * cfg.alpha / h * length, &pj[i], &pj[i], 1.0);
        }
    }
    a
}

/// Viscous element matrices with full jumps and degree-`k` facet unknowns.
pub fn assemble_viscous(spaces: &Spaces, cfg: &FormConfig) -> Result<ViscousBlocks> {
    cfg.validate()?;
    let ctx = QuadContext::new(spaces, 0);
    let a = (0..spaces.mesh.n_elements())
        .into_par_iter()
        .map(|e| full_element(spaces, &ctx, cfg, &spaces.f_full, e))
        .collect();
    Ok(ViscousBlocks { facet_degree: spaces.k, n_w: spaces.w.dofs_per_element(), a })
}

/// Projected-jump element matrices built directly with the facet L² projection.
pub fn assemble_viscous_projected_explicit(spaces: &Spaces, cfg: &FormConfig) -> Result<ViscousBlocks> {
    cfg.validate()?;
    let ctx = QuadContext::new(spaces, 0);
    let a = (0..spaces.mesh.n_elements()).into_par_iter().map(|e| projected_element(spaces, &ctx, cfg, e)).collect();
    Ok(ViscousBlocks { facet_degree: spaces.k - 1, n_w: spaces.w.dofs_per_element(), a })
}

/// Eliminates the per-element copies of the top facet mode by a local Schur complement.
pub fn realize_projected_jumps(full: &ViscousBlocks) -> Result<ViscousBlocks> {
    let k = full.facet_degree;
    if k == 0 {
        return Err(Error::DegreeMismatch("projected jumps need facet degree ≥ 1".into()));
    }
    let nw = full.n_w;
    let lam: Vec<usize> = (0..3).map(|e| nw + e * (k + 1) + k).collect();
    let keep: Vec<usize> = (0..full.n_local()).filter(|i| !lam.contains(i)).collect();
    let a = full
        .a
        .par_iter()
        .enumerate()
        .map(|(elem, a)| {
            let all = a.select_rows(&keep);
            let arr = all.select_columns(&keep);
            let arl = all.select_columns(&lam);
            let all_l = a.select_rows(&lam);
            let all_ll = all_l.select_columns(&lam);
            let alr = all_l.select_columns(&keep);
            let chol = all_ll.cholesky().ok_or(Error::SingularInteriorBlock(elem))?;
            let mut s = arr - &arl * chol.solve(&alr);
            // exact symmetry
            let st = s.transpose();
            s = (s + st) * 0.5;
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ViscousBlocks { facet_degree: k - 1, n_w: nw, a })
}
