//! Error norms and boundary force functionals.

use rayon::prelude::*;

use super::exact::ExactSolution;
use crate::error::{Error, Result};
use crate::fespace::{evaluate_field, FEField, SpaceKind};
use crate::polybasis::{interval_rule, ref_edge, ref_edge_point, triangle_rule};

/// `‖u − u_h‖`, `‖∇(u − u_h)‖` (broken) and `‖p − p_h‖`, all in L².
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ErrorNorms {
    pub l2_velocity: f64,
    pub h1_velocity: f64,
    pub l2_pressure: f64,
}

/// Elementwise quadrature of degree `2k + 4` (`+2g` on curved elements).
pub fn compute_errors(u: &FEField, p: &FEField, exact: &ExactSolution) -> Result<ErrorNorms> {
    if u.space.kind != SpaceKind::Hdiv || p.space.kind != SpaceKind::PressureDG {
        return Err(Error::UnsupportedSpace("errors need an H(div) velocity and a DG pressure".into()));
    }
    if !std::sync::Arc::ptr_eq(&u.space.mesh, &p.space.mesh) {
        return Err(Error::MeshMismatch);
    }
    let mesh = &u.space.mesh;
    let deg = 2 * u.space.degree + 4;
    let affine = triangle_rule(deg);
    let curved = triangle_rule(deg + 2 * mesh.geometry_order);
    let sums = (0..mesh.n_elements())
        .into_par_iter()
        .map(|elem| {
            let rule = if mesh.is_curved(elem) { &curved } else { &affine };
            let mut acc = [0.0; 3];
            for (pt, w) in rule.points.iter().zip(&rule.weights) {
                let uv = evaluate_field(u, elem, *pt)?;
                let pv = evaluate_field(p, elem, *pt)?;
                let (_, _, det) = mesh.geometry_map(elem, *pt);
                let x = uv.x;
                let ue = (exact.velocity)(x);
                let ge = (exact.gradient)(x);
                let pe = (exact.pressure)(x);
                let wd = w * det;
                for i in 0..2 {
                    acc[0] += wd * (ue[i] - uv.value[i]).powi(2);
                    for j in 0..2 {
                        acc[1] += wd * (ge[i][j] - uv.grad[i][j]).powi(2);
                    }
                }
                acc[2] += wd * (pe - pv.value[0]).powi(2);
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold([0.0; 3], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]]);
    Ok(ErrorNorms { l2_velocity: sums[0].sqrt(), h1_velocity: sums[1].sqrt(), l2_pressure: sums[2].sqrt() })
}

/// Drag and lift coefficients `(1/(ū² r)) ∫ (ν ∂u/∂n − p n) · e_{x,y} ds` over the labeled
/// facets, with `n` the unit normal pointing out of the obstacle into the fluid.
pub fn drag_lift(u: &FEField, p: &FEField, label: &str, nu: f64, u_mean: f64, radius: f64) -> Result<(f64, f64)> {
    let mesh = &u.space.mesh;
    let facets = mesh.facets_with_label(label);
    if facets.is_empty() {
        return Err(Error::MissingLabel(label.to_string()));
    }
    let base = 2 * u.space.degree + 2;
    let mut force = [0.0; 2];
    for f in facets {
        let facet = &mesh.facets[f];
        let (elem, e) = (facet.owner, facet.local_edges[0]);
        let curved = mesh.is_curved(elem);
        let rule = interval_rule(if curved { base + 2 * mesh.geometry_order } else { base });
        let (a, b) = ref_edge(e);
        let d = [b[0] - a[0], b[1] - a[1]];
        for (t, w) in rule.points.iter().zip(&rule.weights) {
            let pt = ref_edge_point(e, *t);
            let (_, j, _) = mesh.geometry_map(elem, pt);
            let dx = [j[0][0] * d[0] + j[0][1] * d[1], j[1][0] * d[0] + j[1][1] * d[1]];
            let len = dx[0].hypot(dx[1]);
            // the element's outward normal points into the obstacle
            let n = [-dx[1] / len, dx[0] / len];
            let uv = evaluate_field(u, elem, pt)?;
            let pv = evaluate_field(p, elem, pt)?.value[0];
            for i in 0..2 {
                let dudn = uv.grad[i][0] * n[0] + uv.grad[i][1] * n[1];
                force[i] += w * len * (nu * dudn - pv * n[i]);
            }
        }
    }
    let scale = 1.0 / (u_mean * u_mean * radius);
    Ok((force[0] * scale, force[1] * scale))
}
