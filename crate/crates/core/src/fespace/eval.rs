use std::io::Write;

use super::{FEField, SpaceKind};
use crate::error::{Error, Result};
use crate::mesh2d::{Hessian, Mesh};
use crate::polybasis::{dubiner, dubiner_dim, triangle_rule};
use crate::{Mat2, Vec2};

/// Geometry of an element at one reference point.
#[derive(Debug, Clone, Copy)]
pub struct GeoPoint {
    pub x: Vec2,
    pub jac: Mat2,
    pub det: f64,
    pub jinv: Mat2,
    /// Map second derivatives, present on curved elements.
    pub hess: Option<Hessian>,
}

impl GeoPoint {
    pub fn at(mesh: &Mesh, elem: usize, p: Vec2) -> GeoPoint {
        let (x, jac, det, h) = mesh.geometry_map_hessian(elem, p);
        let jinv = [[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]];
        GeoPoint { x, jac, det, jinv, hess: mesh.is_curved(elem).then_some(h) }
    }

    /// Contravariant Piola image `J v̂ / det J`.
    pub fn piola(&self, v: Vec2) -> Vec2 {
        let j = &self.jac;
        [(j[0][0] * v[0] + j[0][1] * v[1]) / self.det, (j[1][0] * v[0] + j[1][1] * v[1]) / self.det]
    }

    /// Physical gradient `J^{-T} ∇̂φ̂` of a scalar.
    pub fn grad(&self, g: Vec2) -> Vec2 {
        let a = &self.jinv;
        [a[0][0] * g[0] + a[1][0] * g[1], a[0][1] * g[0] + a[1][1] * g[1]]
    }
}

/// Piola-mapped values and physical gradients of reference vector fields.
pub fn physical_hdiv(vals: &[Vec2], grads: &[Mat2], geo: &GeoPoint) -> (Vec<Vec2>, Vec<Mat2>) {
    let j = &geo.jac;
    let d = geo.det;
    let ji = &geo.jinv;
    let dd = geo.hess.map(|h| {
        [0, 1].map(|m| h[0][0][m] * j[1][1] + j[0][0] * h[1][1][m] - h[0][1][m] * j[1][0] - j[0][1] * h[1][0][m])
    });
    let mut pv = Vec::with_capacity(vals.len());
    let mut pg = Vec::with_capacity(vals.len());
    for (v, g) in vals.iter().zip(grads) {
        let jv = [j[0][0] * v[0] + j[0][1] * v[1], j[1][0] * v[0] + j[1][1] * v[1]];
        // reference derivatives of J v̂ / d
        let mut r = [[0.0; 2]; 2];
        for i in 0..2 {
            for m in 0..2 {
                let mut s = j[i][0] * g[0][m] + j[i][1] * g[1][m];
                if let Some(h) = &geo.hess {
                    s += h[i][0][m] * v[0] + h[i][1][m] * v[1];
                }
                r[i][m] = s / d;
                if let Some(dd) = &dd {
                    r[i][m] -= jv[i] * dd[m] / (d * d);
                }
            }
        }
        let mut grad = [[0.0; 2]; 2];
        for i in 0..2 {
            for c in 0..2 {
                grad[i][c] = r[i][0] * ji[0][c] + r[i][1] * ji[1][c];
            }
        }
        pv.push([jv[0] / d, jv[1] / d]);
        pg.push(grad);
    }
    (pv, pg)
}

/// Physical gradients of reference scalar functions.
pub fn physical_scalar_grads(grads: &[Vec2], geo: &GeoPoint) -> Vec<Vec2> {
    grads.iter().map(|g| geo.grad(*g)).collect()
}

/// Field value at a point. Scalars use `value[0]` and `grad[0]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldValue {
    pub x: Vec2,
    pub value: Vec2,
    pub grad: Mat2,
    pub div: f64,
}

/// Evaluates a field at a reference point of an element.
pub fn evaluate_field(field: &FEField, elem: usize, p: Vec2) -> Result<FieldValue> {
    let space = &field.space;
    let mesh = &space.mesh;
    let geo = GeoPoint::at(mesh, elem, p);
    let c = space.gather(elem, &field.coeffs);
    let mut out = FieldValue { x: geo.x, ..Default::default() };
    match space.kind {
        SpaceKind::Hdiv => {
            let bdm = space.bdm().expect("Hdiv space has a BDM basis");
            let (v, g) = bdm.eval(p);
            let (pv, pg) = physical_hdiv(&v, &g, &geo);
            for m in 0..c.len() {
                for i in 0..2 {
                    out.value[i] += c[m] * pv[m][i];
                    for j in 0..2 {
                        out.grad[i][j] += c[m] * pg[m][i][j];
                    }
                }
                out.div += c[m] * (g[m][0][0] + g[m][1][1]) / geo.det;
            }
        }
        SpaceKind::VectorDG | SpaceKind::PressureDG => {
            let nd = dubiner_dim(space.degree);
            let (phi, dphi) = dubiner(space.degree, p);
            let comps = if space.kind == SpaceKind::VectorDG { 2 } else { 1 };
            for comp in 0..comps {
                for i in 0..nd {
                    let a = c[comp * nd + i];
                    let g = geo.grad(dphi[i]);
                    out.value[comp] += a * phi[i];
                    out.grad[comp][0] += a * g[0];
                    out.grad[comp][1] += a * g[1];
                }
            }
            if comps == 2 {
                out.div = out.grad[0][0] + out.grad[1][1];
            }
        }
        SpaceKind::FacetTan => {
            return Err(Error::UnsupportedSpace("facet fields have no element values".into()));
        }
    }
    Ok(out)
}

fn hdiv_samples(field: &FEField, degree: usize, mut f: impl FnMut(Vec2, f64)) {
    let space = &field.space;
    let bdm = space.bdm().expect("Hdiv space has a BDM basis");
    let rule = triangle_rule(degree);
    let tables: Vec<(Vec<Vec2>, Vec<f64>)> = rule
        .points
        .iter()
        .map(|p| {
            let (v, g) = bdm.eval(*p);
            (v, g.iter().map(|g| g[0][0] + g[1][1]).collect())
        })
        .collect();
    for elem in 0..space.mesh.n_elements() {
        let c = space.gather(elem, &field.coeffs);
        for (q, p) in rule.points.iter().enumerate() {
            let geo = GeoPoint::at(&space.mesh, elem, *p);
            let (v, dv) = &tables[q];
            let mut u = [0.0; 2];
            let mut div = 0.0;
            for m in 0..c.len() {
                u[0] += c[m] * v[m][0];
                u[1] += c[m] * v[m][1];
                div += c[m] * dv[m];
            }
            f(geo.piola(u), div / geo.det);
        }
    }
}

/// Maximum of `|div u_T|` over a degree-2k quadrature on every element.
pub fn max_divergence(field: &FEField) -> f64 {
    assert_eq!(field.space.kind, SpaceKind::Hdiv, "max_divergence needs an Hdiv field");
    let mut m: f64 = 0.0;
    hdiv_samples(field, 2 * field.space.degree, |_, d| m = m.max(d.abs()));
    m
}

/// Maximum of `|u_T|` over the same points as [`max_divergence`].
pub fn max_velocity(field: &FEField) -> f64 {
    assert_eq!(field.space.kind, SpaceKind::Hdiv, "max_velocity needs an Hdiv field");
    let mut m: f64 = 0.0;
    hdiv_samples(field, 2 * field.space.degree, |u, _| m = m.max((u[0] * u[0] + u[1] * u[1]).sqrt()));
    m
}

/// Writes `elem,xr,yr,x,y,v0,v1` rows on a uniform reference lattice with `n` subdivisions.
pub fn write_field_dump(out: &mut impl Write, field: &FEField, n: usize) -> Result<()> {
    writeln!(out, "elem,xr,yr,x,y,v0,v1")?;
    let n = n.max(1);
    for elem in 0..field.space.mesh.n_elements() {
        for j in 0..=n {
            for i in 0..=n - j {
                let p = [i as f64 / n as f64, j as f64 / n as f64];
                let v = evaluate_field(field, elem, p)?;
                writeln!(out, "{elem},{},{},{},{},{},{}", p[0], p[1], v.x[0], v.x[1], v.value[0], v.value[1])?;
            }
        }
    }
    Ok(())
}
