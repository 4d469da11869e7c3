//! Polynomial geometry maps for elements touching circular boundary arcs.

use nalgebra::{DMatrix, DVector};

use super::{det2, Mesh};
use crate::error::{Error, Result};
use crate::{Mat2, Vec2};

/// Second derivatives `h[i][k][m] = ∂²x_i / ∂x̂_k ∂x̂_m`.
pub type Hessian = [[[f64; 2]; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Vec2,
    pub radius: f64,
}

impl Circle {
    pub fn angle(&self, p: Vec2) -> f64 {
        (p[1] - self.center[1]).atan2(p[0] - self.center[0])
    }

    pub fn point(&self, theta: f64) -> Vec2 {
        [self.center[0] + self.radius * theta.cos(), self.center[1] + self.radius * theta.sin()]
    }

    /// Radial projection onto the circle.
    pub fn project(&self, p: Vec2) -> Vec2 {
        self.point(self.angle(p))
    }

    pub fn distance(&self, p: Vec2) -> f64 {
        (((p[0] - self.center[0]).powi(2) + (p[1] - self.center[1]).powi(2)).sqrt() - self.radius).abs()
    }
}

/// Boundary label whose facets follow a circle.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvedBoundary {
    pub label: String,
    pub circle: Circle,
}

/// Degree-`g` map `x̂ ↦ Σ c_ij x̂^i ŷ^j` stored in monomial form.
#[derive(Debug, Clone)]
pub struct CurvedMap {
    pub order: usize,
    exponents: Vec<(usize, usize)>,
    coeffs: Vec<Vec2>,
}

fn monomials(g: usize) -> Vec<(usize, usize)> {
    let mut m = Vec::new();
    for d in 0..=g {
        for j in 0..=d {
            m.push((d - j, j));
        }
    }
    m
}

impl CurvedMap {
    /// Interpolates the given physical positions of the equispaced lattice nodes
    /// `(i/g, j/g)`, enumerated with `j` outer and `i` inner.
    fn interpolate(g: usize, nodes: &[Vec2], positions: &[Vec2]) -> CurvedMap {
        let exponents = monomials(g);
        let n = exponents.len();
        let mut v = DMatrix::zeros(n, n);
        for (r, p) in nodes.iter().enumerate() {
            for (c, &(i, j)) in exponents.iter().enumerate() {
                v[(r, c)] = p[0].powi(i as i32) * p[1].powi(j as i32);
            }
        }
        let lu = v.lu();
        let bx = DVector::from_iterator(n, positions.iter().map(|p| p[0]));
        let by = DVector::from_iterator(n, positions.iter().map(|p| p[1]));
        let cx = lu.solve(&bx).expect("lattice Vandermonde is nonsingular");
        let cy = lu.solve(&by).expect("lattice Vandermonde is nonsingular");
        let coeffs = (0..n).map(|i| [cx[i], cy[i]]).collect();
        CurvedMap { order: g, exponents, coeffs }
    }

    /// Position, Jacobian and (if requested) second derivatives at a reference point.
    pub fn eval(&self, p: Vec2, hessian: bool) -> (Vec2, Mat2, Hessian) {
        let g = self.order;
        let mut px = vec![1.0; g + 1];
        let mut py = vec![1.0; g + 1];
        for i in 1..=g {
            px[i] = px[i - 1] * p[0];
            py[i] = py[i - 1] * p[1];
        }
        let pw = |v: &[f64], e: isize| if e < 0 { 0.0 } else { v[e as usize] };
        let mut x = [0.0; 2];
        let mut j = [[0.0; 2]; 2];
        let mut h = [[[0.0; 2]; 2]; 2];
        for (&(a, b), c) in self.exponents.iter().zip(&self.coeffs) {
            let (ai, bi) = (a as isize, b as isize);
            let (af, bf) = (a as f64, b as f64);
            let m = px[a] * py[b];
            let mx = af * pw(&px, ai - 1) * py[b];
            let my = bf * px[a] * pw(&py, bi - 1);
            for i in 0..2 {
                x[i] += c[i] * m;
                j[i][0] += c[i] * mx;
                j[i][1] += c[i] * my;
            }
            if hessian {
                let mxx = af * (af - 1.0) * pw(&px, ai - 2) * py[b];
                let mxy = af * bf * pw(&px, ai - 1) * pw(&py, bi - 1);
                let myy = bf * (bf - 1.0) * px[a] * pw(&py, bi - 2);
                for i in 0..2 {
                    h[i][0][0] += c[i] * mxx;
                    h[i][0][1] += c[i] * mxy;
                    h[i][1][0] += c[i] * mxy;
                    h[i][1][1] += c[i] * myy;
                }
            }
        }
        (x, j, h)
    }
}

/// Curves all facets with `label` onto `circle` using degree-`g` element maps.
///
/// Interior lattice nodes are displaced by blending the edge displacements with
/// weights `(λ_a + λ_b)²`, so only elements touching the arc are affected.
pub fn curve_boundary(mesh: &Mesh, label: &str, circle: Circle, g: usize) -> Result<Mesh> {
    if g < 1 {
        return Err(Error::InvalidGeometryOrder(g));
    }
    let facets = mesh.facets_with_label(label);
    if facets.is_empty() {
        return Err(Error::MissingLabel(label.to_string()));
    }
    for &f in &facets {
        for &v in &mesh.facets[f].vertices {
            let d = circle.distance(mesh.vertices[v]);
            if d > 1e-8 * circle.radius {
                return Err(Error::NotOnCircle { vertex: v, distance: d });
            }
        }
    }
    let mut out = mesh.clone();
    out.curved_boundaries.retain(|c| c.label != label);
    out.curved_boundaries.push(CurvedBoundary { label: label.to_string(), circle });
    out.geometry_order = g;
    recurve(&mut out)?;
    Ok(out)
}

/// Rebuilds all element maps from the recorded curved boundaries.
pub(crate) fn recurve(mesh: &mut Mesh) -> Result<()> {
    let g = mesh.geometry_order;
    mesh.curved_maps = vec![None; mesh.n_elements()];
    if g == 1 {
        return Ok(());
    }
    let mut curved_edges: Vec<Vec<(usize, Circle)>> = vec![Vec::new(); mesh.n_elements()];
    for cb in &mesh.curved_boundaries {
        for f in mesh.facets_with_label(&cb.label) {
            let facet = &mesh.facets[f];
            curved_edges[facet.owner].push((facet.local_edges[0], cb.circle));
        }
    }
    let mut nodes = Vec::new();
    for j in 0..=g {
        for i in 0..=g - j {
            nodes.push([i as f64 / g as f64, j as f64 / g as f64]);
        }
    }
    let check = crate::polybasis::triangle_rule(2 * g);
    for (elem, edges) in curved_edges.iter().enumerate() {
        if edges.is_empty() {
            continue;
        }
        let tri = mesh.triangles[elem];
        let vx = tri.map(|v| mesh.vertices[v]);
        let positions: Vec<Vec2> = nodes
            .iter()
            .map(|p| {
                let lam = [1.0 - p[0] - p[1], p[0], p[1]];
                let mut x = [0.0; 2];
                for v in 0..3 {
                    x[0] += lam[v] * vx[v][0];
                    x[1] += lam[v] * vx[v][1];
                }
                for &(e, circle) in edges {
                    let (ia, ib) = ((e + 1) % 3, (e + 2) % 3);
                    let sum = lam[ia] + lam[ib];
                    if sum <= 1e-14 {
                        continue;
                    }
                    let s = lam[ib] / sum;
                    let d = edge_displacement(vx[ia], vx[ib], circle, s);
                    x[0] += sum * sum * d[0];
                    x[1] += sum * sum * d[1];
                }
                x
            })
            .collect();
        let map = CurvedMap::interpolate(g, &nodes, &positions);
        let bad = check
            .points
            .iter()
            .chain(crate::polybasis::bdm::REF_VERTICES.iter())
            .any(|p| det2(map.eval(*p, false).1) <= 0.0);
        if bad {
            return Err(Error::InvertedElement(elem));
        }
        mesh.curved_maps[elem] = Some(map);
    }
    Ok(())
}

fn edge_displacement(a: Vec2, b: Vec2, circle: Circle, s: f64) -> Vec2 {
    let ta = circle.angle(a);
    let mut dt = circle.angle(b) - ta;
    if dt > std::f64::consts::PI {
        dt -= 2.0 * std::f64::consts::PI;
    } else if dt <= -std::f64::consts::PI {
        dt += 2.0 * std::f64::consts::PI;
    }
    let c = circle.point(ta + s * dt);
    [c[0] - (a[0] + s * (b[0] - a[0])), c[1] - (a[1] + s * (b[1] - a[1]))]
}
