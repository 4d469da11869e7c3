//! Triangulations with oriented facets and optional polynomially curved boundary elements.

mod curved;
mod generators;
mod io;
mod refine;

use std::collections::{BTreeMap, HashMap};

pub use curved::{curve_boundary, Circle, CurvedBoundary, CurvedMap, Hessian};
pub use generators::{channel_with_cylinder, generate_structured, obstacle_in_square, ChannelParams};
pub use io::{load_mesh, parse_mesh};
pub use refine::refine_uniform;

use crate::error::{Error, Result};
use crate::{Mat2, Vec2};

/// Edge of the triangulation.
#[derive(Debug, Clone)]
pub struct Facet {
    /// Endpoints in the owner's counterclockwise direction.
    pub vertices: [usize; 2],
    /// Lower-index adjacent element; the normal is outward for it.
    pub owner: usize,
    pub neighbor: Option<usize>,
    /// Local edge index of the facet in owner and neighbor.
    pub local_edges: [usize; 2],
    /// Unit normal of the chord, outward for the owner.
    pub normal: Vec2,
    /// Unit tangent from `vertices[0]` to `vertices[1]`; `normal = (t_y, −t_x)`.
    pub tangent: Vec2,
    /// Chord length.
    pub diameter: f64,
    pub label: Option<String>,
}

impl Facet {
    pub fn is_boundary(&self) -> bool {
        self.neighbor.is_none()
    }

    /// Adjacent elements, owner first.
    pub fn elements(&self) -> Vec<usize> {
        std::iter::once(self.owner).chain(self.neighbor).collect()
    }
}

/// Immutable 2D triangulation.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Vec2>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub facets: Vec<Facet>,
    /// Facet index of each local edge; local edge `e` is opposite local vertex `e`.
    pub element_facets: Vec<[usize; 3]>,
    pub boundary_markers: BTreeMap<usize, String>,
    pub geometry_order: usize,
    pub curved_maps: Vec<Option<CurvedMap>>,
    pub curved_boundaries: Vec<CurvedBoundary>,
}

impl Mesh {
    /// Builds a mesh from vertices, triangles (any orientation) and labeled boundary edges.
    pub fn from_parts(
        vertices: Vec<Vec2>,
        triangles: Vec<[usize; 3]>,
        boundary: &[([usize; 2], String)],
    ) -> Result<Mesh> {
        let nv = vertices.len();
        let mut tris = triangles;
        for (t, tri) in tris.iter_mut().enumerate() {
            if tri.iter().any(|&v| v >= nv) || tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::Topology(format!("triangle {t} has invalid vertex indices")));
            }
            let a = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            let scale = dist(vertices[tri[0]], vertices[tri[1]])
                .max(dist(vertices[tri[1]], vertices[tri[2]]))
                .max(dist(vertices[tri[0]], vertices[tri[2]]));
            if a.abs() <= 1e-14 * scale * scale {
                return Err(Error::InvertedElement(t));
            }
            if a < 0.0 {
                tri.swap(1, 2);
            }
        }
        let mut facets: Vec<Facet> = Vec::new();
        let mut edge_map: HashMap<(usize, usize), usize> = HashMap::new();
        let mut element_facets = Vec::with_capacity(tris.len());
        for (t, tri) in tris.iter().enumerate() {
            let mut ef = [0; 3];
            for e in 0..3 {
                let a = tri[(e + 1) % 3];
                let b = tri[(e + 2) % 3];
                let key = (a.min(b), a.max(b));
                match edge_map.get(&key) {
                    None => {
                        let (pa, pb) = (vertices[a], vertices[b]);
                        let d = dist(pa, pb);
                        let tangent = [(pb[0] - pa[0]) / d, (pb[1] - pa[1]) / d];
                        edge_map.insert(key, facets.len());
                        ef[e] = facets.len();
                        facets.push(Facet {
                            vertices: [a, b],
                            owner: t,
                            neighbor: None,
                            local_edges: [e, usize::MAX],
                            normal: [tangent[1], -tangent[0]],
                            tangent,
                            diameter: d,
                            label: None,
                        });
                    }
                    Some(&f) => {
                        let facet = &mut facets[f];
                        if facet.neighbor.is_some() {
                            return Err(Error::Topology(format!(
                                "edge ({a}, {b}) is shared by more than two triangles"
                            )));
                        }
                        if facet.vertices != [b, a] {
                            return Err(Error::Topology(format!("inconsistent orientation across edge ({a}, {b})")));
                        }
                        facet.neighbor = Some(t);
                        facet.local_edges[1] = e;
                        ef[e] = f;
                    }
                }
            }
            element_facets.push(ef);
        }
        let mut boundary_markers = BTreeMap::new();
        for (edge, label) in boundary {
            let key = (edge[0].min(edge[1]), edge[0].max(edge[1]));
            let f = *edge_map
                .get(&key)
                .ok_or_else(|| Error::Topology(format!("boundary edge {edge:?} is not a mesh edge")))?;
            if !facets[f].is_boundary() {
                return Err(Error::Topology(format!("boundary edge {edge:?} is an interior edge")));
            }
            facets[f].label = Some(label.clone());
            boundary_markers.insert(f, label.clone());
        }
        let ne = tris.len();
        Ok(Mesh {
            vertices,
            triangles: tris,
            facets,
            element_facets,
            boundary_markers,
            geometry_order: 1,
            curved_maps: vec![None; ne],
            curved_boundaries: Vec::new(),
        })
    }

    pub fn n_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn is_curved(&self, elem: usize) -> bool {
        self.curved_maps[elem].is_some()
    }

    /// True if some facet carries the label.
    pub fn has_label(&self, label: &str) -> bool {
        self.boundary_markers.values().any(|l| l == label)
    }

    /// Whether element `elem` owns the facet at its local edge `e`.
    pub fn owns_edge(&self, elem: usize, e: usize) -> bool {
        self.facets[self.element_facets[elem][e]].owner == elem
    }

    /// Affine Jacobian `[v1 − v0, v2 − v0]` of the straight-sided element.
    pub fn affine_jacobian(&self, elem: usize) -> Mat2 {
        let [a, b, c] = self.triangles[elem].map(|v| self.vertices[v]);
        [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]]
    }

    /// Physical point, Jacobian and its determinant at a reference point.
    pub fn geometry_map(&self, elem: usize, p: Vec2) -> (Vec2, Mat2, f64) {
        match &self.curved_maps[elem] {
            Some(m) => {
                let (x, j, _) = m.eval(p, false);
                (x, j, det2(j))
            }
            None => {
                let j = self.affine_jacobian(elem);
                let a = self.vertices[self.triangles[elem][0]];
                let x = [a[0] + j[0][0] * p[0] + j[0][1] * p[1], a[1] + j[1][0] * p[0] + j[1][1] * p[1]];
                (x, j, det2(j))
            }
        }
    }

    /// Like [`Mesh::geometry_map`] plus second derivatives `h[i][k][m] = ∂²x_i/∂x̂_k∂x̂_m`.
    pub fn geometry_map_hessian(&self, elem: usize, p: Vec2) -> (Vec2, Mat2, f64, Hessian) {
        match &self.curved_maps[elem] {
            Some(m) => {
                let (x, j, h) = m.eval(p, true);
                (x, j, det2(j), h)
            }
            None => {
                let (x, j, d) = self.geometry_map(elem, p);
                (x, j, d, [[[0.0; 2]; 2]; 2])
            }
        }
    }

    /// Area of one element by quadrature of `det J`.
    pub fn element_area(&self, elem: usize) -> f64 {
        if self.is_curved(elem) {
            let r = crate::polybasis::triangle_rule(2 * self.geometry_order);
            r.points.iter().zip(&r.weights).map(|(p, w)| w * self.geometry_map(elem, *p).2).sum()
        } else {
            0.5 * det2(self.affine_jacobian(elem))
        }
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_elements()).map(|e| self.element_area(e)).sum()
    }

    /// Minimum height `2|T| / (longest edge)` over all elements, used for CFL bounds.
    pub fn min_height(&self) -> f64 {
        (0..self.n_elements())
            .map(|e| {
                let longest = self.element_facets[e].iter().map(|&f| self.facets[f].diameter).fold(0.0, f64::max);
                2.0 * self.element_area(e) / longest
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Maximum element diameter (longest edge).
    pub fn max_diameter(&self) -> f64 {
        self.facets.iter().map(|f| f.diameter).fold(0.0, f64::max)
    }

    /// Facet indices carrying the label.
    pub fn facets_with_label(&self, label: &str) -> Vec<usize> {
        self.boundary_markers.iter().filter(|(_, l)| *l == label).map(|(f, _)| *f).collect()
    }

    /// Reference point on the local edge `e` of `elem` for the facet's global parameter `s`.
    pub fn facet_ref_point(&self, elem: usize, e: usize, s: f64) -> Vec2 {
        let t = if self.owns_edge(elem, e) { s } else { 1.0 - s };
        crate::polybasis::ref_edge_point(e, t)
    }

    /// Physical point, derivative `dx/ds` and its length along a facet at global parameter `s`.
    pub fn facet_point(&self, f: usize, s: f64) -> (Vec2, Vec2) {
        let facet = &self.facets[f];
        let elem = facet.owner;
        let e = facet.local_edges[0];
        let p = crate::polybasis::ref_edge_point(e, s);
        let (x, j, _) = self.geometry_map(elem, p);
        let (a, b) = crate::polybasis::ref_edge(e);
        let dir = [b[0] - a[0], b[1] - a[1]];
        (x, [j[0][0] * dir[0] + j[0][1] * dir[1], j[1][0] * dir[0] + j[1][1] * dir[1]])
    }
}

pub(crate) fn signed_area(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

pub(crate) fn dist(a: Vec2, b: Vec2) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

pub(crate) fn det2(j: Mat2) -> f64 {
    j[0][0] * j[1][1] - j[0][1] * j[1][0]
}
