use std::collections::HashMap;

use super::curved::recurve;
use super::Mesh;
use crate::error::Result;

/// Splits every triangle into four by connecting edge midpoints.
///
/// Midpoints of facets on recorded circular boundaries are projected onto the circle
/// and the curved element maps are rebuilt with the same geometry order.
pub fn refine_uniform(mesh: &Mesh) -> Result<Mesh> {
    let mut vertices = mesh.vertices.clone();
    let mut midpoint: HashMap<usize, usize> = HashMap::with_capacity(mesh.n_facets());
    for (f, facet) in mesh.facets.iter().enumerate() {
        let [a, b] = facet.vertices.map(|v| mesh.vertices[v]);
        let mut m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        if let Some(label) = &facet.label {
            if let Some(cb) = mesh.curved_boundaries.iter().find(|c| &c.label == label) {
                m = cb.circle.project(m);
            }
        }
        midpoint.insert(f, vertices.len());
        vertices.push(m);
    }
    let mut triangles = Vec::with_capacity(4 * mesh.n_elements());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        // local edge e is opposite vertex e
        let ef = mesh.element_facets[t];
        let m0 = midpoint[&ef[0]];
        let m1 = midpoint[&ef[1]];
        let m2 = midpoint[&ef[2]];
        let [v0, v1, v2] = *tri;
        triangles.push([v0, m2, m1]);
        triangles.push([m2, v1, m0]);
        triangles.push([m1, m0, v2]);
        triangles.push([m0, m1, m2]);
    }
    let mut boundary = Vec::new();
    for (&f, label) in &mesh.boundary_markers {
        let [a, b] = mesh.facets[f].vertices;
        let m = midpoint[&f];
        boundary.push(([a, m], label.clone()));
        boundary.push(([m, b], label.clone()));
    }
    let mut out = Mesh::from_parts(vertices, triangles, &boundary)?;
    out.geometry_order = mesh.geometry_order;
    out.curved_boundaries = mesh.curved_boundaries.clone();
    recurve(&mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh2d::generate_structured;

    #[test]
    fn counts_and_area() {
        let m = generate_structured((0.0, 0.0, 1.0, 1.0), 1, 1).unwrap();
        let r = refine_uniform(&m).unwrap();
        assert_eq!(r.n_elements(), 8);
        assert_eq!(r.n_facets(), 16);
        assert!((r.total_area() - 1.0).abs() < 1e-15);
        let rr = refine_uniform(&r).unwrap();
        assert_eq!(rr.n_elements(), 32);
        assert_eq!(rr.boundary_markers.len(), 16);
        let hmax = m.max_diameter();
        assert!((r.max_diameter() - 0.5 * hmax).abs() < 1e-15);
    }
}
