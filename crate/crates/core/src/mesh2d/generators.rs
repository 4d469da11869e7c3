//! Built-in mesh generators: structured rectangles and O-grids around circular obstacles.

use std::collections::HashMap;

use super::curved::{curve_boundary, Circle};
use super::Mesh;
use crate::error::{Error, Result};
use crate::Vec2;

/// `2·nx·ny` triangles on a rectangle, each cell cut along its rising diagonal.
/// Boundary labels: `bottom`, `right`, `top`, `left`.
pub fn generate_structured(rect: (f64, f64, f64, f64), nx: usize, ny: usize) -> Result<Mesh> {
    let (x0, y0, x1, y1) = rect;
    if nx == 0 || ny == 0 || !(x1 > x0) || !(y1 > y0) {
        return Err(Error::DegenerateRectangle);
    }
    let xs: Vec<f64> = (0..=nx).map(|i| x0 + (x1 - x0) * i as f64 / nx as f64).collect();
    let ys: Vec<f64> = (0..=ny).map(|j| y0 + (y1 - y0) * j as f64 / ny as f64).collect();
    tensor_mesh(&xs, &ys, |_, _| true, &|a, b| side_label(a, b, rect))
}

fn side_label(a: Vec2, b: Vec2, rect: (f64, f64, f64, f64)) -> String {
    let (x0, y0, x1, y1) = rect;
    let tol = 1e-10 * ((x1 - x0) + (y1 - y0));
    let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    if (m[1] - y0).abs() < tol {
        "bottom"
    } else if (m[0] - x1).abs() < tol {
        "right"
    } else if (m[1] - y1).abs() < tol {
        "top"
    } else {
        "left"
    }
    .to_string()
}

/// Deduplicates vertices by position.
#[derive(Default)]
struct VertexPool {
    vertices: Vec<Vec2>,
    index: HashMap<(i64, i64), usize>,
}

impl VertexPool {
    fn add(&mut self, p: Vec2) -> usize {
        let key = ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64);
        *self.index.entry(key).or_insert_with(|| {
            self.vertices.push(p);
            self.vertices.len() - 1
        })
    }
}

fn tensor_cells(
    pool: &mut VertexPool,
    triangles: &mut Vec<[usize; 3]>,
    xs: &[f64],
    ys: &[f64],
    keep: impl Fn(usize, usize) -> bool,
) {
    for j in 0..ys.len() - 1 {
        for i in 0..xs.len() - 1 {
            if !keep(i, j) {
                continue;
            }
            let a = pool.add([xs[i], ys[j]]);
            let b = pool.add([xs[i + 1], ys[j]]);
            let c = pool.add([xs[i + 1], ys[j + 1]]);
            let d = pool.add([xs[i], ys[j + 1]]);
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
}

fn tensor_mesh(
    xs: &[f64],
    ys: &[f64],
    keep: impl Fn(usize, usize) -> bool,
    label: &dyn Fn(Vec2, Vec2) -> String,
) -> Result<Mesh> {
    let mut pool = VertexPool::default();
    let mut triangles = Vec::new();
    tensor_cells(&mut pool, &mut triangles, xs, ys, keep);
    finish(pool.vertices, triangles, label)
}

/// Labels every boundary edge with `label(a, b)` and builds the mesh.
fn finish(vertices: Vec<Vec2>, triangles: Vec<[usize; 3]>, label: &dyn Fn(Vec2, Vec2) -> String) -> Result<Mesh> {
    let mut count: HashMap<(usize, usize), (usize, [usize; 2])> = HashMap::new();
    let mut order = Vec::new();
    for tri in &triangles {
        for e in 0..3 {
            let (a, b) = (tri[(e + 1) % 3], tri[(e + 2) % 3]);
            let key = (a.min(b), a.max(b));
            let entry = count.entry(key).or_insert_with(|| {
                order.push(key);
                (0, [a, b])
            });
            entry.0 += 1;
        }
    }
    let boundary: Vec<([usize; 2], String)> = order
        .iter()
        .filter(|k| count[k].0 == 1)
        .map(|k| {
            let e = count[k].1;
            (e, label(vertices[e[0]], vertices[e[1]]))
        })
        .collect();
    Mesh::from_parts(vertices, triangles, &boundary)
}

/// O-grid ring between a circle and an axis-aligned square, as a list of triangles.
///
/// `square` is `(x0, y0, x1, y1)`; each side carries `n_side` equal segments. Radial
/// node positions follow `fractions` (increasing from 0 to 1).
fn ring(
    pool: &mut VertexPool,
    triangles: &mut Vec<[usize; 3]>,
    square: (f64, f64, f64, f64),
    n_side: usize,
    circle: Circle,
    fractions: &[f64],
) {
    let (x0, y0, x1, y1) = square;
    let corners = [[x1, y0], [x1, y1], [x0, y1], [x0, y0]];
    let mut outer = Vec::with_capacity(4 * n_side);
    for s in 0..4 {
        let (a, b) = (corners[s], corners[(s + 1) % 4]);
        for i in 0..n_side {
            let t = i as f64 / n_side as f64;
            outer.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    let n = outer.len();
    let last = fractions.len() - 1;
    // odd interior layers are shifted by half a segment so that no triangle has a
    // small angle next to the curved boundary
    let shifted = |l: usize| l % 2 == 1 && l < last;
    let mut idx = vec![vec![0usize; n]; fractions.len()];
    for p in 0..n {
        let o = outer[p];
        let next = outer[(p + 1) % n];
        let mid = [0.5 * (o[0] + next[0]), 0.5 * (o[1] + next[1])];
        for (l, f) in fractions.iter().enumerate() {
            let o = if shifted(l) { mid } else { o };
            let inner = circle.project(o);
            let pt = if l == last { o } else { [inner[0] + f * (o[0] - inner[0]), inner[1] + f * (o[1] - inner[1])] };
            idx[l][p] = pool.add(pt);
        }
    }
    for l in 0..last {
        for p in 0..n {
            let q = (p + 1) % n;
            let (lp, lq, up, uq) = (idx[l][p], idx[l][q], idx[l + 1][p], idx[l + 1][q]);
            match (shifted(l), shifted(l + 1)) {
                (false, true) => {
                    triangles.push([lp, lq, up]);
                    triangles.push([lq, uq, up]);
                }
                (true, false) => {
                    triangles.push([lp, uq, up]);
                    triangles.push([lp, lq, uq]);
                }
                _ => {
                    triangles.push([lp, up, uq]);
                    triangles.push([lp, uq, lq]);
                }
            }
        }
    }
}

/// Unit-style obstacle problem domain: the square `[−h, h]²` minus a centered disk.
///
/// O-grid with `n_side` segments per square side and `n_layers` uniform radial layers
/// (`8·n_side·n_layers` triangles). Labels: `obstacle`, `left`, `right`, `bottom`, `top`.
/// The obstacle facets are curved with geometry order `g`.
pub fn obstacle_in_square(half: f64, radius: f64, n_side: usize, n_layers: usize, g: usize) -> Result<Mesh> {
    if !(half > radius && radius > 0.0) || n_side == 0 || n_layers == 0 {
        return Err(Error::DegenerateRectangle);
    }
    let circle = Circle { center: [0.0, 0.0], radius };
    let fractions: Vec<f64> = (0..=n_layers).map(|l| l as f64 / n_layers as f64).collect();
    let mut pool = VertexPool::default();
    let mut triangles = Vec::new();
    ring(&mut pool, &mut triangles, (-half, -half, half, half), n_side, circle, &fractions);
    let rect = (-half, -half, half, half);
    let label = move |a: Vec2, b: Vec2| {
        if circle.distance(a) < 1e-9 && circle.distance(b) < 1e-9 {
            "obstacle".to_string()
        } else {
            side_label(a, b, rect)
        }
    };
    let mesh = finish(pool.vertices, triangles, &label)?;
    curve_boundary(&mesh, "obstacle", circle, g)
}

/// Parameters of the channel-with-cylinder mesh.
#[derive(Debug, Clone)]
pub struct ChannelParams {
    pub length: f64,
    pub height: f64,
    pub center: Vec2,
    pub radius: f64,
    /// Half-width of the square block holding the O-grid.
    pub block_half: f64,
    /// Cells per block side; the cylinder gets `4·n_block` arc segments.
    pub n_block: usize,
    /// Radial node fractions of the O-grid, increasing from 0 to 1.
    pub layer_fractions: Vec<f64>,
    /// Downstream cells (geometric grading starting at the block cell size).
    pub n_downstream: usize,
    pub geometry_order: usize,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            length: 2.2,
            height: 0.41,
            center: [0.2, 0.2],
            radius: 0.05,
            block_half: 0.1,
            n_block: 4,
            layer_fractions: vec![0.0, 0.12, 0.35, 1.0],
            n_downstream: 18,
            geometry_order: 3,
        }
    }
}

/// Channel `[0, L] × [0, H]` around a cylinder: tensor grid outside a square block,
/// an anisotropic O-grid inside it. Labels: `inflow`, `outflow`, `wall`, `obstacle`.
pub fn channel_with_cylinder(p: &ChannelParams) -> Result<Mesh> {
    let (cx, cy) = (p.center[0], p.center[1]);
    let b = p.block_half;
    let (bx0, bx1, by0, by1) = (cx - b, cx + b, cy - b, cy + b);
    if !(bx0 > 0.0 && by0 > 0.0 && bx1 < p.length && by1 < p.height && p.radius < b) || p.n_block == 0 {
        return Err(Error::DegenerateRectangle);
    }
    let hb = 2.0 * b / p.n_block as f64;
    let fill = |a: f64, z: f64| -> Vec<f64> {
        let n = ((z - a) / hb).round().max(1.0) as usize;
        (0..=n).map(|i| a + (z - a) * i as f64 / n as f64).collect()
    };
    let mut xs = fill(0.0, bx0);
    xs.pop();
    xs.extend((0..=p.n_block).map(|i| bx0 + hb * i as f64));
    // geometric grading downstream with first cell ≈ hb
    let span = p.length - bx1;
    let n = p.n_downstream.max(1);
    let ratio = grading_ratio(hb, span, n);
    let mut x = bx1;
    let mut h =
        span * if (ratio - 1.0).abs() < 1e-12 { 1.0 / n as f64 } else { (ratio - 1.0) / (ratio.powi(n as i32) - 1.0) };
    for i in 0..n {
        x += h;
        h *= ratio;
        xs.push(if i + 1 == n { p.length } else { x });
    }
    let mut ys = fill(0.0, by0);
    ys.pop();
    ys.extend((0..=p.n_block).map(|i| by0 + hb * i as f64));
    let top = fill(by1, p.height);
    ys.extend(top.into_iter().skip(1));

    let ib0 = xs.iter().position(|&v| (v - bx0).abs() < 1e-12).expect("block edge on grid");
    let jb0 = ys.iter().position(|&v| (v - by0).abs() < 1e-12).expect("block edge on grid");
    let nb = p.n_block;
    let mut pool = VertexPool::default();
    let mut triangles = Vec::new();
    tensor_cells(&mut pool, &mut triangles, &xs, &ys, |i, j| !(i >= ib0 && i < ib0 + nb && j >= jb0 && j < jb0 + nb));
    let circle = Circle { center: p.center, radius: p.radius };
    ring(&mut pool, &mut triangles, (bx0, by0, bx1, by1), nb, circle, &p.layer_fractions);
    let (len, height) = (p.length, p.height);
    let label = move |a: Vec2, b: Vec2| {
        let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        if circle.distance(a) < 1e-9 && circle.distance(b) < 1e-9 {
            "obstacle"
        } else if m[0].abs() < 1e-10 {
            "inflow"
        } else if (m[0] - len).abs() < 1e-10 {
            "outflow"
        } else {
            debug_assert!(m[1].abs() < 1e-10 || (m[1] - height).abs() < 1e-10);
            "wall"
        }
        .to_string()
    };
    let mesh = finish(pool.vertices, triangles, &label)?;
    curve_boundary(&mesh, "obstacle", circle, p.geometry_order)
}

/// Ratio `r` with `h0 (r^n − 1)/(r − 1) = span`, found by bisection.
fn grading_ratio(h0: f64, span: f64, n: usize) -> f64 {
    let total =
        |r: f64| if (r - 1.0).abs() < 1e-12 { h0 * n as f64 } else { h0 * (r.powi(n as i32) - 1.0) / (r - 1.0) };
    if total(1.0) >= span {
        return 1.0;
    }
    let (mut lo, mut hi) = (1.0, 2.0);
    while total(hi) < span {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) < span {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structured_counts() {
        assert_eq!(generate_structured((0.0, 0.0, 1.0, 1.0), 1, 1).unwrap().n_elements(), 2);
        assert_eq!(generate_structured((-0.5, 0.0, 1.5, 2.0), 3, 3).unwrap().n_elements(), 18);
        assert_eq!(generate_structured((0.0, 0.0, 2.2, 0.41), 22, 5).unwrap().n_elements(), 220);
        assert!(matches!(generate_structured((0.0, 0.0, 0.0, 1.0), 1, 1), Err(Error::DegenerateRectangle)));
    }

    #[test]
    fn obstacle_mesh_counts_and_labels() {
        let m = obstacle_in_square(2.0, 1.0, 3, 3, 1).unwrap();
        assert_eq!(m.n_elements(), 72);
        for l in ["obstacle", "left", "right", "bottom", "top"] {
            assert!(m.has_label(l), "{l}");
        }
        let r = crate::mesh2d::refine_uniform(&m).unwrap();
        assert_eq!(r.n_elements(), 288);
        let c = obstacle_in_square(2.0, 1.0, 3, 3, 3).unwrap();
        let exact = 16.0 - std::f64::consts::PI;
        assert!((c.total_area() - exact).abs() < 2e-3);
        let cr = crate::mesh2d::refine_uniform(&c).unwrap();
        assert!((cr.total_area() - exact).abs() < (c.total_area() - exact).abs());
    }

    #[test]
    fn channel_mesh_is_valid() {
        let m = channel_with_cylinder(&ChannelParams::default()).unwrap();
        assert!(m.n_elements() > 300 && m.n_elements() < 700, "{}", m.n_elements());
        for l in ["inflow", "outflow", "wall", "obstacle"] {
            assert!(m.has_label(l), "{l}");
        }
        let exact = 2.2 * 0.41 - std::f64::consts::PI * 0.05 * 0.05;
        assert!((m.total_area() - exact).abs() < 1e-6);
        // curved elements keep positive Jacobians at interior points (checked on build)
        assert!((0..m.n_elements()).any(|e| m.is_curved(e)));
    }
}
