use nalgebra::DMatrix;

use super::{FESpace, SpaceKind};
use crate::error::{Error, Result};
use crate::polybasis::{dubiner, dubiner_dim, facet_legendre, interval_rule, triangle_rule};
use crate::Vec2;

/// Vector-valued data `x ↦ f(x)`.
pub type VectorFn<'a> = &'a (dyn Fn(Vec2) -> Vec2 + Sync);

/// Canonical interpolant into the space.
///
/// `Hdiv`: dof functionals applied to the Piola pullback (commutes with div).
/// `VectorDG`/`PressureDG`: elementwise L² projection (`PressureDG` uses `f(x)[0]`).
/// `FacetTan`: facet L² projection of the tangential component.
pub fn interpolate(space: &FESpace, f: VectorFn) -> Result<Vec<f64>> {
    let mesh = &space.mesh;
    let mut out = vec![0.0; space.ndof];
    match space.kind {
        SpaceKind::Hdiv => {
            let bdm = space.bdm().expect("Hdiv space has a BDM basis");
            let ne = bdm.n_edge_dofs();
            for elem in 0..mesh.n_elements() {
                let local = bdm.apply_functionals(|p| {
                    let (x, j, _) = mesh.geometry_map(elem, p);
                    let u = f(x);
                    // det J · J^{-1} u
                    [j[1][1] * u[0] - j[0][1] * u[1], -j[1][0] * u[0] + j[0][0] * u[1]]
                });
                let dofs = space.element_dofs(elem);
                for (m, (&g, &v)) in dofs.iter().zip(&local).enumerate() {
                    if m >= ne || mesh.owns_edge(elem, m / (space.degree + 1)) {
                        out[g] = v;
                    }
                }
            }
        }
        SpaceKind::FacetTan => {
            for fct in 0..mesh.n_facets() {
                let vals = facet_tangential_projection(space, fct, &|x| f(x));
                let n = space.degree + 1;
                out[fct * n..(fct + 1) * n].copy_from_slice(&vals);
            }
        }
        SpaceKind::VectorDG | SpaceKind::PressureDG => {
            let comps = if space.kind == SpaceKind::VectorDG { 2 } else { 1 };
            let k = space.degree;
            let nd = dubiner_dim(k);
            let rule = triangle_rule(2 * k + 2 * mesh.geometry_order + 4);
            let tables: Vec<Vec<f64>> = rule.points.iter().map(|p| dubiner(k, *p).0).collect();
            for elem in 0..mesh.n_elements() {
                let mut mass = DMatrix::zeros(nd, nd);
                let mut rhs = DMatrix::zeros(nd, comps);
                for (q, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                    let (x, _, d) = mesh.geometry_map(elem, *p);
                    let v = f(x);
                    let phi = &tables[q];
                    for i in 0..nd {
                        for c in 0..comps {
                            rhs[(i, c)] += w * d * v[c] * phi[i];
                        }
                        if mesh.is_curved(elem) {
                            for j in 0..nd {
                                mass[(i, j)] += w * d * phi[i] * phi[j];
                            }
                        }
                    }
                }
                let sol = if mesh.is_curved(elem) {
                    mass.cholesky().expect("element mass is SPD").solve(&rhs)
                } else {
                    rhs * (2.0 / mesh.geometry_map(elem, [0.0, 0.0]).2)
                };
                let base = elem * comps * nd;
                for c in 0..comps {
                    for i in 0..nd {
                        out[base + c * nd + i] = sol[(i, c)];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Coefficients of the facet L² projection of `f·τ` in the facet basis.
fn facet_tangential_projection(space: &FESpace, fct: usize, f: &dyn Fn(Vec2) -> Vec2) -> Vec<f64> {
    let mesh = &space.mesh;
    let n = space.degree + 1;
    let rule = interval_rule(2 * space.degree + 2 * mesh.geometry_order + 4);
    let mut b = vec![0.0; n];
    let mut length = 0.0;
    for (s, w) in rule.points.iter().zip(&rule.weights) {
        let (x, dx) = mesh.facet_point(fct, *s);
        let u = f(x);
        length += w * (dx[0] * dx[0] + dx[1] * dx[1]).sqrt();
        let psi = space.facet_values(fct, *s);
        let ut = u[0] * dx[0] + u[1] * dx[1];
        for i in 0..n {
            b[i] += w * ut * psi[i];
        }
    }
    b.iter().map(|v| v / length).collect()
}

/// Dirichlet flags and boundary values of one space.
#[derive(Debug, Clone)]
pub struct DirichletData {
    pub mask: Vec<bool>,
    pub values: Vec<f64>,
}

/// Interpolates `u_D(·, t)` on facets with the given labels.
///
/// `Hdiv` dofs get normal moments of `u_D`, `FacetTan` dofs the facet L² projection of
/// its tangential component. Other facets stay free.
pub fn set_dirichlet(
    space: &FESpace,
    labels: &[&str],
    u_d: &(dyn Fn(Vec2, f64) -> Vec2 + Sync),
    t: f64,
) -> Result<DirichletData> {
    let mesh = &space.mesh;
    for l in labels {
        if !mesh.has_label(l) {
            return Err(Error::MissingLabel(l.to_string()));
        }
    }
    let mut mask = vec![false; space.ndof];
    let mut values = vec![0.0; space.ndof];
    let n = space.degree + 1;
    for (&fct, label) in &mesh.boundary_markers {
        if !labels.contains(&label.as_str()) {
            continue;
        }
        let vals = match space.kind {
            SpaceKind::Hdiv => {
                let rule = interval_rule(2 * space.degree + 2 * mesh.geometry_order + 4);
                let mut v = vec![0.0; n];
                for (s, w) in rule.points.iter().zip(&rule.weights) {
                    let (x, dx) = mesh.facet_point(fct, *s);
                    let u = u_d(x, t);
                    // u · rot(dx/ds): normal flux density along the facet
                    let un = u[0] * dx[1] - u[1] * dx[0];
                    let (l, _) = facet_legendre(space.degree, *s);
                    for j in 0..n {
                        v[j] += w * un * l[j];
                    }
                }
                v
            }
            SpaceKind::FacetTan => facet_tangential_projection(space, fct, &|x| u_d(x, t)),
            _ => return Err(Error::UnsupportedSpace(format!("Dirichlet data on {:?}", space.kind))),
        };
        for j in 0..n {
            mask[fct * n + j] = true;
            values[fct * n + j] = vals[j];
        }
    }
    Ok(DirichletData { mask, values })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fespace::{build_space, evaluate_field, max_divergence, FEField};
    use crate::mesh2d::{curve_boundary, generate_structured, refine_uniform, Circle, Mesh};

    fn mesh(n: usize) -> Arc<Mesh> {
        Arc::new(generate_structured((0.0, 0.0, 1.0, 1.0), n, n).unwrap())
    }

    fn field(space: FESpace, f: VectorFn) -> FEField {
        let c = interpolate(&space, f).unwrap();
        FEField::new(Arc::new(space), c).unwrap()
    }

    #[test]
    fn hdiv_reproduces_constants_and_divergence() {
        let m = mesh(2);
        let u = field(build_space(m.clone(), SpaceKind::Hdiv, 1).unwrap(), &|_| [1.0, 0.0]);
        for e in 0..m.n_elements() {
            let v = evaluate_field(&u, e, [0.2, 0.3]).unwrap();
            assert!((v.value[0] - 1.0).abs() < 1e-13 && v.value[1].abs() < 1e-13);
        }
        let u = field(build_space(m.clone(), SpaceKind::Hdiv, 1).unwrap(), &|x| [x[0], -x[1]]);
        assert!(max_divergence(&u) < 1e-12);
        let u = field(build_space(m.clone(), SpaceKind::Hdiv, 1).unwrap(), &|x| [x[0], 0.0]);
        assert!((max_divergence(&u) - 1.0).abs() < 1e-12);
        let z = FEField::zeros(Arc::new(build_space(m, SpaceKind::Hdiv, 2).unwrap()));
        assert_eq!(max_divergence(&z), 0.0);
        let v = evaluate_field(&z, 0, [0.1, 0.1]).unwrap();
        assert_eq!((v.value, v.grad), ([0.0; 2], [[0.0; 2]; 2]));
    }

    #[test]
    fn polynomial_fields_reproduced_with_gradients() {
        let m = mesh(2);
        let f = |x: Vec2| [x[0] * x[0] * x[1] - 0.3 * x[1], x[0] * x[1] * x[1] + x[0]];
        let gf = |x: Vec2| [[2.0 * x[0] * x[1], x[0] * x[0] - 0.3], [x[1] * x[1] + 1.0, 2.0 * x[0] * x[1]]];
        for kind in [SpaceKind::Hdiv, SpaceKind::VectorDG] {
            let u = field(build_space(m.clone(), kind, 3).unwrap(), &f);
            for e in 0..m.n_elements() {
                for p in [[0.1, 0.2], [0.6, 0.3], [0.0, 0.0]] {
                    let v = evaluate_field(&u, e, p).unwrap();
                    let ex = f(v.x);
                    let g = gf(v.x);
                    for i in 0..2 {
                        assert!((v.value[i] - ex[i]).abs() < 1e-11, "{kind:?}");
                        for j in 0..2 {
                            assert!((v.grad[i][j] - g[i][j]).abs() < 1e-10, "{kind:?}");
                        }
                    }
                    assert!((v.div - (g[0][0] + g[1][1])).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn interior_dof_field_is_local_with_zero_normal_trace() {
        let m = mesh(2);
        let s = Arc::new(build_space(m.clone(), SpaceKind::Hdiv, 3).unwrap());
        let mut c = vec![0.0; s.ndof];
        let elem = 3;
        let ne = 3 * 4;
        for (i, &g) in s.element_dofs(elem)[ne..].iter().enumerate() {
            c[g] = 1.0 + i as f64;
        }
        let u = FEField::new(s.clone(), c).unwrap();
        for e in 0..m.n_elements() {
            let v = evaluate_field(&u, e, [0.3, 0.3]).unwrap();
            if e != elem {
                assert_eq!(v.value, [0.0; 2]);
            }
        }
        for &f in &m.element_facets[elem] {
            for s in [0.0, 0.3, 0.9] {
                let fc = &m.facets[f];
                let le = if fc.owner == elem { fc.local_edges[0] } else { fc.local_edges[1] };
                let p = m.facet_ref_point(elem, le, s);
                let v = evaluate_field(&u, elem, p).unwrap();
                assert!((v.value[0] * fc.normal[0] + v.value[1] * fc.normal[1]).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn normal_trace_continuous_across_facets() {
        let m = mesh(2);
        let s = Arc::new(build_space(m.clone(), SpaceKind::Hdiv, 4).unwrap());
        let c: Vec<f64> = (0..s.ndof).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect();
        let u = FEField::new(s, c).unwrap();
        for fc in m.facets.iter().filter(|f| !f.is_boundary()) {
            let nb = fc.neighbor.unwrap();
            for t in [0.1, 0.5, 0.8] {
                let a = evaluate_field(&u, fc.owner, m.facet_ref_point(fc.owner, fc.local_edges[0], t)).unwrap();
                let b = evaluate_field(&u, nb, m.facet_ref_point(nb, fc.local_edges[1], t)).unwrap();
                assert!((a.x[0] - b.x[0]).abs() + (a.x[1] - b.x[1]).abs() < 1e-14);
                let da = a.value[0] * fc.normal[0] + a.value[1] * fc.normal[1];
                let db = b.value[0] * fc.normal[0] + b.value[1] * fc.normal[1];
                assert!((da - db).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn curved_piola_gradient_and_commuting_interpolant() {
        let base = crate::mesh2d::obstacle_in_square(2.0, 1.0, 3, 2, 1).unwrap();
        let m = Arc::new(curve_boundary(&base, "obstacle", Circle { center: [0.0, 0.0], radius: 1.0 }, 3).unwrap());
        let s = build_space(m.clone(), SpaceKind::Hdiv, 3).unwrap();
        // solenoidal field: curl of a smooth stream function
        let f = |x: Vec2| [(x[1]).cos() * x[0], -(x[1]).sin() + 0.3 * x[0]];
        let u = field(s, &f);
        assert!(max_divergence(&u) < 1e-7, "{}", max_divergence(&u));
        // gradient vs finite differences inside a curved element
        let e = (0..m.n_elements()).find(|&e| m.is_curved(e)).unwrap();
        let p = [0.3, 0.3];
        let v = evaluate_field(&u, e, p).unwrap();
        let h = 1e-6;
        let geo = crate::fespace::GeoPoint::at(&m, e, p);
        for c in 0..2 {
            // step along physical direction c mapped back to the reference element
            let dp = [geo.jinv[0][c] * h, geo.jinv[1][c] * h];
            let a = evaluate_field(&u, e, [p[0] + dp[0], p[1] + dp[1]]).unwrap();
            let b = evaluate_field(&u, e, [p[0] - dp[0], p[1] - dp[1]]).unwrap();
            for i in 0..2 {
                let fd = (a.value[i] - b.value[i]) / (2.0 * h);
                assert!((fd - v.grad[i][c]).abs() < 1e-6, "i={i} c={c} fd={fd} g={}", v.grad[i][c]);
            }
        }
        assert!((v.div - (v.grad[0][0] + v.grad[1][1])).abs() < 1e-10);
    }

    #[test]
    fn commuting_interpolant_is_divergence_free() {
        // curl of ψ = x³y² + x y⁴, a solenoidal field of degree 4 outside BDM_3
        let f = |x: Vec2| {
            let (a, b) = (x[0], x[1]);
            [2.0 * a.powi(3) * b + 4.0 * a * b.powi(3), -(3.0 * a * a * b * b + b.powi(4))]
        };
        let u = field(build_space(mesh(3), SpaceKind::Hdiv, 3).unwrap(), &f);
        assert!(max_divergence(&u) < 1e-12, "{}", max_divergence(&u));
    }

    #[test]
    fn dirichlet_values() {
        let m = mesh(1);
        let s = build_space(m.clone(), SpaceKind::Hdiv, 2).unwrap();
        let ft = build_space(m.clone(), SpaceKind::FacetTan, 2).unwrap();
        let zero = set_dirichlet(&s, &["left"], &|_, _| [0.0, 0.0], 0.0).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
        let d = set_dirichlet(&s, &["left"], &|_, _| [1.0, 0.0], 0.0).unwrap();
        let dt = set_dirichlet(&ft, &["left"], &|_, _| [1.0, 0.0], 0.0).unwrap();
        let f = m.facets_with_label("left")[0];
        let fc = &m.facets[f];
        assert!((fc.normal[0] + 1.0).abs() < 1e-15);
        // u·n = −1 on a unit-length facet: first moment −1, higher moments 0
        assert!((d.values[f * 3] + 1.0).abs() < 1e-14);
        assert!(d.values[f * 3 + 1].abs() < 1e-14 && d.values[f * 3 + 2].abs() < 1e-14);
        assert!(dt.values[f * 3..f * 3 + 3].iter().all(|v| v.abs() < 1e-14));
        assert_eq!(d.mask.iter().filter(|&&b| b).count(), 3);
        // channel inflow profile
        let prof = |x: Vec2, _t: f64| [6.0 * x[1] * (0.41 - x[1]) / (0.41 * 0.41), 0.0];
        assert!((prof([0.0, 0.205], 0.0)[0] - 1.5).abs() < 1e-14);
    }

    #[test]
    fn refined_curved_interpolation_converges() {
        let base = crate::mesh2d::obstacle_in_square(2.0, 1.0, 3, 3, 2).unwrap();
        let f = |x: Vec2| [x[1].sin(), x[0].cos()];
        let mut prev = f64::INFINITY;
        let mut m = base;
        for _ in 0..2 {
            let mm = Arc::new(m.clone());
            let u = field(build_space(mm.clone(), SpaceKind::VectorDG, 2).unwrap(), &f);
            let mut err: f64 = 0.0;
            for e in 0..mm.n_elements() {
                let v = evaluate_field(&u, e, [0.2, 0.2]).unwrap();
                let ex = f(v.x);
                err = err.max((v.value[0] - ex[0]).abs());
            }
            assert!(err < prev);
            prev = err;
            m = refine_uniform(&m).unwrap();
        }
    }
}
