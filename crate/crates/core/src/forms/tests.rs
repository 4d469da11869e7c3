use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::fespace::{evaluate_field, interpolate, max_divergence, FEField, GeoPoint};
use crate::mesh2d::{generate_structured, obstacle_in_square, Mesh};
use crate::polybasis::{dubiner, triangle_rule};

fn square(n: usize) -> Arc<Mesh> {
    Arc::new(generate_structured((0.0, 0.0, 1.0, 1.0), n, n).unwrap())
}

fn two_elements() -> Arc<Mesh> {
    Arc::new(
        Mesh::from_parts(
            vec![[0.0, 0.0], [1.3, 0.1], [0.2, 0.9], [1.1, 1.2]],
            vec![[0, 1, 2], [1, 3, 2]],
            &[([0, 1], "a".into()), ([1, 3], "a".into()), ([3, 2], "a".into()), ([2, 0], "a".into())],
        )
        .unwrap(),
    )
}

fn stacked(spaces: &Spaces, variant: JumpVariant, f: &(dyn Fn([f64; 2]) -> [f64; 2] + Sync)) -> Vec<f64> {
    let mut u = interpolate(&spaces.w, f).unwrap();
    u.extend(interpolate(spaces.facet(variant), f).unwrap());
    u
}

fn energy(a: &DMatrix<f64>, u: &[f64]) -> f64 {
    let x = DVector::from_column_slice(u);
    x.dot(&(a * &x))
}

#[test]
fn viscous_kernel_symmetry_and_coercivity() {
    let m = square(2);
    for k in 1..=3 {
        let sp = Spaces::new(m.clone(), k).unwrap();
        let cfg = FormConfig::new(1.0, k, JumpVariant::Full);
        let b = assemble_element_blocks(&sp, &cfg).unwrap();
        let a = b.dense_viscous(&sp);
        assert!((&a - a.transpose()).amax() < 1e-12 * a.amax());
        let u = stacked(&sp, JumpVariant::Full, &|_| [0.7, -0.3]);
        assert!(energy(&a, &u).abs() < 1e-12);
    }
    let m = two_elements();
    let sp = Spaces::new(m.clone(), 2).unwrap();
    for variant in [JumpVariant::Full, JumpVariant::Projected] {
        let cfg = FormConfig::new(1.0, 2, variant);
        let b = assemble_element_blocks(&sp, &cfg).unwrap();
        let a = b.dense_viscous(&sp);
        // free dofs: interior W dofs, W and F dofs of the interior facet
        let fs = sp.facet(variant);
        let inner = (0..m.n_facets()).find(|&f| !m.facets[f].is_boundary()).unwrap();
        let mut free: Vec<usize> = (m.n_facets() * 3..sp.w.ndof).collect();
        free.extend(inner * 3..inner * 3 + 3);
        let nf = fs.degree + 1;
        free.extend((inner * nf..(inner + 1) * nf).map(|i| sp.w.ndof + i));
        let r = a.select_rows(&free).select_columns(&free);
        let ev = r.symmetric_eigenvalues();
        assert!(ev.min() > 1e-8, "{variant:?}: {}", ev.min());
    }
}

#[test]
fn projected_jumps_elimination_matches_explicit_projection() {
    let m = two_elements();
    for k in 1..=4 {
        let sp = Spaces::new(m.clone(), k).unwrap();
        let cfg = FormConfig::new(0.7, k, JumpVariant::Projected);
        let full = assemble_viscous(&sp, &cfg).unwrap();
        let elim = realize_projected_jumps(&full).unwrap();
        let expl = assemble_viscous_projected_explicit(&sp, &cfg).unwrap();
        assert_eq!(elim.facet_degree, k - 1);
        for (x, y) in elim.a.iter().zip(&expl.a) {
            assert_eq!(x.shape(), y.shape());
            assert!((x - y).amax() <= 1e-12 * x.amax(), "k={k}: {}", (x - y).amax() / x.amax());
        }
    }
    let sp = Spaces::new(m, 1).unwrap();
    let full = assemble_viscous(&sp, &FormConfig::new(1.0, 1, JumpVariant::Full)).unwrap();
    assert_eq!(full.n_local() - realize_projected_jumps(&full).unwrap().n_local(), 3);
}

#[test]
fn projection_is_identity_on_low_degree_jumps() {
    let m = two_elements();
    let k = 3;
    let sp = Spaces::new(m.clone(), k).unwrap();
    let full = assemble_element_blocks(&sp, &FormConfig::new(1.0, k, JumpVariant::Full)).unwrap();
    let proj = assemble_element_blocks(&sp, &FormConfig::new(1.0, k, JumpVariant::Projected)).unwrap();
    // quadratic field: tangential traces of degree 2 = k − 1; facet data of degree k − 1
    let f = |x: [f64; 2]| [x[1] * x[1] - 0.3 * x[0], x[0] * x[0] + 0.3 * x[1]];
    let w = interpolate(&sp.w, &f).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let fr: Vec<f64> = (0..sp.f_reduced.ndof).map(|_| rng.gen_range(-1.0..1.0)).collect();
    // embed degree k−1 facet data into the hierarchical degree-k basis
    let mut ff = vec![0.0; sp.f_full.ndof];
    for fct in 0..m.n_facets() {
        for j in 0..k {
            ff[fct * (k + 1) + j] = fr[fct * k + j];
        }
    }
    let uf: Vec<f64> = w.iter().chain(&ff).copied().collect();
    let ur: Vec<f64> = w.iter().chain(&fr).copied().collect();
    let ef = energy(&full.dense_viscous(&sp), &uf);
    let er = energy(&proj.dense_viscous(&sp), &ur);
    assert!((ef - er).abs() < 1e-10 * ef.abs(), "{ef} {er}");
}

#[test]
fn masses_and_divergence() {
    let m = square(1);
    let sp = Spaces::new(m.clone(), 2).unwrap();
    let b = assemble_element_blocks(&sp, &FormConfig::new(1.0, 2, JumpVariant::Full)).unwrap();
    let u = interpolate(&sp.w, &|_| [1.0, 0.0]).unwrap();
    let mu = b.apply_mass(&sp, &u);
    assert!((u.iter().zip(&mu).map(|(a, b)| a * b).sum::<f64>() - 1.0).abs() < 1e-13);
    let u = interpolate(&sp.w, &|x| [x[0], -x[1]]).unwrap();
    assert!(b.apply_div(&sp, &u).iter().all(|v| v.abs() < 1e-13));
    let u = interpolate(&sp.w, &|x| [x[0], 0.0]).unwrap();
    let d = b.apply_div(&sp, &u);
    let ones: f64 = (0..m.n_elements()).map(|e| d[sp.q.element_dofs(e)[0]]).sum();
    assert!((ones + 1.0).abs() < 1e-13);
    let t = Transfer::new(&sp).unwrap();
    for e in 0..m.n_elements() {
        let mb = t.mass_block(e);
        assert!(t.is_diagonal(e));
        assert!((&mb - DMatrix::from_diagonal(&mb.diagonal())).amax() < 1e-13);
    }
}

#[test]
fn weakly_divergence_free_is_strongly_divergence_free() {
    let m = square(2);
    let sp = Spaces::new(m, 2).unwrap();
    let b = assemble_element_blocks(&sp, &FormConfig::new(1.0, 2, JumpVariant::Full)).unwrap();
    let n = sp.w.ndof;
    let mut d = DMatrix::zeros(sp.q.ndof, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        d.set_column(j, &DVector::from_vec(b.apply_div(&sp, &e)));
    }
    let svd = d.clone().svd(false, true);
    let vt = svd.v_t.unwrap();
    let rank = svd.singular_values.iter().filter(|s| **s > 1e-10).count();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut w = DVector::zeros(n);
    for r in rank..vt.nrows() {
        w += vt.row(r).transpose() * rng.gen_range(-1.0..1.0);
    }
    let field = FEField::new(sp.w.clone(), w.as_slice().to_vec()).unwrap();
    assert!(max_divergence(&field) <= 1e-10 * w.norm());
}

#[test]
fn transfer_embeds_and_is_adjoint() {
    let m = square(2);
    let sp = Spaces::new(m.clone(), 3).unwrap();
    let t = Transfer::new(&sp).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let u: Vec<f64> = (0..sp.w.ndof).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let iu = t.apply_i(&sp, &u);
    let fu = FEField::new(sp.w.clone(), u.clone()).unwrap();
    let fv = FEField::new(sp.v.clone(), iu.clone()).unwrap();
    for _ in 0..20 {
        let e = rng.gen_range(0..m.n_elements());
        let a: f64 = rng.gen_range(0.0..1.0);
        let p = [a * rng.gen_range(0.0..1.0), 0.0];
        let p = [p[0], (1.0 - p[0]) * rng.gen_range(0.0..1.0)];
        let x = evaluate_field(&fu, e, p).unwrap().value;
        let y = evaluate_field(&fv, e, p).unwrap().value;
        assert!((x[0] - y[0]).abs() < 1e-11 && (x[1] - y[1]).abs() < 1e-11);
    }
    let f: Vec<f64> = (0..sp.v.ndof).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let lhs: f64 = t.apply_i_t(&sp, &f).iter().zip(&u).map(|(a, b)| a * b).sum();
    let rhs: f64 = f.iter().zip(&iu).map(|(a, b)| a * b).sum();
    assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
}

#[test]
fn transfer_is_l2_projection_on_curved_elements() {
    let m = Arc::new(obstacle_in_square(2.0, 1.0, 2, 1, 3).unwrap());
    let k = 2;
    let sp = Spaces::new(m.clone(), k).unwrap();
    let t = Transfer::new(&sp).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let u: Vec<f64> = (0..sp.w.ndof).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let fu = FEField::new(sp.w.clone(), u.clone()).unwrap();
    let fv = FEField::new(sp.v.clone(), t.apply_i(&sp, &u)).unwrap();
    let rule = triangle_rule(4 * k + 12);
    let mut worst: f64 = 0.0;
    let mut any_curved = false;
    for e in 0..m.n_elements() {
        any_curved |= m.is_curved(e);
        let mut r = vec![[0.0; 2]; crate::polybasis::dubiner_dim(k)];
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let geo = GeoPoint::at(&m, e, *p);
            let diff = {
                let a = evaluate_field(&fu, e, *p).unwrap().value;
                let b = evaluate_field(&fv, e, *p).unwrap().value;
                [a[0] - b[0], a[1] - b[1]]
            };
            for (i, phi) in dubiner(k, *p).0.iter().enumerate() {
                r[i][0] += w * geo.det * diff[0] * phi;
                r[i][1] += w * geo.det * diff[1] * phi;
            }
        }
        worst = r.iter().fold(worst, |a, v| a.max(v[0].abs()).max(v[1].abs()));
    }
    assert!(any_curved);
    assert!(worst < 1e-10, "{worst}");
}

fn stream_field(x: [f64; 2]) -> [f64; 2] {
    // curl of x²(1−x)²y²(1−y)²
    let (a, b) = (x[0], x[1]);
    let f = a * a * (1.0 - a) * (1.0 - a);
    let g = b * b * (1.0 - b) * (1.0 - b);
    let df = 2.0 * a * (1.0 - a) * (1.0 - 2.0 * a);
    let dg = 2.0 * b * (1.0 - b) * (1.0 - 2.0 * b);
    [f * dg, -df * g]
}

#[test]
fn convection_constants_zero_field_and_stability() {
    let m = square(3);
    let k = 3;
    let sp = Spaces::new(m.clone(), k).unwrap();
    let conv = Convection::new(&sp);
    let u = interpolate(&sp.w, &|x| stream_field(x)).unwrap();
    let wc = interpolate(&sp.v, &|_| [1.3, -0.4]).unwrap();
    for bc in [BoundaryTrace::Homogeneous, BoundaryTrace::Interior] {
        let r = conv.apply(&sp, &u, &wc, &bc);
        assert!(r.iter().all(|v| v.abs() < 1e-11), "{}", r.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    }
    let zero = vec![0.0; sp.w.ndof];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let w: Vec<f64> = (0..sp.v.ndof).map(|_| rng.gen_range(-1.0..1.0)).collect();
    assert!(conv.apply(&sp, &zero, &w, &BoundaryTrace::Homogeneous).iter().all(|v| *v == 0.0));
    for _ in 0..100 {
        let w: Vec<f64> = (0..sp.v.ndof).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = conv.apply(&sp, &u, &w, &BoundaryTrace::Homogeneous);
        let q: f64 = r.iter().zip(&w).map(|(a, b)| a * b).sum();
        assert!(q >= -1e-11, "{q}");
    }
}

#[test]
fn convection_on_curved_mesh_transports_constants() {
    let m = Arc::new(obstacle_in_square(2.0, 1.0, 2, 2, 3).unwrap());
    let sp = Spaces::new(m, 2).unwrap();
    let conv = Convection::new(&sp);
    // uniform flow: nonzero boundary flux, constant transported with its own exterior value
    let data = |_: [f64; 2], _: f64| [1.0, 0.5];
    let labels: Vec<&str> = sp.mesh.boundary_markers.values().map(|s| s.as_str()).collect();
    let u = interpolate(&sp.w, &|_| [1.0, 0.5]).unwrap();
    let w = interpolate(&sp.v, &|_| [1.0, 0.5]).unwrap();
    let r = conv.apply(&sp, &u, &w, &BoundaryTrace::Dirichlet { labels: &labels, data: &data, t: 0.0 });
    // C(u; w, z) = −∫ w⊗u:∇z + ∫ u·n w z = ∫ div(u) w·z = 0
    let worst = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    assert!(worst < 1e-10, "{worst}");
}
