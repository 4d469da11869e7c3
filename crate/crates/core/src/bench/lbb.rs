//! Discrete inf-sup constant of a single element.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fespace::{physical_hdiv, GeoPoint};
use crate::mesh2d::Mesh;
use crate::polybasis::{bdm_basis, dubiner, dubiner_dim, interval_rule, ref_edge, ref_edge_point, triangle_rule};
use crate::Vec2;

/// LBB constant of one element with all boundary dofs constrained and zero-mean pressures.
///
/// `c = sqrt(λ_min)` of `D N⁻¹ Dᵀ p = λ M_p p`, with `N` the matrix of
/// `‖∇u‖² + (α/h)‖u^t‖²_∂T + (h/α)‖∂u/∂n‖²_∂T` on the interior velocity dofs (the facet
/// unknowns are zero) and `h` the element diameter. `α = 1` gives the unweighted norm,
/// `α` equal to the interior penalty the norm the viscous form is coercive in. The value
/// is invariant under similarity transforms of the element.
pub fn lbb_constant(vertices: [Vec2; 3], k: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("penalty must be positive, got {alpha}")));
    }
    let mesh = Mesh::from_parts(vertices.to_vec(), vec![[0, 1, 2]], &[])?;
    if k < 2 {
        return Err(Error::LbbUndefined(k));
    }
    let bdm = bdm_basis(k)?;
    let first = bdm.n_edge_dofs();
    let nu = bdm.n_interior_dofs();
    let np = dubiner_dim(k - 1) - 1;
    let h = mesh.max_diameter() / alpha;

    let mut n = DMatrix::<f64>::zeros(nu, nu);
    let mut d = DMatrix::<f64>::zeros(np, nu);
    let mut mp = DMatrix::<f64>::zeros(np, np);
    let vol = triangle_rule(2 * k + 2);
    for (pt, w) in vol.points.iter().zip(&vol.weights) {
        let geo = GeoPoint::at(&mesh, 0, *pt);
        let (v, g) = bdm.eval(*pt);
        let (_, pg) = physical_hdiv(&v[first..], &g[first..], &geo);
        let wd = w * geo.det;
        let (q, _) = dubiner(k - 1, *pt);
        for a in 0..nu {
            let da = pg[a][0][0] + pg[a][1][1];
            for b in 0..nu {
                let mut s = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        s += pg[a][i][j] * pg[b][i][j];
                    }
                }
                n[(a, b)] += wd * s;
            }
            for i in 0..np {
                d[(i, a)] += wd * q[i + 1] * da;
            }
        }
        for i in 0..np {
            for j in 0..np {
                mp[(i, j)] += wd * q[i + 1] * q[j + 1];
            }
        }
    }
    let edge = interval_rule(2 * k + 2);
    for e in 0..3 {
        let (a, b) = ref_edge(e);
        let dir = [b[0] - a[0], b[1] - a[1]];
        for (t, w) in edge.points.iter().zip(&edge.weights) {
            let pt = ref_edge_point(e, *t);
            let geo = GeoPoint::at(&mesh, 0, pt);
            let j = &geo.jac;
            let dx = [j[0][0] * dir[0] + j[0][1] * dir[1], j[1][0] * dir[0] + j[1][1] * dir[1]];
            let len = dx[0].hypot(dx[1]);
            let nrm = [dx[1] / len, -dx[0] / len];
            let (v, g) = bdm.eval(pt);
            let (pv, pg) = physical_hdiv(&v[first..], &g[first..], &geo);
            let dn: Vec<Vec2> = pg.iter().map(|g| [0, 1].map(|i| g[i][0] * nrm[0] + g[i][1] * nrm[1])).collect();
            let ws = w * len;
            for a in 0..nu {
                for b in 0..nu {
                    let jump = pv[a][0] * pv[b][0] + pv[a][1] * pv[b][1];
                    let flux = dn[a][0] * dn[b][0] + dn[a][1] * dn[b][1];
                    n[(a, b)] += ws * (jump / h + h * flux);
                }
            }
        }
    }
    let chol = n.cholesky().ok_or(Error::SingularInteriorBlock(0))?;
    let s = &d * chol.solve(&d.transpose());
    let mchol = mp.cholesky().ok_or(Error::SingularInteriorBlock(0))?;
    let linv = mchol.l().try_inverse().ok_or(Error::SingularInteriorBlock(0))?;
    let sym = &linv * s * linv.transpose();
    let sym = (&sym + sym.transpose()) * 0.5;
    let lmin = sym.symmetric_eigenvalues().min();
    Ok(lmin.max(0.0).sqrt())
}
