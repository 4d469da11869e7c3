//! BDM_k element on the reference triangle, built as the dual basis of its dof functionals.
//!
//! Edge functionals are normal moments `∫₀¹ v̂·ν̂_e ℓ_j(t) dt` against the orthonormal
//! Legendre basis, with `ν̂_e` the rotated (unnormalized) edge vector. Interior
//! functionals are moments against `∇q`, `q ∈ P_{k−1}` nonconstant, and against
//! `curl(b q)`, `q ∈ P_{k−2}`, with the cubic bubble `b = λ₀λ₁λ₂`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

use super::ortho::{dubiner, dubiner_dim, facet_legendre};
use super::quadrature::{interval_rule, triangle_rule};
use crate::error::{Error, Result};
use crate::{Mat2, Vec2};

/// Largest supported polynomial degree.
pub const MAX_DEGREE: usize = 20;

/// Reference vertices.
pub const REF_VERTICES: [Vec2; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Endpoints of reference edge `e`, which is opposite vertex `e` and runs counterclockwise.
pub fn ref_edge(e: usize) -> (Vec2, Vec2) {
    (REF_VERTICES[(e + 1) % 3], REF_VERTICES[(e + 2) % 3])
}

/// Point at parameter `t ∈ [0, 1]` on reference edge `e`.
pub fn ref_edge_point(e: usize, t: f64) -> Vec2 {
    let (a, b) = ref_edge(e);
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Outward, unnormalized normal of reference edge `e` (edge vector rotated clockwise).
pub fn ref_edge_normal(e: usize) -> Vec2 {
    let (a, b) = ref_edge(e);
    [b[1] - a[1], -(b[0] - a[0])]
}

/// Dual BDM basis of degree `k`.
#[derive(Debug, Clone)]
pub struct BdmBasis {
    pub k: usize,
    /// Column `m` holds the Dubiner coefficients of member `m`, x-component first.
    coeffs: DMatrix<f64>,
    /// Functional evaluation data: for each functional, weights per sample point.
    sample_points: Vec<Vec2>,
    sample_weights: DMatrix<f64>,
    /// 2-norm condition number of the dual Vandermonde matrix.
    pub condition: f64,
}

impl BdmBasis {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 || k > MAX_DEGREE {
            return Err(Error::UnsupportedSpace(format!("BDM degree {k}")));
        }
        let nd = dubiner_dim(k);
        let dim = 2 * nd;
        let (sample_points, sample_weights) = functional_samples(k);
        // Vandermonde V[i][j] = N_i(P_j), P_j = φ_{j mod nd} e_{j / nd}
        let np = sample_points.len();
        let mut prime = DMatrix::zeros(2 * np, dim);
        for (q, pt) in sample_points.iter().enumerate() {
            let (v, _) = dubiner(k, *pt);
            for i in 0..nd {
                prime[(2 * q, i)] = v[i];
                prime[(2 * q + 1, nd + i)] = v[i];
            }
        }
        let vdm = &sample_weights * prime;
        let sv = vdm.clone().svd(false, false).singular_values;
        let smax = sv.max();
        let smin = sv.min();
        if !(smin > 1e-14 * smax) {
            return Err(Error::UnsupportedSpace(format!("singular BDM dual matrix for k = {k}")));
        }
        let coeffs = vdm
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::UnsupportedSpace(format!("singular BDM dual matrix for k = {k}")))?;
        Ok(Self { k, coeffs, sample_points, sample_weights, condition: smax / smin })
    }

    pub fn dim(&self) -> usize {
        (self.k + 1) * (self.k + 2)
    }

    pub fn n_edge_dofs(&self) -> usize {
        3 * (self.k + 1)
    }

    pub fn n_interior_dofs(&self) -> usize {
        (self.k + 1) * (self.k - 1)
    }

    /// Values of all members at a reference point.
    pub fn values(&self, pt: Vec2) -> Vec<Vec2> {
        let nd = dubiner_dim(self.k);
        let (phi, _) = dubiner(self.k, pt);
        (0..self.dim())
            .map(|m| {
                let col = self.coeffs.column(m);
                let mut v = [0.0; 2];
                for i in 0..nd {
                    v[0] += col[i] * phi[i];
                    v[1] += col[nd + i] * phi[i];
                }
                v
            })
            .collect()
    }

    /// Values and gradients `g[c][d] = ∂v_c/∂x̂_d` of all members at a reference point.
    pub fn eval(&self, pt: Vec2) -> (Vec<Vec2>, Vec<Mat2>) {
        let nd = dubiner_dim(self.k);
        let (phi, dphi) = dubiner(self.k, pt);
        let mut vals = Vec::with_capacity(self.dim());
        let mut grads = Vec::with_capacity(self.dim());
        for m in 0..self.dim() {
            let col = self.coeffs.column(m);
            let mut v = [0.0; 2];
            let mut g = [[0.0; 2]; 2];
            for i in 0..nd {
                let (a, b) = (col[i], col[nd + i]);
                v[0] += a * phi[i];
                v[1] += b * phi[i];
                g[0][0] += a * dphi[i][0];
                g[0][1] += a * dphi[i][1];
                g[1][0] += b * dphi[i][0];
                g[1][1] += b * dphi[i][1];
            }
            vals.push(v);
            grads.push(g);
        }
        (vals, grads)
    }

    /// Reference divergence of all members at a point.
    pub fn divergence(&self, pt: Vec2) -> Vec<f64> {
        let (_, g) = self.eval(pt);
        g.iter().map(|g| g[0][0] + g[1][1]).collect()
    }

    /// Applies every dof functional to a reference vector field.
    pub fn apply_functionals(&self, f: impl Fn(Vec2) -> Vec2) -> Vec<f64> {
        let mut samples = nalgebra::DVector::zeros(2 * self.sample_points.len());
        for (q, pt) in self.sample_points.iter().enumerate() {
            let v = f(*pt);
            samples[2 * q] = v[0];
            samples[2 * q + 1] = v[1];
        }
        (&self.sample_weights * samples).as_slice().to_vec()
    }
}

/// Sample points and per-functional weights (rows: functionals, columns: point × component).
fn functional_samples(k: usize) -> (Vec<Vec2>, DMatrix<f64>) {
    let deg = 2 * k + 4;
    let er = interval_rule(deg);
    let tr = triangle_rule(deg);
    let mut points = Vec::new();
    for e in 0..3 {
        for t in &er.points {
            points.push(ref_edge_point(e, *t));
        }
    }
    let n_edge_pts = points.len();
    points.extend(tr.points.iter().copied());
    let dim = (k + 1) * (k + 2);
    let mut w = DMatrix::zeros(dim, 2 * points.len());
    let ne = er.len();
    for e in 0..3 {
        let nu = ref_edge_normal(e);
        for (q, (t, wt)) in er.points.iter().zip(&er.weights).enumerate() {
            let (l, _) = facet_legendre(k, *t);
            let col = e * ne + q;
            for j in 0..=k {
                let row = e * (k + 1) + j;
                w[(row, 2 * col)] = wt * l[j] * nu[0];
                w[(row, 2 * col + 1)] = wt * l[j] * nu[1];
            }
        }
    }
    let mut row = 3 * (k + 1);
    let n_grad = dubiner_dim(k - 1) - 1;
    let n_curl = if k >= 2 { dubiner_dim(k - 2) } else { 0 };
    for (q, (pt, wt)) in tr.points.iter().zip(&tr.weights).enumerate() {
        let col = n_edge_pts + q;
        let (_, dq) = dubiner(k - 1, *pt);
        for i in 0..n_grad {
            let g = dq[i + 1];
            w[(row + i, 2 * col)] = wt * g[0];
            w[(row + i, 2 * col + 1)] = wt * g[1];
        }
        if n_curl > 0 {
            let (x, y) = (pt[0], pt[1]);
            let b = (1.0 - x - y) * x * y;
            let db = [y * (1.0 - 2.0 * x - y), x * (1.0 - x - 2.0 * y)];
            let (qv, qg) = dubiner(k - 2, *pt);
            for i in 0..n_curl {
                // ∇(b q) rotated: curl φ = (∂_y φ, −∂_x φ)
                let gx = db[0] * qv[i] + b * qg[i][0];
                let gy = db[1] * qv[i] + b * qg[i][1];
                w[(row + n_grad + i, 2 * col)] = wt * gy;
                w[(row + n_grad + i, 2 * col + 1)] = -wt * gx;
            }
        }
    }
    row += n_grad + n_curl;
    debug_assert_eq!(row, dim);
    (points, w)
}

/// Shared, lazily built BDM basis of degree `k`.
pub fn bdm_basis(k: usize) -> Result<Arc<BdmBasis>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<BdmBasis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(b) = cache.lock().expect("basis cache poisoned").get(&k) {
        return Ok(b.clone());
    }
    let b = Arc::new(BdmBasis::new(k)?);
    cache.lock().expect("basis cache poisoned").insert(k, b.clone());
    Ok(b)
}
