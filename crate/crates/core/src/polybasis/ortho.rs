//! Orthogonal polynomial families: Legendre on the unit interval, Jacobi, and the
//! Dubiner basis on the reference triangle.

use crate::Vec2;

/// Values `P_0..=P_n` of the Legendre polynomials at `x ∈ [-1, 1]`.
pub fn legendre(n: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(1.0);
    if n >= 1 {
        p.push(x);
    }
    for m in 1..n {
        let mf = m as f64;
        p.push(((2.0 * mf + 1.0) * x * p[m] - mf * p[m - 1]) / (mf + 1.0));
    }
    p
}

/// Values `P_0^{(a,b)}..=P_n^{(a,b)}` of the Jacobi polynomials at `x ∈ [-1, 1]`.
pub fn jacobi(n: usize, a: f64, b: f64, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(1.0);
    if n >= 1 {
        p.push(0.5 * ((a + b + 2.0) * x + a - b));
    }
    for m in 1..n {
        let mf = m as f64;
        let s = 2.0 * mf + a + b;
        let c1 = 2.0 * (mf + 1.0) * (mf + a + b + 1.0) * s;
        let c2 = (s + 1.0) * (s * (s + 2.0) * x + a * a - b * b);
        let c3 = 2.0 * (mf + a) * (mf + b) * (s + 2.0);
        p.push((c2 * p[m] - c3 * p[m - 1]) / c1);
    }
    p
}

/// Orthonormal Legendre basis on `[0, 1]`: `ℓ_j(t) = √(2j+1) P_j(2t − 1)`, with derivatives.
pub fn facet_legendre(n: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
    let x = 2.0 * t - 1.0;
    let p = legendre(n, x);
    let mut vals = Vec::with_capacity(n + 1);
    let mut ders = Vec::with_capacity(n + 1);
    let dp = if n >= 1 { jacobi(n - 1, 1.0, 1.0, x) } else { Vec::new() };
    for j in 0..=n {
        let s = (2.0 * j as f64 + 1.0).sqrt();
        vals.push(s * p[j]);
        // d/dt = 2 d/dx, dP_j/dx = (j+1)/2 P_{j-1}^{(1,1)}
        ders.push(if j == 0 { 0.0 } else { s * (j as f64 + 1.0) * dp[j - 1] });
    }
    (vals, ders)
}

/// Number of Dubiner members of total degree ≤ k.
pub fn dubiner_dim(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Degree pairs `(p, q)` in member order: by total degree, then increasing `q`.
pub fn dubiner_indices(k: usize) -> Vec<(usize, usize)> {
    let mut idx = Vec::with_capacity(dubiner_dim(k));
    for d in 0..=k {
        for q in 0..=d {
            idx.push((d - q, q));
        }
    }
    idx
}

/// Values and gradients of the Dubiner basis of degree `k` at a reference point.
///
/// Normalized so that `∫ φ_i φ_j = δ_ij / 2` on the reference triangle; `φ_0 ≡ 1`.
pub fn dubiner(k: usize, pt: Vec2) -> (Vec<f64>, Vec<Vec2>) {
    let (x, y) = (pt[0], pt[1]);
    let xi = 2.0 * x + y - 1.0;
    let eta = 1.0 - y;
    // scaled Legendre Q_p(ξ, η) = η^p P_p(ξ/η) and its gradient
    let mut q = vec![0.0; k + 1];
    let mut dq = vec![[0.0; 2]; k + 1];
    q[0] = 1.0;
    if k >= 1 {
        q[1] = xi;
        dq[1] = [2.0, 1.0];
    }
    for n in 1..k {
        let nf = n as f64;
        let a = 2.0 * nf + 1.0;
        q[n + 1] = (a * xi * q[n] - nf * eta * eta * q[n - 1]) / (nf + 1.0);
        for c in 0..2 {
            let dxi = if c == 0 { 2.0 } else { 1.0 };
            let deta = if c == 0 { 0.0 } else { -1.0 };
            dq[n + 1][c] = (a * (dxi * q[n] + xi * dq[n][c])
                - nf * (2.0 * eta * deta * q[n - 1] + eta * eta * dq[n - 1][c]))
                / (nf + 1.0);
        }
    }
    let z = 2.0 * y - 1.0;
    let mut r = Vec::with_capacity(k + 1);
    let mut dr = Vec::with_capacity(k + 1);
    for p in 0..=k {
        let a = 2.0 * p as f64 + 1.0;
        let m = k - p;
        let vals = jacobi(m, a, 0.0, z);
        let ders = if m >= 1 { jacobi(m - 1, a + 1.0, 1.0, z) } else { Vec::new() };
        let d: Vec<f64> = (0..=m).map(|j| if j == 0 { 0.0 } else { (j as f64 + a + 1.0) * ders[j - 1] }).collect();
        r.push(vals);
        dr.push(d);
    }
    let n = dubiner_dim(k);
    let mut vals = Vec::with_capacity(n);
    let mut grads = Vec::with_capacity(n);
    for (p, qq) in dubiner_indices(k) {
        let c = ((2.0 * p as f64 + 1.0) * (p + qq + 1) as f64).sqrt();
        let rv = r[p][qq];
        let rd = dr[p][qq];
        vals.push(c * q[p] * rv);
        grads.push([c * dq[p][0] * rv, c * (dq[p][1] * rv + q[p] * rd)]);
    }
    (vals, grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polybasis::quadrature::{interval_rule, triangle_rule};

    #[test]
    fn legendre_closed_form() {
        let p = legendre(2, 0.5);
        assert!((p[2] + 0.125).abs() < 1e-15);
        let (v, _) = facet_legendre(2, 0.75);
        assert!((v[2] - 5f64.sqrt() * -0.125).abs() < 1e-14);
    }

    #[test]
    fn facet_legendre_orthonormal_and_derivative() {
        let r = interval_rule(20);
        let n = 9;
        let mut g = vec![0.0; (n + 1) * (n + 1)];
        for (t, w) in r.points.iter().zip(&r.weights) {
            let (v, _) = facet_legendre(n, *t);
            for i in 0..=n {
                for j in 0..=n {
                    g[i * (n + 1) + j] += w * v[i] * v[j];
                }
            }
        }
        for i in 0..=n {
            for j in 0..=n {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g[i * (n + 1) + j] - e).abs() < 1e-13);
            }
        }
        let h = 1e-6;
        let (vp, _) = facet_legendre(n, 0.3 + h);
        let (vm, _) = facet_legendre(n, 0.3 - h);
        let (_, d) = facet_legendre(n, 0.3);
        for j in 0..=n {
            assert!(((vp[j] - vm[j]) / (2.0 * h) - d[j]).abs() < 1e-5 * (1.0 + d[j].abs()));
        }
    }

    #[test]
    fn dubiner_gram_diagonal() {
        for k in [0, 1, 3, 6, 10] {
            let r = triangle_rule(2 * k);
            let n = dubiner_dim(k);
            let mut g = vec![0.0; n * n];
            for (pt, w) in r.points.iter().zip(&r.weights) {
                let (v, _) = dubiner(k, *pt);
                for i in 0..n {
                    for j in 0..n {
                        g[i * n + j] += w * v[i] * v[j];
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let e = if i == j { 0.5 } else { 0.0 };
                    assert!((g[i * n + j] - e).abs() < 1e-12, "k={k} i={i} j={j}");
                }
            }
        }
        let (v, g) = dubiner(3, [0.2, 0.3]);
        assert!((v[0] - 1.0).abs() < 1e-15 && g[0] == [0.0, 0.0]);
    }

    #[test]
    fn dubiner_gradient_matches_finite_differences() {
        let k = 7;
        let pt = [0.23, 0.41];
        let h = 1e-6;
        let (_, g) = dubiner(k, pt);
        let (vxp, _) = dubiner(k, [pt[0] + h, pt[1]]);
        let (vxm, _) = dubiner(k, [pt[0] - h, pt[1]]);
        let (vyp, _) = dubiner(k, [pt[0], pt[1] + h]);
        let (vym, _) = dubiner(k, [pt[0], pt[1] - h]);
        for i in 0..dubiner_dim(k) {
            let fx = (vxp[i] - vxm[i]) / (2.0 * h);
            let fy = (vyp[i] - vym[i]) / (2.0 * h);
            assert!((fx - g[i][0]).abs() < 1e-5 * (1.0 + fx.abs()), "i={i}");
            assert!((fy - g[i][1]).abs() < 1e-5 * (1.0 + fy.abs()), "i={i}");
        }
    }

    #[test]
    fn dubiner_hierarchical_by_degree() {
        // the first dim(k-1) members of degree k coincide with the degree k-1 set
        let (a, _) = dubiner(5, [0.1, 0.6]);
        let (b, _) = dubiner(4, [0.1, 0.6]);
        for i in 0..b.len() {
            assert!((a[i] - b[i]).abs() < 1e-14);
        }
    }
}
