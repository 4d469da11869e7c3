//! Gauss rules on the unit interval and collapsed (Duffy) rules on the reference triangle.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::Vec2;

/// Quadrature rule with positive weights.
#[derive(Debug, Clone)]
pub struct QuadRule<P> {
    pub points: Vec<P>,
    pub weights: Vec<f64>,
    /// Polynomial degree integrated exactly.
    pub degree: usize,
}

/// Rule on the interval `[0, 1]`.
pub type IntervalRule = QuadRule<f64>;
/// Rule on the reference triangle `(0,0), (1,0), (0,1)`.
pub type TriangleRule = QuadRule<Vec2>;

impl<P> QuadRule<P> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let n = NonZeroUsize::new(n.max(1)).expect("n >= 1");
    let rule = GaussLegendre::new(n);
    let mut pairs: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (*x, *w)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Gauss-Legendre rule on `[0, 1]` exact for polynomials of the given degree.
/// Points are sorted increasingly and symmetric about 1/2.
pub fn interval_rule(degree: usize) -> IntervalRule {
    let n = degree / 2 + 1;
    let (x, w) = gauss_legendre(n);
    let mut points: Vec<f64> = x.iter().map(|&x| 0.5 * (x + 1.0)).collect();
    // enforce exact mirror symmetry so both sides of a facet see the same points
    for i in 0..n / 2 {
        let a = 0.5 * (points[i] + 1.0 - points[n - 1 - i]);
        points[i] = a;
        points[n - 1 - i] = 1.0 - a;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.5;
    }
    let mut weights: Vec<f64> = w.iter().map(|&w| 0.5 * w).collect();
    for i in 0..n / 2 {
        let a = 0.5 * (weights[i] + weights[n - 1 - i]);
        weights[i] = a;
        weights[n - 1 - i] = a;
    }
    QuadRule { points, weights, degree: 2 * n - 1 }
}

/// Collapsed-coordinate rule on the reference triangle exact for the given degree.
///
/// Uses `x = (1 + a)(1 - b)/4`, `y = (1 + b)/2` with Gauss-Legendre in `a` and `b`;
/// the Duffy factor `(1 - b)/8` raises the degree in `b` by one.
pub fn triangle_rule(degree: usize) -> TriangleRule {
    let na = degree / 2 + 1;
    let nb = degree.div_ceil(2) + 1;
    let (xa, wa) = gauss_legendre(na);
    let (xb, wb) = gauss_legendre(nb);
    let mut points = Vec::with_capacity(na * nb);
    let mut weights = Vec::with_capacity(na * nb);
    for (b, wbj) in xb.iter().zip(&wb) {
        for (a, wai) in xa.iter().zip(&wa) {
            let y = 0.5 * (1.0 + b);
            let x = 0.25 * (1.0 + a) * (1.0 - b);
            points.push([x, y]);
            weights.push(wai * wbj * (1.0 - b) / 8.0);
        }
    }
    QuadRule { points, weights, degree: (2 * na - 1).min(2 * nb - 2) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }

    #[test]
    fn interval_exactness() {
        for d in 0..30 {
            let r = interval_rule(d);
            assert!(r.degree >= d);
            assert!(r.weights.iter().all(|&w| w > 0.0));
            for p in 0..=d {
                let s: f64 = r.points.iter().zip(&r.weights).map(|(t, w)| w * t.powi(p as i32)).sum();
                assert!((s - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "d={d} p={p}");
            }
        }
        let r = interval_rule(3);
        assert_eq!(r.len(), 2);
        let s: f64 = r.points.iter().zip(&r.weights).map(|(t, w)| w * t.powi(3)).sum();
        assert!((s - 0.25).abs() < 1e-15);
    }

    #[test]
    fn triangle_exactness() {
        for d in 0..=36 {
            let r = triangle_rule(d);
            assert!(r.degree >= d);
            assert!(r.weights.iter().all(|&w| w > 0.0));
            for i in 0..=d {
                for j in 0..=d - i {
                    let s: f64 = r
                        .points
                        .iter()
                        .zip(&r.weights)
                        .map(|(p, w)| w * p[0].powi(i as i32) * p[1].powi(j as i32))
                        .sum();
                    let exact = factorial(i) * factorial(j) / factorial(i + j + 2);
                    assert!((s - exact).abs() < 1e-13, "d={d} i={i} j={j}");
                }
            }
        }
        let r = triangle_rule(2);
        let s: f64 = r.points.iter().zip(&r.weights).map(|(p, w)| w * p[0] * p[0]).sum();
        assert!((s - 1.0 / 12.0).abs() < 1e-15);
    }
}
