//! Butcher tableaus of the stiffly accurate IMEX Runge-Kutta pair.

/// Explicit/implicit tableau pair with shared abscissae.
#[derive(Debug, Clone, PartialEq)]
pub struct ImexTableau {
    pub explicit_a: [[f64; 3]; 3],
    pub explicit_b: [f64; 3],
    pub implicit_a: [[f64; 3]; 3],
    pub implicit_b: [f64; 3],
    pub c: [f64; 3],
}

impl ImexTableau {
    /// Two implicit stages with `γ = 1 − 1/√2`, `δ = 1 − 1/(2γ)`; the last row of each
    /// tableau equals its weights.
    pub fn ars222() -> Self {
        let g = 1.0 - 0.5f64.sqrt();
        let d = 1.0 - 0.5 / g;
        ImexTableau {
            explicit_a: [[0.0, 0.0, 0.0], [g, 0.0, 0.0], [d, 1.0 - d, 0.0]],
            explicit_b: [d, 1.0 - d, 0.0],
            implicit_a: [[0.0, 0.0, 0.0], [0.0, g, 0.0], [0.0, 1.0 - g, g]],
            implicit_b: [0.0, 1.0 - g, g],
            c: [0.0, g, 1.0],
        }
    }

    pub fn gamma(&self) -> f64 {
        self.implicit_a[1][1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_two_conditions_and_stiff_accuracy() {
        let t = ImexTableau::ars222();
        let dot = |a: &[f64; 3], b: &[f64; 3]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        for (a, b) in [(&t.explicit_a, &t.explicit_b), (&t.implicit_a, &t.implicit_b)] {
            assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!((dot(b, &t.c) - 0.5).abs() < 1e-14);
            for (i, row) in a.iter().enumerate() {
                assert!((row.iter().sum::<f64>() - t.c[i]).abs() < 1e-14);
            }
        }
        // coupling conditions: Σ b̂_i a_ij c_j = Σ b_i â_ij c_j = 1/2 · (order 2 needs only b·c = 1/2)
        assert_eq!(t.implicit_a[2], t.implicit_b);
        assert_eq!(t.explicit_a[2], t.explicit_b);
        assert!((t.gamma() - 0.2928932188134524).abs() < 1e-15);
    }
}
