//! Sparse direct solver interface and the default faer LU backend.

use std::fmt::Debug;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};

/// A factorized sparse matrix.
pub trait Factorization: Send + Sync {
    fn solve(&self, b: &[f64]) -> Vec<f64>;
}

/// Factorizes square sparse matrices given as merged `(row, col, value)` triplets.
pub trait SparseSolver: Send + Sync + Debug {
    fn factor(&self, n: usize, entries: &[(usize, usize, f64)]) -> Result<Box<dyn Factorization>>;
}

/// Sparse LU with partial pivoting.
#[derive(Debug, Clone, Copy, Default)]
pub struct FaerLu;

struct FaerLuFactor(faer::sparse::linalg::solvers::Lu<usize, f64>);

impl Factorization for FaerLuFactor {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = Mat::from_fn(b.len(), 1, |i, _| b[i]);
        self.0.solve_in_place(x.as_mut());
        (0..b.len()).map(|i| x[(i, 0)]).collect()
    }
}

impl SparseSolver for FaerLu {
    fn factor(&self, n: usize, entries: &[(usize, usize, f64)]) -> Result<Box<dyn Factorization>> {
        let trip: Vec<_> = entries.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let lu = a.sp_lu().map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(Box::new(FaerLuFactor(lu)))
    }
}

/// Sorts triplets and sums duplicates.
pub fn merge_triplets(mut t: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    t.sort_unstable_by_key(|&(r, c, _)| (c, r));
    let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(t.len());
    for (r, c, v) in t {
        match out.last_mut() {
            Some(last) if last.0 == r && last.1 == c => last.2 += v,
            _ => out.push((r, c, v)),
        }
    }
    out
}
