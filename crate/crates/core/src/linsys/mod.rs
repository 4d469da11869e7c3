//! Static condensation, sparse direct solves and sparsity statistics.

mod condense;
mod solver;
mod sparsity;

use std::sync::Arc;

pub use condense::{factorization_count, CoupledLayout, StokesSolution, StokesSystem};
pub use solver::{merge_triplets, Factorization, FaerLu, SparseSolver};
pub use sparsity::{sparsity_report, SparsityMethod, SparsityReport};

use crate::error::Result;
use crate::forms::Discretization;

/// Factorized systems keyed by `τ⁻¹`, reused across time steps.
#[derive(Debug)]
pub struct SystemCache {
    pub w_mask: Vec<bool>,
    pub f_mask: Vec<bool>,
    pub multiplier: bool,
    solver: Arc<dyn SparseSolver>,
    systems: Vec<(u64, Arc<StokesSystem>)>,
    factorizations: usize,
}

impl SystemCache {
    pub fn new(w_mask: Vec<bool>, f_mask: Vec<bool>, multiplier: bool) -> Self {
        Self::with_solver(w_mask, f_mask, multiplier, Arc::new(FaerLu))
    }

    pub fn with_solver(w_mask: Vec<bool>, f_mask: Vec<bool>, multiplier: bool, solver: Arc<dyn SparseSolver>) -> Self {
        SystemCache { w_mask, f_mask, multiplier, solver, systems: Vec::new(), factorizations: 0 }
    }

    pub fn get(&mut self, disc: &Discretization, tau_inv: f64) -> Result<Arc<StokesSystem>> {
        let key = tau_inv.to_bits();
        if let Some((_, s)) = self.systems.iter().find(|(k, _)| *k == key) {
            return Ok(s.clone());
        }
        let s = Arc::new(StokesSystem::new(disc, tau_inv, &self.w_mask, &self.f_mask, self.multiplier, &*self.solver)?);
        self.factorizations += 1;
        self.systems.push((key, s.clone()));
        Ok(s)
    }

    /// Number of factorizations performed through this cache.
    pub fn factorizations(&self) -> usize {
        self.factorizations
    }
}
