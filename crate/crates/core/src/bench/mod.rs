//! Benchmark problems, error norms, force functionals and convergence studies.

mod cases;
mod exact;
mod lbb;
mod manufactured;
mod norms;

use std::sync::Arc;

pub use cases::{
    check_divergence, convergence_study, force_extrema, kovasznay_mesh, kovasznay_steady, lift_period, observed_rates,
    potential_mesh, potential_solve, run_channel, write_errors_csv, ChannelConfig, ForceSample, LevelResult,
    SteadyCase, StudyConfig, DIVERGENCE_TOLERANCE, KOVASZNAY_DT, KOVASZNAY_STEPS,
};
pub use exact::{
    kovasznay_exact, kovasznay_lambda, potential_exact, potential_velocity, ExactSolution, PointMatrixFn,
    PointScalarFn, PointVectorFn,
};
pub use lbb::lbb_constant;
pub use manufactured::{manufactured_force, manufactured_velocity, time_order_study, TimeOrderConfig, TimeOrderRow};
pub use norms::{compute_errors, drag_lift, ErrorNorms};

use crate::error::Result;
use crate::linsys::{sparsity_report, SparsityMethod, SparsityReport};
use crate::mesh2d::{generate_structured, Mesh};

/// Structured unit-square mesh with 512 triangles for sparsity comparisons.
pub fn sparsity_mesh() -> Result<Mesh> {
    generate_structured((0.0, 0.0, 1.0, 1.0), 16, 16)
}

/// Std-DG estimate, HDG and projected-jump HDG statistics for each degree.
pub fn sparsity_table(mesh: &Arc<Mesh>, ks: &[usize]) -> Result<Vec<SparsityReport>> {
    let mut out = Vec::new();
    for &k in ks {
        for m in [SparsityMethod::StdDgEstimate, SparsityMethod::Hdg, SparsityMethod::Phdg] {
            out.push(sparsity_report(mesh, k, m)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
