//! Unsteady manufactured flow for temporal convergence studies.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fespace::interpolate;
use crate::forms::{Discretization, FormConfig, JumpVariant};
use crate::mesh2d::generate_structured;
use crate::timeloop::{FlowProblem, Scheme, SchemeConfig, Simulation, TimeVectorFn};
use crate::{Mat2, Vec2};

/// Amplitude `a(t) = 1 + ½ sin(2πt)` of the stream function.
fn amplitude(t: f64) -> (f64, f64) {
    (1.0 + 0.5 * (2.0 * PI * t).sin(), PI * (2.0 * PI * t).cos())
}

/// Velocity `a(t) curl(sin²(πx) sin²(πy))` on the unit square; zero on the boundary.
pub fn manufactured_velocity(x: Vec2, t: f64) -> Vec2 {
    let (a, _) = amplitude(t);
    let (sx, sy) = ((PI * x[0]).sin(), (PI * x[1]).sin());
    [a * PI * sx * sx * (2.0 * PI * x[1]).sin(), -a * PI * (2.0 * PI * x[0]).sin() * sy * sy]
}

fn manufactured_gradient(x: Vec2, a: f64) -> Mat2 {
    let p2 = PI * PI;
    let (sx, sy) = ((PI * x[0]).sin(), (PI * x[1]).sin());
    let (s2x, c2x) = (2.0 * PI * x[0]).sin_cos();
    let (s2y, c2y) = (2.0 * PI * x[1]).sin_cos();
    [[a * p2 * s2x * s2y, 2.0 * a * p2 * sx * sx * c2y], [-2.0 * a * p2 * c2x * sy * sy, -a * p2 * s2x * s2y]]
}

/// Body force `∂_t u − νΔu + (u·∇)u` for the manufactured velocity with zero pressure.
pub fn manufactured_force(nu: f64) -> TimeVectorFn {
    Arc::new(move |x, t| {
        let (a, da) = amplitude(t);
        let u = manufactured_velocity(x, t);
        let g = manufactured_gradient(x, a);
        let p3 = PI * PI * PI;
        let (s2x, c2x) = (2.0 * PI * x[0]).sin_cos();
        let (s2y, c2y) = (2.0 * PI * x[1]).sin_cos();
        let lap = [a * p3 * s2y * (4.0 * c2x - 2.0), -a * p3 * s2x * (4.0 * c2y - 2.0)];
        [0, 1].map(|i| da / a * u[i] - nu * lap[i] + u[0] * g[i][0] + u[1] * g[i][1])
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TimeOrderConfig {
    pub scheme: Scheme,
    pub k: usize,
    /// Cells per side of the structured unit-square mesh.
    pub cells: usize,
    pub nu: f64,
    pub t_end: f64,
    /// Coarsest step; the study uses `dt0 / 2^j` for `j < levels`.
    pub dt0: f64,
    pub levels: usize,
    /// Reference step is the finest step divided by this factor.
    pub reference_factor: usize,
}

impl TimeOrderConfig {
    pub fn new(scheme: Scheme) -> Self {
        TimeOrderConfig { scheme, k: 4, cells: 4, nu: 0.1, t_end: 0.5, dt0: 0.025, levels: 5, reference_factor: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TimeOrderRow {
    pub dt: f64,
    /// Relative L² velocity difference to the reference run at `t_end`.
    pub error: f64,
    pub rate: Option<f64>,
}

fn run_to_end(disc: &Arc<Discretization>, cfg: &TimeOrderConfig, dt: f64, w0: &[f64], f0: &[f64]) -> Result<Vec<f64>> {
    let n = (cfg.t_end / dt).round() as usize;
    if n == 0 || ((n as f64) * dt - cfg.t_end).abs() > 1e-9 * cfg.t_end {
        return Err(Error::InvalidParameter(format!("step {dt} does not divide the interval {}", cfg.t_end)));
    }
    let problem = FlowProblem {
        disc: disc.clone(),
        dirichlet_labels: vec!["bottom".into(), "right".into(), "top".into(), "left".into()],
        u_d: Arc::new(manufactured_velocity),
        force: Some(manufactured_force(cfg.nu)),
    };
    let mut sc = SchemeConfig::new(cfg.scheme, dt);
    sc.richardson.rho = 1e-6;
    sc.check_divergence = false;
    let mut sim = Simulation::new(problem, sc)?;
    sim.set_velocity(w0.to_vec(), f0.to_vec())?;
    sim.run(n, |_, _| Ok(()))?;
    Ok(sim.state.w)
}

/// Errors against a fine-step reference run from the interpolated initial velocity.
pub fn time_order_study(cfg: &TimeOrderConfig) -> Result<Vec<TimeOrderRow>> {
    if cfg.levels == 0 || cfg.reference_factor < 2 {
        return Err(Error::InvalidParameter("time-order study needs levels ≥ 1 and a reference factor ≥ 2".into()));
    }
    let mesh = Arc::new(generate_structured((0.0, 0.0, 1.0, 1.0), cfg.cells, cfg.cells)?);
    let disc = Arc::new(Discretization::new(mesh, cfg.k, FormConfig::new(cfg.nu, cfg.k, JumpVariant::Projected))?);
    let u0 = |x: Vec2| manufactured_velocity(x, 0.0);
    let w0 = interpolate(&disc.spaces.w, &u0)?;
    let f0 = interpolate(disc.facet_space(), &u0)?;
    let dts: Vec<f64> = (0..cfg.levels).map(|j| cfg.dt0 / (1u64 << j) as f64).collect();
    let dt_ref = dts[cfg.levels - 1] / cfg.reference_factor as f64;
    let reference = run_to_end(&disc, cfg, dt_ref, &w0, &f0)?;
    let norm = |v: &[f64]| {
        let m = disc.blocks.apply_mass(&disc.spaces, v);
        v.iter().zip(&m).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
    };
    let ref_norm = norm(&reference);
    let mut rows: Vec<TimeOrderRow> = Vec::with_capacity(cfg.levels);
    for &dt in &dts {
        let w = run_to_end(&disc, cfg, dt, &w0, &f0)?;
        let diff: Vec<f64> = w.iter().zip(&reference).map(|(a, b)| a - b).collect();
        let error = norm(&diff) / ref_norm;
        let rate = rows.last().map(|r| (r.error / error).ln() / (r.dt / dt).ln());
        rows.push(TimeOrderRow { dt, error, rate });
    }
    Ok(rows)
}
