//! Explicit convection subcycling and the pseudo-time iteration for implicit convection.

use crate::error::{Error, Result};
use crate::forms::{BoundaryTrace, Discretization};

/// Stable explicit step for convection at speed `u_max`, capped at `interval`.
pub fn cfl_substep(u_max: f64, h_min: f64, k: usize, safety: f64, interval: f64) -> f64 {
    if u_max <= 0.0 {
        return interval;
    }
    (safety * h_min / ((2 * k + 1) as f64 * u_max)).min(interval)
}

/// Convection velocity `ú(s) = base + (s − t0) · slope` in W coefficients.
#[derive(Debug, Clone)]
pub struct Extrapolation {
    pub t0: f64,
    pub base: Vec<f64>,
    pub slope: Option<Vec<f64>>,
}

impl Extrapolation {
    pub fn constant(t0: f64, base: Vec<f64>) -> Self {
        Extrapolation { t0, base, slope: None }
    }

    /// Line through `(t_a, a)` and `(t_b, b)`.
    pub fn linear(t_a: f64, a: &[f64], t_b: f64, b: &[f64]) -> Self {
        let slope = a.iter().zip(b).map(|(x, y)| (y - x) / (t_b - t_a)).collect();
        Extrapolation { t0: t_b, base: b.to_vec(), slope: Some(slope) }
    }

    pub fn at(&self, s: f64) -> Vec<f64> {
        match &self.slope {
            None => self.base.clone(),
            Some(d) => self.base.iter().zip(d).map(|(b, d)| b + (s - self.t0) * d).collect(),
        }
    }
}

/// `−M_V⁻¹ C(ú(s)) v`.
fn rate(disc: &Discretization, u: &[f64], v: &[f64], bc: &BoundaryTrace) -> Vec<f64> {
    let c = disc.convection.apply(&disc.spaces, u, v, bc);
    let mut r = disc.transfer.solve_mv(&c);
    r.iter_mut().for_each(|x| *x = -*x);
    r
}

/// Largest velocity magnitude the extrapolation reaches on `[t1, t2]`.
pub fn extrapolated_max_velocity(disc: &Discretization, ext: &Extrapolation, t1: f64, t2: f64) -> f64 {
    let field = |c: Vec<f64>| crate::fespace::FEField::new(disc.spaces.w.clone(), c).expect("W coefficients");
    let a = crate::fespace::max_velocity(&field(ext.at(t1)));
    if ext.slope.is_none() {
        return a;
    }
    a.max(crate::fespace::max_velocity(&field(ext.at(t2))))
}

/// Propagation `v(t2)` of `∂v/∂s + M_V⁻¹ C(ú(s)) v = 0`, `v(t1) = v0`, by SSP-RK2 substeps.
///
/// `bc(s)` gives the convection boundary treatment at pseudo time `s`. Returns the
/// result and the number of substeps.
pub fn propagate_convection<'a>(
    disc: &Discretization,
    v0: &[f64],
    t1: f64,
    t2: f64,
    ext: &Extrapolation,
    safety: f64,
    bc: &dyn Fn(f64) -> BoundaryTrace<'a>,
) -> Result<(Vec<f64>, usize)> {
    let interval = t2 - t1;
    if interval <= 0.0 {
        return Ok((v0.to_vec(), 0));
    }
    let u_max = extrapolated_max_velocity(disc, ext, t1, t2);
    let ds_max = cfl_substep(u_max, disc.spaces.mesh.min_height(), disc.spaces.k, safety, interval);
    let n = (interval / ds_max - 1e-12).ceil().max(1.0) as usize;
    let ds = interval / n as f64;
    let norm0 = v0.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut v = v0.to_vec();
    for i in 0..n {
        let s = t1 + i as f64 * ds;
        let u0 = ext.at(s);
        let k1 = rate(disc, &u0, &v, &bc(s));
        let v1: Vec<f64> = v.iter().zip(&k1).map(|(a, b)| a + ds * b).collect();
        let u1 = ext.at(s + ds);
        let k2 = rate(disc, &u1, &v1, &bc(s + ds));
        for ((x, a), b) in v.iter_mut().zip(&v1).zip(&k2) {
            *x = 0.5 * (*x + a + ds * b);
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !norm.is_finite() || norm > 1e6 * norm0.max(1.0) {
        return Err(Error::Unstable(format!("convection propagation blew up (norm {norm:e})")));
    }
    Ok((v, n))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RichardsonConfig {
    /// Required reduction of the initial residual.
    pub rho: f64,
    pub max_iterations: usize,
}

impl Default for RichardsonConfig {
    fn default() -> Self {
        RichardsonConfig { rho: 1e-3, max_iterations: 500 }
    }
}

/// Solves `v + τ* M_V⁻¹ C v = g*` by damped Richardson (explicit pseudo-time) iteration
/// starting from `g*`. Returns the solution and the number of residual evaluations.
///
/// `ds_cfl` is the explicit convection step limit; the pseudo-time step is
/// `1 / (1 + τ*/ds_cfl)` and is halved whenever the residual grows.
pub fn pseudo_time_solve(
    disc: &Discretization,
    u: &[f64],
    bc: &BoundaryTrace,
    g_star: &[f64],
    tau_star: f64,
    ds_cfl: f64,
    cfg: &RichardsonConfig,
) -> Result<(Vec<f64>, usize)> {
    let norm = |r: &[f64]| {
        let m = disc.transfer.apply_mv(r);
        r.iter().zip(&m).map(|(a, b)| a * b).sum::<f64>().sqrt()
    };
    let mut ds = if ds_cfl.is_finite() { 1.0 / (1.0 + tau_star / ds_cfl) } else { 1.0 };
    let mut v = g_star.to_vec();
    let mut r0 = None;
    let mut evaluations = 0;
    let mut ratio = f64::INFINITY;
    while evaluations < cfg.max_iterations {
        evaluations += 1;
        let cv = if tau_star == 0.0 { vec![0.0; v.len()] } else { rate(disc, u, &v, bc) };
        // g* − v − τ* M⁻¹ C v
        let r: Vec<f64> = g_star.iter().zip(&v).zip(&cv).map(|((g, x), c)| g - x + tau_star * c).collect();
        let nr = norm(&r);
        let init = *r0.get_or_insert(nr);
        if nr <= cfg.rho * init || nr == 0.0 {
            return Ok((v, evaluations));
        }
        ratio = nr / init;
        if ratio > 2.0 {
            // unstable pseudo step: restart with half the step
            ds *= 0.5;
            v.copy_from_slice(g_star);
            continue;
        }
        for (x, d) in v.iter_mut().zip(&r) {
            *x += ds * d;
        }
    }
    Err(Error::PseudoTimeNotConverged { iterations: evaluations, ratio })
}
