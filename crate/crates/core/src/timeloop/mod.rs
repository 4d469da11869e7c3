//! Operator-splitting time integrators for the semidiscrete Navier-Stokes system.
//!
//! Every step ends with a Stokes-Brinkman solve, so each step value is exactly
//! divergence-free.

mod propagate;
mod tableau;

use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

pub use propagate::{
    cfl_substep, extrapolated_max_velocity, propagate_convection, pseudo_time_solve, Extrapolation, RichardsonConfig,
};
pub use tableau::ImexTableau;

use crate::error::{Error, Result};
use crate::fespace::{max_divergence, max_velocity, set_dirichlet, FEField};
use crate::forms::{assemble_load, BoundaryTrace, Discretization};
use crate::linsys::{StokesSolution, SystemCache};
use crate::Vec2;

/// Time-dependent vector data `(x, t) ↦ v`.
pub type TimeVectorFn = Arc<dyn Fn(Vec2, f64) -> Vec2 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Scheme {
    ImexEuler,
    ImexRk2,
    OifsEuler,
    OifsBdf2,
    FracTheta,
}

impl Scheme {
    pub const ALL: [Scheme; 5] =
        [Scheme::ImexEuler, Scheme::ImexRk2, Scheme::OifsEuler, Scheme::OifsBdf2, Scheme::FracTheta];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::ImexEuler => "imex-euler",
            Scheme::ImexRk2 => "imex-rk2",
            Scheme::OifsEuler => "oifs-euler",
            Scheme::OifsBdf2 => "oifs-bdf2",
            Scheme::FracTheta => "frac-theta",
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Scheme> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == key)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scheme '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub richardson: RichardsonConfig,
    pub cfl_safety: f64,
    /// Record `max |div u|` after every step.
    pub check_divergence: bool,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, dt: f64) -> Self {
        SchemeConfig { scheme, dt, richardson: RichardsonConfig::default(), cfl_safety: 0.5, check_divergence: true }
    }

    /// `θ = 1 − 1/√2`
    pub fn theta() -> f64 {
        1.0 - 0.5f64.sqrt()
    }

    /// `θ* = 1 − 2θ`
    pub fn theta_star() -> f64 {
        1.0 - 2.0 * Self::theta()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidParameter(format!("CFL safety must lie in (0, 1], got {}", self.cfl_safety)));
        }
        if !(self.richardson.rho > 0.0 && self.richardson.rho < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Richardson factor must lie in (0, 1), got {}",
                self.richardson.rho
            )));
        }
        Ok(())
    }
}

/// Boundary and volume data of a flow problem.
#[derive(Clone)]
pub struct FlowProblem {
    pub disc: Arc<Discretization>,
    /// Labels carrying velocity Dirichlet data; other boundary facets are natural outflow.
    pub dirichlet_labels: Vec<String>,
    pub u_d: TimeVectorFn,
    pub force: Option<TimeVectorFn>,
}

impl FlowProblem {
    fn labels(&self) -> Vec<&str> {
        self.dirichlet_labels.iter().map(String::as_str).collect()
    }

    /// True if every boundary facet carries Dirichlet data (pressure fixed up to a constant).
    pub fn is_enclosed(&self) -> bool {
        let mesh = &self.disc.spaces.mesh;
        mesh.facets
            .iter()
            .filter(|f| f.is_boundary())
            .all(|f| f.label.as_ref().is_some_and(|l| self.dirichlet_labels.contains(l)))
    }
}

/// Fields at the current time.
#[derive(Debug, Clone)]
pub struct TimeState {
    pub t: f64,
    pub step: usize,
    /// W coefficients.
    pub w: Vec<f64>,
    /// Facet coefficients.
    pub f: Vec<f64>,
    pub p: Vec<f64>,
    /// W coefficients one step back (multistep schemes).
    pub previous: Option<Vec<f64>>,
    /// Functional `g` of the latest fractional step (V functional).
    pub g: Option<Vec<f64>>,
}

/// Per-step diagnostics.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct StepInfo {
    pub t: f64,
    pub scheme: Scheme,
    pub stage_seconds: Vec<f64>,
    pub richardson_iterations: usize,
    pub substeps: usize,
    pub max_divergence: f64,
    pub max_velocity: f64,
}

/// Writes the step log as CSV.
pub fn write_step_log(out: &mut impl Write, log: &[StepInfo]) -> Result<()> {
    writeln!(out, "t,scheme,stage_seconds,richardson_iterations,substeps,max_divergence,max_velocity")?;
    for s in log {
        let stages: Vec<String> = s.stage_seconds.iter().map(|x| format!("{x:.6}")).collect();
        writeln!(
            out,
            "{},{},{},{},{},{:e},{:e}",
            s.t,
            s.scheme.name(),
            stages.join(";"),
            s.richardson_iterations,
            s.substeps,
            s.max_divergence,
            s.max_velocity
        )?;
    }
    Ok(())
}

/// Time integration driver owning the state and the factorization cache.
pub struct Simulation {
    pub problem: FlowProblem,
    pub cfg: SchemeConfig,
    pub state: TimeState,
    pub log: Vec<StepInfo>,
    cache: SystemCache,
}

struct StepTotals {
    stages: Vec<f64>,
    richardson: usize,
    substeps: usize,
}

impl Simulation {
    /// Zero initial state at `t = 0`.
    pub fn new(problem: FlowProblem, cfg: SchemeConfig) -> Result<Simulation> {
        cfg.validate()?;
        let disc = problem.disc.clone();
        let labels = problem.labels();
        let zero = |_: Vec2, _: f64| [0.0, 0.0];
        let wm = set_dirichlet(&disc.spaces.w, &labels, &zero, 0.0)?.mask;
        let fm = set_dirichlet(disc.facet_space(), &labels, &zero, 0.0)?.mask;
        let cache = SystemCache::new(wm, fm, problem.is_enclosed());
        let state = TimeState {
            t: 0.0,
            step: 0,
            w: vec![0.0; disc.n_w()],
            f: vec![0.0; disc.n_f()],
            p: vec![0.0; disc.n_q()],
            previous: None,
            g: None,
        };
        Ok(Simulation { problem, cfg, state, log: Vec::new(), cache })
    }

    pub fn disc(&self) -> &Discretization {
        &self.problem.disc
    }

    /// Stokes factorizations performed so far.
    pub fn factorizations(&self) -> usize {
        self.cache.factorizations()
    }

    /// Sets the velocity state (W and facet coefficients) and clears the history.
    pub fn set_velocity(&mut self, w: Vec<f64>, f: Vec<f64>) -> Result<()> {
        if w.len() != self.disc().n_w() || f.len() != self.disc().n_f() {
            return Err(Error::InvalidParameter("velocity coefficient lengths do not match the spaces".into()));
        }
        self.state.w = w;
        self.state.f = f;
        self.state.previous = None;
        Ok(())
    }

    /// Replaces the state by the steady Stokes solution with the data at the current time.
    pub fn solve_steady_stokes(&mut self) -> Result<()> {
        let t = self.state.t;
        let sol = self.stokes(0.0, vec![0.0; self.disc().n_w()], t)?;
        self.set_solution(sol);
        self.state.previous = None;
        Ok(())
    }

    /// Solves `(τ⁻¹ M + A) u + D p = rhs + f(t)` with Dirichlet data at `t`.
    fn stokes(&mut self, tau_inv: f64, mut rhs_w: Vec<f64>, t: f64) -> Result<StokesSolution> {
        let disc = self.problem.disc.clone();
        if let Some(f) = &self.problem.force {
            let load = assemble_load(&disc.spaces, &|x| f(x, t));
            rhs_w.iter_mut().zip(&load).for_each(|(a, b)| *a += b);
        }
        let labels = self.problem.labels();
        let u_d = &*self.problem.u_d;
        let dw = set_dirichlet(&disc.spaces.w, &labels, u_d, t)?;
        let df = set_dirichlet(disc.facet_space(), &labels, u_d, t)?;
        let sys = self.cache.get(&disc, tau_inv)?;
        sys.solve(&rhs_w, &vec![0.0; disc.n_f()], &vec![0.0; disc.n_q()], &dw.values, &df.values)
    }

    fn set_solution(&mut self, sol: StokesSolution) {
        self.state.w = sol.w;
        self.state.f = sol.f;
        self.state.p = sol.p;
    }

    /// `C(u; v)` as a V functional with boundary data at `t`.
    fn convection(&self, u: &[f64], v: &[f64], t: f64) -> Vec<f64> {
        let labels = self.problem.labels();
        let bc = BoundaryTrace::Dirichlet { labels: &labels, data: &*self.problem.u_d, t };
        self.disc().convection.apply(&self.disc().spaces, u, v, &bc)
    }

    /// `−Iᵀ C(u) I u` as a W functional.
    fn explicit_convection(&self, u: &[f64], t: f64) -> Vec<f64> {
        let d = self.disc();
        let iu = d.transfer.apply_i(&d.spaces, u);
        let c = self.convection(u, &iu, t);
        d.transfer.apply_i_t(&d.spaces, &c).into_iter().map(|x| -x).collect()
    }

    fn mass(&self, w: &[f64]) -> Vec<f64> {
        self.disc().blocks.apply_mass(&self.disc().spaces, w)
    }

    fn propagate(&self, v0: &[f64], t1: f64, t2: f64, ext: &Extrapolation) -> Result<(Vec<f64>, usize)> {
        let labels = self.problem.labels();
        let u_d = &*self.problem.u_d;
        let bc = |s: f64| BoundaryTrace::Dirichlet { labels: &labels, data: u_d, t: s };
        propagate_convection(self.disc(), v0, t1, t2, ext, self.cfg.cfl_safety, &bc)
    }

    /// Advances one step of the configured scheme.
    pub fn step(&mut self) -> Result<StepInfo> {
        let w_old = self.state.w.clone();
        let totals = match self.cfg.scheme {
            Scheme::ImexEuler => self.step_imex_euler()?,
            Scheme::ImexRk2 => self.step_imex_rk2()?,
            Scheme::OifsEuler => self.step_oifs_euler()?,
            Scheme::OifsBdf2 => match self.state.previous.is_some() {
                true => self.step_oifs_bdf2()?,
                false => self.step_oifs_euler()?,
            },
            Scheme::FracTheta => self.step_frac_theta()?,
        };
        self.state.previous = Some(w_old);
        self.state.t += self.cfg.dt;
        self.state.step += 1;
        let field = FEField::new(self.disc().spaces.w.clone(), self.state.w.clone())?;
        let umax = max_velocity(&field);
        if !umax.is_finite() {
            return Err(Error::Unstable(format!("non-finite velocity at t = {}", self.state.t)));
        }
        let info = StepInfo {
            t: self.state.t,
            scheme: self.cfg.scheme,
            stage_seconds: totals.stages,
            richardson_iterations: totals.richardson,
            substeps: totals.substeps,
            max_divergence: if self.cfg.check_divergence { max_divergence(&field) } else { f64::NAN },
            max_velocity: umax,
        };
        self.log.push(info.clone());
        Ok(info)
    }

    /// Runs `n` steps, calling `observe` after each.
    pub fn run(&mut self, n: usize, mut observe: impl FnMut(&Simulation, &StepInfo) -> Result<()>) -> Result<()> {
        for _ in 0..n {
            let info = self.step()?;
            observe(self, &info)?;
        }
        Ok(())
    }

    /// `½ uᵀ M_U u`.
    pub fn kinetic_energy(&self) -> f64 {
        let m = self.mass(&self.state.w);
        0.5 * self.state.w.iter().zip(&m).map(|(a, b)| a * b).sum::<f64>()
    }

    fn step_imex_euler(&mut self) -> Result<StepTotals> {
        let clock = Instant::now();
        let (t, dt) = (self.state.t, self.cfg.dt);
        let u = self.state.w.clone();
        let c = self.explicit_convection(&u, t);
        let rhs: Vec<f64> = self.mass(&u).iter().zip(&c).map(|(m, c)| m / dt + c).collect();
        let sol = self.stokes(1.0 / dt, rhs, t + dt)?;
        self.set_solution(sol);
        Ok(StepTotals { stages: vec![clock.elapsed().as_secs_f64()], richardson: 0, substeps: 0 })
    }

    fn step_imex_rk2(&mut self) -> Result<StepTotals> {
        let tab = ImexTableau::ars222();
        let g = tab.gamma();
        let d = tab.explicit_a[2][0];
        let (t, dt) = (self.state.t, self.cfg.dt);
        let gdt = g * dt;
        let un = self.state.w.clone();
        let mun = self.mass(&un);
        let mut stages = Vec::new();
        let clock = Instant::now();
        let fe1 = self.explicit_convection(&un, t);
        let rhs2: Vec<f64> = mun.iter().zip(&fe1).map(|(m, e)| m / gdt + e).collect();
        let s2 = self.stokes(1.0 / gdt, rhs2, t + tab.c[1] * dt)?;
        stages.push(clock.elapsed().as_secs_f64());
        let clock = Instant::now();
        let u2 = s2.w;
        let fe2 = self.explicit_convection(&u2, t + tab.c[1] * dt);
        let mu2 = self.mass(&u2);
        // implicit stage value from the stage-2 equation
        let fi2: Vec<f64> = mu2.iter().zip(&mun).zip(&fe1).map(|((a, b), e)| (a - b) / gdt - e).collect();
        let rhs3: Vec<f64> = (0..un.len())
            .map(|i| (mun[i] + dt * (d * fe1[i] + (1.0 - d) * fe2[i] + (1.0 - g) * fi2[i])) / gdt)
            .collect();
        let s3 = self.stokes(1.0 / gdt, rhs3, t + dt)?;
        stages.push(clock.elapsed().as_secs_f64());
        self.set_solution(s3);
        Ok(StepTotals { stages, richardson: 0, substeps: 0 })
    }

    fn step_oifs_euler(&mut self) -> Result<StepTotals> {
        let clock = Instant::now();
        let (t, dt) = (self.state.t, self.cfg.dt);
        let d = self.problem.disc.clone();
        let un = self.state.w.clone();
        let v0 = d.transfer.apply_i(&d.spaces, &un);
        let (v, n) = self.propagate(&v0, t, t + dt, &Extrapolation::constant(t, un))?;
        let rhs: Vec<f64> = d.transfer.apply_muv_t(&d.spaces, &v).into_iter().map(|x| x / dt).collect();
        let sol = self.stokes(1.0 / dt, rhs, t + dt)?;
        self.set_solution(sol);
        Ok(StepTotals { stages: vec![clock.elapsed().as_secs_f64()], richardson: 0, substeps: n })
    }

    fn step_oifs_bdf2(&mut self) -> Result<StepTotals> {
        let clock = Instant::now();
        let (t, dt) = (self.state.t, self.cfg.dt);
        let d = self.problem.disc.clone();
        let un = self.state.w.clone();
        let um = self.state.previous.clone().expect("BDF2 history");
        let ext = Extrapolation::linear(t - dt, &um, t, &un);
        let (v1, n1) = self.propagate(&d.transfer.apply_i(&d.spaces, &un), t, t + dt, &ext)?;
        let (v2, n2) = self.propagate(&d.transfer.apply_i(&d.spaces, &um), t - dt, t + dt, &ext)?;
        let v: Vec<f64> = v1.iter().zip(&v2).map(|(a, b)| (2.0 * a - 0.5 * b) / dt).collect();
        let rhs = d.transfer.apply_muv_t(&d.spaces, &v);
        let sol = self.stokes(1.5 / dt, rhs, t + dt)?;
        self.set_solution(sol);
        Ok(StepTotals { stages: vec![clock.elapsed().as_secs_f64()], richardson: 0, substeps: n1 + n2 })
    }

    fn step_frac_theta(&mut self) -> Result<StepTotals> {
        let th = SchemeConfig::theta();
        let ths = SchemeConfig::theta_star();
        let (t0, dt) = (self.state.t, self.cfg.dt);
        let tau = th * dt;
        let (t1, t2, t3) = (t0 + tau, t0 + (th + ths) * dt, t0 + dt);
        let d = self.problem.disc.clone();
        let sp = &d.spaces;
        let mut stages = Vec::new();

        // Step 1: implicit Stokes, explicit convection of u0
        let clock = Instant::now();
        let u0 = self.state.w.clone();
        let iu0 = d.transfer.apply_i(sp, &u0);
        let c0 = self.convection(&u0, &iu0, t0);
        let ct0 = d.transfer.apply_i_t(sp, &c0);
        let rhs: Vec<f64> = self.mass(&u0).iter().zip(&ct0).map(|(m, c)| m / tau - c).collect();
        let s1 = self.stokes(1.0 / tau, rhs, t1)?;
        let u1 = s1.w.clone();
        stages.push(clock.elapsed().as_secs_f64());

        // g = M_UV (u1 − u0) / (θΔt) + C(u0) I u0
        let clock = Instant::now();
        let du: Vec<f64> = u1.iter().zip(&u0).map(|(a, b)| a - b).collect();
        let g: Vec<f64> = d.transfer.apply_muv(sp, &du).iter().zip(&c0).map(|(m, c)| m / tau + c).collect();

        // Step 2: implicit convection in V with velocity extrapolated to t2
        let tau_star = ths * dt;
        let ext = Extrapolation::linear(t0, &u0, t1, &u1);
        let u_conv = ext.at(t2);
        let mg = d.transfer.solve_mv(&g);
        let iu1 = d.transfer.apply_i(sp, &u1);
        let g_star: Vec<f64> = iu1.iter().zip(&mg).map(|(a, b)| a + tau_star * b).collect();
        let u_max = {
            let f = FEField::new(sp.w.clone(), u_conv.clone())?;
            max_velocity(&f)
        };
        let ds_cfl = cfl_substep(u_max, sp.mesh.min_height(), sp.k, self.cfg.cfl_safety, f64::INFINITY);
        let labels = self.problem.labels();
        let bc = BoundaryTrace::Dirichlet { labels: &labels, data: &*self.problem.u_d, t: t2 };
        let (v2, iterations) = pseudo_time_solve(&d, &u_conv, &bc, &g_star, tau_star, ds_cfl, &self.cfg.richardson)?;
        stages.push(clock.elapsed().as_secs_f64());

        // Step 3: implicit Stokes, explicit convection of v2
        let clock = Instant::now();
        let c2 = self.convection(&u_conv, &v2, t2);
        let ct2 = d.transfer.apply_i_t(sp, &c2);
        let mv2 = d.transfer.apply_muv_t(sp, &v2);
        let rhs: Vec<f64> = mv2.iter().zip(&ct2).map(|(m, c)| m / tau - c).collect();
        let s3 = self.stokes(1.0 / tau, rhs, t3)?;
        self.set_solution(s3);
        self.state.g = Some(g);
        stages.push(clock.elapsed().as_secs_f64());
        Ok(StepTotals { stages, richardson: iterations, substeps: 0 })
    }
}

#[cfg(test)]
mod tests;
