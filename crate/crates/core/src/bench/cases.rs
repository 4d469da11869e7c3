//! Steady convergence studies and the channel benchmark.

use std::io::Write;
use std::sync::Arc;

use super::exact::{kovasznay_exact, potential_exact, ExactSolution};
use super::norms::{compute_errors, drag_lift, ErrorNorms};
use crate::error::{Error, Result};
use crate::fespace::{max_divergence, max_velocity, set_dirichlet, FEField};
use crate::forms::{assemble_traction, Discretization, FormConfig, JumpVariant};
use crate::linsys::{FaerLu, StokesSolution, StokesSystem};
use crate::mesh2d::{
    channel_with_cylinder, generate_structured, obstacle_in_square, refine_uniform, ChannelParams, Mesh,
};
use crate::timeloop::{FlowProblem, Scheme, SchemeConfig, Simulation, TimeVectorFn};

/// Divergence tolerance relative to the maximum velocity.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-10;

/// Kovasznay time march: step count and size.
pub const KOVASZNAY_STEPS: usize = 50;
pub const KOVASZNAY_DT: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SteadyCase {
    /// Potential flow around the unit disk, Stokes, traction outflow.
    Potential,
    /// Kovasznay flow, Navier-Stokes, ν = 1.
    Kovasznay,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct StudyConfig {
    pub case: SteadyCase,
    pub k: usize,
    /// Number of meshes: the coarse mesh and `levels − 1` uniform refinements.
    pub levels: usize,
    pub variant: JumpVariant,
    /// Interior penalty; `None` uses the default `10 k²`.
    pub alpha: Option<f64>,
    /// Obstacle geometry order; `None` uses `min(k, 3)`.
    pub geometry_order: Option<usize>,
}

impl StudyConfig {
    pub fn new(case: SteadyCase, k: usize, levels: usize, variant: JumpVariant) -> Self {
        StudyConfig { case, k, levels, variant, alpha: None, geometry_order: None }
    }

    fn form(&self, nu: f64) -> FormConfig {
        let mut cfg = FormConfig::new(nu, self.k, self.variant);
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        cfg
    }
}

/// Errors and sizes on one mesh level.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LevelResult {
    pub level: usize,
    pub elements: usize,
    /// Maximum element diameter.
    pub h: f64,
    /// Velocity and pressure unknowns before condensation.
    pub ndof: usize,
    /// Globally coupled velocity unknowns (facet normal and tangential dofs).
    pub cdof: usize,
    pub errors: ErrorNorms,
    pub divergence_ratio: f64,
}

/// `max |div u| / max |u|`, rejected above [`DIVERGENCE_TOLERANCE`].
pub fn check_divergence(w: &FEField) -> Result<f64> {
    let umax = max_velocity(w);
    let ratio = if umax > 0.0 { max_divergence(w) / umax } else { 0.0 };
    if !(ratio <= DIVERGENCE_TOLERANCE) {
        return Err(Error::NotDivergenceFree(ratio));
    }
    Ok(ratio)
}

/// The 18-triangle coarse Kovasznay mesh on `[−½, 3/2] × [0, 2]`.
pub fn kovasznay_mesh() -> Result<Mesh> {
    generate_structured((-0.5, 0.0, 1.5, 2.0), 3, 3)
}

/// The 72-triangle potential-flow mesh around the unit disk in `[−2, 2]²`.
pub fn potential_mesh(g: usize) -> Result<Mesh> {
    obstacle_in_square(2.0, 1.0, 3, 3, g)
}

fn all_labels(mesh: &Mesh) -> Vec<String> {
    let mut l: Vec<String> = mesh.boundary_markers.values().cloned().collect();
    l.sort();
    l.dedup();
    l
}

/// Steady Kovasznay state: Stokes solve, then the IMEX Euler march.
pub fn kovasznay_steady(mesh: Arc<Mesh>, k: usize, form: FormConfig) -> Result<(Simulation, ExactSolution)> {
    let exact = kovasznay_exact(form.nu)?;
    let labels = all_labels(&mesh);
    let disc = Arc::new(Discretization::new(mesh, k, form)?);
    let problem = FlowProblem { disc, dirichlet_labels: labels, u_d: exact.dirichlet(), force: exact.time_force() };
    let mut sim = Simulation::new(problem, SchemeConfig::new(Scheme::ImexEuler, KOVASZNAY_DT))?;
    sim.solve_steady_stokes()?;
    sim.run(KOVASZNAY_STEPS, |_, _| Ok(()))?;
    Ok((sim, exact))
}

/// Steady Stokes potential flow with Dirichlet data except on `right`, where the exact
/// traction is imposed.
pub fn potential_solve(mesh: Arc<Mesh>, k: usize, form: FormConfig) -> Result<(Arc<Discretization>, StokesSolution)> {
    let exact = potential_exact();
    let disc = Arc::new(Discretization::new(mesh, k, form)?);
    let labels = ["obstacle", "left", "top", "bottom"];
    let u_d = exact.dirichlet();
    let dw = set_dirichlet(&disc.spaces.w, &labels, &*u_d, 0.0)?;
    let df = set_dirichlet(disc.facet_space(), &labels, &*u_d, 0.0)?;
    let nu = form.nu;
    let (bw, bf) = assemble_traction(&disc.spaces, form.variant, &["right"], &|x, n| exact.traction(nu, x, n))?;
    let sys = StokesSystem::new(&disc, 0.0, &dw.mask, &df.mask, false, &FaerLu)?;
    let sol = sys.solve(&bw, &bf, &vec![0.0; disc.n_q()], &dw.values, &df.values)?;
    Ok((disc, sol))
}

fn level_result(
    level: usize,
    disc: &Discretization,
    w: Vec<f64>,
    p: Vec<f64>,
    exact: &ExactSolution,
) -> Result<LevelResult> {
    let wf = FEField::new(disc.spaces.w.clone(), w)?;
    let pf = FEField::new(disc.spaces.q.clone(), p)?;
    let divergence_ratio = check_divergence(&wf)?;
    let errors = compute_errors(&wf, &pf, exact)?;
    let mesh = &disc.spaces.mesh;
    Ok(LevelResult {
        level,
        elements: mesh.n_elements(),
        h: mesh.max_diameter(),
        ndof: disc.n_w() + disc.n_f() + disc.n_q(),
        cdof: disc.spaces.w.n_facet_dofs() + disc.n_f(),
        errors,
        divergence_ratio,
    })
}

/// Solves on successively refined meshes; `observe` sees each level as it completes.
pub fn convergence_study(cfg: &StudyConfig, mut observe: impl FnMut(&LevelResult)) -> Result<Vec<LevelResult>> {
    if cfg.levels == 0 {
        return Err(Error::InvalidParameter("at least one mesh level is required".into()));
    }
    let mut mesh = match cfg.case {
        SteadyCase::Kovasznay => kovasznay_mesh()?,
        SteadyCase::Potential => potential_mesh(cfg.geometry_order.unwrap_or(cfg.k.min(3)))?,
    };
    let mut rows = Vec::with_capacity(cfg.levels);
    for level in 0..cfg.levels {
        if level > 0 {
            mesh = refine_uniform(&mesh)?;
        }
        let m = Arc::new(mesh.clone());
        let row = match cfg.case {
            SteadyCase::Kovasznay => {
                let (sim, exact) = kovasznay_steady(m, cfg.k, cfg.form(1.0))?;
                level_result(level, sim.disc(), sim.state.w.clone(), sim.state.p.clone(), &exact)?
            }
            SteadyCase::Potential => {
                let (disc, sol) = potential_solve(m, cfg.k, cfg.form(1.0))?;
                level_result(level, &disc, sol.w, sol.p, &potential_exact())?
            }
        };
        observe(&row);
        rows.push(row);
    }
    Ok(rows)
}

/// Observed orders `[L2u, H1u, L2p]` between consecutive levels (`None` on the first).
pub fn observed_rates(rows: &[LevelResult]) -> Vec<Option<[f64; 3]>> {
    let norms = |r: &LevelResult| [r.errors.l2_velocity, r.errors.h1_velocity, r.errors.l2_pressure];
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            (i > 0).then(|| {
                let (a, b) = (norms(&rows[i - 1]), norms(r));
                let dh = (rows[i - 1].h / r.h).ln();
                [0, 1, 2].map(|j| (a[j] / b[j]).ln() / dh)
            })
        })
        .collect()
}

/// Writes `level,h,ndof,cdof,L2u,rate,H1u,rate,L2p,rate`.
pub fn write_errors_csv(out: &mut impl Write, rows: &[LevelResult]) -> Result<()> {
    writeln!(out, "level,h,ndof,cdof,L2u,rate,H1u,rate,L2p,rate")?;
    for (r, rate) in rows.iter().zip(observed_rates(rows)) {
        let rt = |j: usize| rate.map_or(String::new(), |x| format!("{:.3}", x[j]));
        writeln!(
            out,
            "{},{:.6e},{},{},{:.6e},{},{:.6e},{},{:.6e},{}",
            r.level,
            r.h,
            r.ndof,
            r.cdof,
            r.errors.l2_velocity,
            rt(0),
            r.errors.h1_velocity,
            rt(1),
            r.errors.l2_pressure,
            rt(2)
        )?;
    }
    Ok(())
}

/// Channel benchmark with a parabolic inflow profile.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ChannelConfig {
    pub k: usize,
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    pub nu: f64,
    /// Peak inflow velocity; the mean is `2/3` of it.
    pub u_peak: f64,
    pub variant: JumpVariant,
    pub alpha: Option<f64>,
    /// Uniform refinements of the generated mesh.
    pub refinements: usize,
    #[serde(skip)]
    pub mesh: ChannelParams,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            k: 4,
            scheme: Scheme::FracTheta,
            dt: 1.0 / 500.0,
            t_end: 8.0,
            nu: 1e-3,
            u_peak: 1.5,
            variant: JumpVariant::Projected,
            alpha: None,
            refinements: 0,
            mesh: ChannelParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ForceSample {
    pub t: f64,
    pub cd: f64,
    pub cl: f64,
}

/// Runs the channel flow from the steady Stokes state; `observe` sees every sample.
pub fn run_channel(
    cfg: &ChannelConfig,
    mut observe: impl FnMut(&ForceSample) -> Result<()>,
) -> Result<Vec<ForceSample>> {
    let mut mesh = channel_with_cylinder(&cfg.mesh)?;
    for _ in 0..cfg.refinements {
        mesh = refine_uniform(&mesh)?;
    }
    let mut form = FormConfig::new(cfg.nu, cfg.k, cfg.variant);
    if let Some(a) = cfg.alpha {
        form.alpha = a;
    }
    let disc = Arc::new(Discretization::new(Arc::new(mesh), cfg.k, form)?);
    let (height, um) = (cfg.mesh.height, cfg.u_peak);
    // parabolic profile at x = 0, no-slip on walls and obstacle
    let inflow: TimeVectorFn = Arc::new(move |x, _| match x[0] < 1e-9 {
        true => [4.0 * um * x[1] * (height - x[1]) / (height * height), 0.0],
        false => [0.0, 0.0],
    });
    let problem = FlowProblem {
        disc,
        dirichlet_labels: vec!["inflow".into(), "wall".into(), "obstacle".into()],
        u_d: inflow,
        force: None,
    };
    let mut sim = Simulation::new(problem, SchemeConfig::new(cfg.scheme, cfg.dt))?;
    sim.solve_steady_stokes()?;
    let (u_mean, radius) = (2.0 * um / 3.0, cfg.mesh.radius);
    let sample = |sim: &Simulation| -> Result<ForceSample> {
        let d = sim.disc();
        let w = FEField::new(d.spaces.w.clone(), sim.state.w.clone())?;
        let p = FEField::new(d.spaces.q.clone(), sim.state.p.clone())?;
        check_divergence(&w)?;
        let (cd, cl) = drag_lift(&w, &p, "obstacle", cfg.nu, u_mean, radius)?;
        Ok(ForceSample { t: sim.state.t, cd, cl })
    };
    let n = (cfg.t_end / cfg.dt).round() as usize;
    let mut out = Vec::with_capacity(n + 1);
    let first = sample(&sim)?;
    observe(&first)?;
    out.push(first);
    for _ in 0..n {
        sim.step()?;
        let s = sample(&sim)?;
        observe(&s)?;
        out.push(s);
    }
    Ok(out)
}

/// `(max c_D, min c_D, max c_L, min c_L)` over samples with `t ≥ t_from`.
pub fn force_extrema(samples: &[ForceSample], t_from: f64) -> Option<[f64; 4]> {
    let tail: Vec<&ForceSample> = samples.iter().filter(|s| s.t >= t_from).collect();
    if tail.is_empty() {
        return None;
    }
    let fold = |f: fn(&ForceSample) -> f64, max: bool| {
        tail.iter().map(|s| f(s)).fold(if max { f64::NEG_INFINITY } else { f64::INFINITY }, |a, b| {
            if max {
                a.max(b)
            } else {
                a.min(b)
            }
        })
    };
    Some([fold(|s| s.cd, true), fold(|s| s.cd, false), fold(|s| s.cl, true), fold(|s| s.cl, false)])
}

/// Mean period of the lift signal from its upward zero crossings after `t_from`.
pub fn lift_period(samples: &[ForceSample], t_from: f64) -> Option<f64> {
    let tail: Vec<&ForceSample> = samples.iter().filter(|s| s.t >= t_from).collect();
    let mean = tail.iter().map(|s| s.cl).sum::<f64>() / tail.len().max(1) as f64;
    let crossings: Vec<f64> = tail
        .windows(2)
        .filter(|w| w[0].cl < mean && w[1].cl >= mean)
        .map(|w| w[0].t + (w[1].t - w[0].t) * (mean - w[0].cl) / (w[1].cl - w[0].cl))
        .collect();
    (crossings.len() >= 2).then(|| (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64)
}
