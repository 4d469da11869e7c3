//! Command-line driver for the benchmark cases.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};
use serde_json::{json, Value};

use hdgflow::bench::{
    convergence_study, force_extrema, lbb_constant, lift_period, observed_rates, run_channel, sparsity_mesh,
    sparsity_table, time_order_study, write_errors_csv, ChannelConfig, SteadyCase, StudyConfig, TimeOrderConfig,
};
use hdgflow::forms::JumpVariant;
use hdgflow::timeloop::Scheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Case {
    Potential,
    Kovasznay,
    Cyl2d,
    Lbb,
    Sparsity,
    Manufactured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Variant {
    Full,
    Projected,
}

impl From<Variant> for JumpVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Full => JumpVariant::Full,
            Variant::Projected => JumpVariant::Projected,
        }
    }
}

/// Benchmarks for the hybrid H(div) Navier-Stokes discretization.
#[derive(Debug, Parser)]
#[command(name = "hdgflow", version)]
struct Args {
    case: Case,
    /// Polynomial degree: a single value, a comma list `1,2,3` or a range `1..4`.
    #[arg(long, default_value = "2")]
    k: String,
    /// Number of mesh levels (steady cases, default 4) or step sizes (manufactured, default 5).
    #[arg(long)]
    refines: Option<usize>,
    /// Time integrator (imex-euler, imex-rk2, oifs-euler, oifs-bdf2, frac-theta).
    #[arg(long)]
    scheme: Option<String>,
    /// Time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Final time for time-dependent cases.
    #[arg(long)]
    t_end: Option<f64>,
    /// Interior penalty (default 10 k²).
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum, default_value = "projected")]
    variant: Variant,
    /// Geometry order of curved boundaries (default min(k, 3)).
    #[arg(long)]
    geom_order: Option<usize>,
    /// Output directory (default `out/<case>`).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_degrees(s: &str) -> Result<Vec<usize>> {
    let ks: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
        (a..=b).collect()
    } else {
        s.split(',').map(|x| x.trim().parse()).collect::<std::result::Result<_, _>>()?
    };
    if ks.is_empty() || ks.contains(&0) {
        bail!("degrees must be positive, got '{s}'");
    }
    Ok(ks)
}

fn git_hash() -> String {
    Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

fn scheme(args: &Args, default: Scheme) -> Result<Scheme> {
    Ok(match &args.scheme {
        Some(s) => s.parse()?,
        None => default,
    })
}

fn run_steady(args: &Args, case: SteadyCase, ks: &[usize], dir: &Path) -> Result<Value> {
    let mut results = Vec::new();
    for &k in ks {
        let mut cfg = StudyConfig::new(case, k, args.refines.unwrap_or(4), args.variant.into());
        cfg.alpha = args.alpha;
        cfg.geometry_order = args.geom_order;
        println!("k = {k}");
        println!("{:>5} {:>10} {:>8} {:>7} {:>11} {:>11} {:>11}", "level", "h", "ndof", "cdof", "L2u", "H1u", "L2p");
        let rows = convergence_study(&cfg, |r| {
            println!(
                "{:>5} {:>10.4e} {:>8} {:>7} {:>11.4e} {:>11.4e} {:>11.4e}",
                r.level, r.h, r.ndof, r.cdof, r.errors.l2_velocity, r.errors.h1_velocity, r.errors.l2_pressure
            );
        })?;
        if let Some(Some(r)) = observed_rates(&rows).last() {
            println!("orders on the last pair: L2u {:.2}, H1u {:.2}, L2p {:.2}", r[0], r[1], r[2]);
        }
        let name = if ks.len() == 1 { "errors.csv".to_string() } else { format!("errors_k{k}.csv") };
        let mut f = create(dir, &name)?;
        write_errors_csv(&mut f, &rows)?;
        f.flush()?;
        results.push(json!({ "k": k, "file": name, "rows": rows }));
    }
    Ok(json!(results))
}

fn run_cyl2d(args: &Args, ks: &[usize], dir: &Path) -> Result<Value> {
    let [k] = ks else { bail!("cyl2d takes a single degree") };
    let mut cfg = ChannelConfig { k: *k, scheme: scheme(args, Scheme::FracTheta)?, ..ChannelConfig::default() };
    if let Some(dt) = args.dt {
        cfg.dt = dt;
    }
    if let Some(t) = args.t_end {
        cfg.t_end = t;
    }
    cfg.alpha = args.alpha;
    cfg.variant = args.variant.into();
    if let Some(g) = args.geom_order {
        cfg.mesh.geometry_order = g;
    }
    let mut f = create(dir, "forces.csv")?;
    writeln!(f, "t,cD,cL")?;
    let every = ((0.05 / cfg.dt).round() as usize).max(1);
    let mut count = 0usize;
    let samples = run_channel(&cfg, |s| {
        writeln!(f, "{},{:.8e},{:.8e}", s.t, s.cd, s.cl)?;
        if count.is_multiple_of(every) {
            println!("t = {:8.4}  cD = {:.5}  cL = {:+.5}", s.t, s.cd, s.cl);
            f.flush()?;
        }
        count += 1;
        Ok(())
    })?;
    f.flush()?;
    let t_from = 0.5 * cfg.t_end;
    let ext = force_extrema(&samples, t_from);
    let period = lift_period(&samples, t_from);
    if let Some(e) = ext {
        println!("t ≥ {t_from}: max cD {:.5}, min cD {:.5}, max cL {:.5}, min cL {:.5}", e[0], e[1], e[2], e[3]);
    }
    if let Some(p) = period {
        println!("lift period {p:.4}");
    }
    Ok(json!({
        "config": cfg,
        "extrema_from": t_from,
        "extrema": ext.map(|e| json!({"max_cD": e[0], "min_cD": e[1], "max_cL": e[2], "min_cL": e[3]})),
        "lift_period": period,
    }))
}

fn run_lbb(args: &Args, ks: &[usize], dir: &Path) -> Result<Value> {
    let mut f = create(dir, "lbb.csv")?;
    writeln!(f, "k,c")?;
    let mut rows = Vec::new();
    for &k in ks {
        let alpha = args.alpha.unwrap_or(10.0 * (k * k) as f64);
        let c = lbb_constant([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], k, alpha)?;
        println!("k = {k:>2}  c = {c:.4}");
        writeln!(f, "{k},{c:.6}")?;
        rows.push(json!({"k": k, "alpha": alpha, "c": c}));
    }
    f.flush()?;
    Ok(json!(rows))
}

fn run_sparsity(ks: &[usize], dir: &Path) -> Result<Value> {
    let mesh = Arc::new(sparsity_mesh()?);
    let rows = sparsity_table(&mesh, ks)?;
    println!("{:>2} {:>14} {:>8} {:>8} {:>10}", "k", "method", "dof", "cdof", "nnzA");
    for r in &rows {
        println!("{:>2} {:>14} {:>8} {:>8} {:>10}", r.k, format!("{:?}", r.method), r.dof, r.cdof, r.nnz_a);
    }
    let value = json!({ "elements": mesh.n_elements(), "facets": mesh.n_facets(), "rows": rows });
    let mut f = create(dir, "sparsity.json")?;
    serde_json::to_writer_pretty(&mut f, &value)?;
    f.flush()?;
    Ok(value)
}

fn run_manufactured(args: &Args, ks: &[usize], dir: &Path) -> Result<Value> {
    let [k] = ks else { bail!("manufactured takes a single degree") };
    let mut cfg = TimeOrderConfig::new(scheme(args, Scheme::FracTheta)?);
    cfg.k = *k;
    if let Some(n) = args.refines {
        cfg.levels = n;
    }
    if let Some(dt) = args.dt {
        cfg.dt0 = dt;
    }
    if let Some(t) = args.t_end {
        cfg.t_end = t;
    }
    let rows = time_order_study(&cfg)?;
    let mut f = create(dir, "time_order.csv")?;
    writeln!(f, "dt,error,rate")?;
    for r in &rows {
        let rate = r.rate.map_or(String::new(), |x| format!("{x:.3}"));
        println!("dt = {:.5e}  error = {:.4e}  rate = {rate}", r.dt, r.error);
        writeln!(f, "{:.6e},{:.6e},{rate}", r.dt, r.error)?;
    }
    f.flush()?;
    Ok(json!({ "config": cfg, "rows": rows }))
}

fn run(args: &Args) -> Result<()> {
    let ks = parse_degrees(&args.k)?;
    let name = format!("{:?}", args.case).to_lowercase();
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("out").join(&name));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let start = Instant::now();
    let results = match args.case {
        Case::Potential => run_steady(args, SteadyCase::Potential, &ks, &dir)?,
        Case::Kovasznay => run_steady(args, SteadyCase::Kovasznay, &ks, &dir)?,
        Case::Cyl2d => run_cyl2d(args, &ks, &dir)?,
        Case::Lbb => run_lbb(args, &ks, &dir)?,
        Case::Sparsity => run_sparsity(&ks, &dir)?,
        Case::Manufactured => run_manufactured(args, &ks, &dir)?,
    };
    let meta = json!({
        "case": name,
        "k": ks,
        "refines": args.refines,
        "scheme": args.scheme,
        "dt": args.dt,
        "t_end": args.t_end,
        "alpha": args.alpha,
        "variant": format!("{:?}", args.variant).to_lowercase(),
        "geom_order": args.geom_order,
        "git": git_hash(),
        "seconds": start.elapsed().as_secs_f64(),
        "results": results,
    });
    let mut f = create(&dir, "meta.json")?;
    serde_json::to_writer_pretty(&mut f, &meta)?;
    f.flush()?;
    println!("wrote {}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
