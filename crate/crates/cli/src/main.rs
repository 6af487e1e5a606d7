//! `wrapcam`: design, evaluate and size wire-wrapped balancing cams.

mod output;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use wrapcam::balancing::friction_mu_from_slip;
use wrapcam::config::RunConfig;
use wrapcam::geometry::CamProfile;
use wrapcam::optimizer::{optimize_design, stiffness_deviation, DesignReport, DesignVector};
use wrapcam::springs::{design_spring, SpringWireGeometry};
use wrapcam::tangency::{sweep_tangency, write_sweep_csv};
use wrapcam::units::{parse_quantity, Dimension};
use wrapcam::{Error, FrictionModel};

#[derive(Parser)]
#[command(name = "wrapcam", version, about = "Synthesis of spring-loaded wire-wrapped cams")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Grid points per joint, `N` or `N,M`.
    #[arg(long, global = true, value_parser = parse_grid)]
    grid: Option<(usize, Option<usize>)>,
    /// Override the friction model of every cam.
    #[arg(long, global = true)]
    friction: Option<FrictionArg>,
    /// Friction coefficient for `--friction finite`.
    #[arg(long, global = true, default_value_t = 0.3273)]
    mu: f64,
    /// Seed for restart jitter.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of jittered restarts.
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Units of CSV columns and printed values.
    #[arg(long, global = true, value_enum, default_value_t = Units::Paper)]
    units: Units,
}

#[derive(Clone, Copy, ValueEnum)]
enum FrictionArg {
    Finite,
    Infinite,
}

/// `paper` writes N mm and mm, `si` writes N m and m.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Units {
    Si,
    Paper,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize a design and write the report, CSVs and plots.
    Design { config: PathBuf },
    /// Evaluate a saved design without optimizing.
    Evaluate {
        design: PathBuf,
        config: PathBuf,
        /// Also report the torque change when every spring constant is multiplied by this.
        #[arg(long)]
        k_scale: Option<f64>,
    },
    /// Size a helical extension spring. Quantities accept units, e.g. "1.2 mm".
    Spring {
        #[arg(long)]
        wire_diameter: String,
        #[arg(long)]
        outer_diameter: String,
        #[arg(long)]
        coils: f64,
        #[arg(long, default_value = "79.3 GPa")]
        shear_modulus: String,
        #[arg(long)]
        yield_stress: String,
        #[arg(long, default_value_t = 1.0)]
        safety_factor: f64,
    },
    /// Friction coefficient from a capstan slip test.
    Mu {
        /// Pulling force at slip.
        #[arg(long)]
        f: String,
        /// Holding force.
        #[arg(long)]
        f0: String,
        /// Wrap angle in degrees.
        #[arg(long)]
        wrap_deg: f64,
    },
    /// Contact sweep of the initial design, one CSV per cam.
    Tangency { config: PathBuf },
}

fn parse_grid(s: &str) -> std::result::Result<(usize, Option<usize>), String> {
    let mut it = s.split(',').map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")));
    let n = it.next().ok_or("empty grid")??;
    let m = it.next().transpose()?;
    if it.next().is_some() || n < 2 || m.is_some_and(|m| m < 2) {
        return Err("expected N or N,M with at least 2 points each".into());
    }
    Ok((n, m))
}

/// Design file accepted by `evaluate`: any JSON with `beta` and `x0_m`,
/// such as the `report.json` written by `design`.
#[derive(Deserialize)]
struct DesignFile {
    beta: Vec<Vec<f64>>,
    #[serde(default)]
    x0_m: Vec<f64>,
    #[serde(default)]
    x0_mm: Vec<f64>,
}

#[allow(non_snake_case)]
#[derive(Serialize)]
struct EvaluationOutput<'a> {
    #[serde(flatten)]
    report: &'a DesignReport,
    k_scale: Option<f64>,
    deviation_rmse_Nmm: Option<Vec<f64>>,
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::NoFeasiblePoint(_)) => 3,
        Some(Error::NonConvergence { .. } | Error::MaxIterations { .. }) => 4,
        Some(_) => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Design { config } => cmd_design(g, config),
        Command::Evaluate { design, config, k_scale } => cmd_evaluate(g, design, config, *k_scale),
        Command::Spring { wire_diameter, outer_diameter, coils, shear_modulus, yield_stress, safety_factor } => {
            let q = |s: &str, d, name: &str| parse_quantity(s, d).map_err(|e| Error::Config(format!("--{name}: {e}")));
            let geom = SpringWireGeometry {
                wire_diameter: q(wire_diameter, Dimension::Length, "wire-diameter")?,
                outer_diameter: q(outer_diameter, Dimension::Length, "outer-diameter")?,
                coils: *coils,
                shear_modulus: q(shear_modulus, Dimension::Pressure, "shear-modulus")?,
                yield_stress: q(yield_stress, Dimension::Pressure, "yield-stress")?,
                safety_factor: *safety_factor,
            };
            cmd_spring(g.units, &geom)
        }
        Command::Mu { f, f0, wrap_deg } => {
            let f = parse_quantity(f, Dimension::Force)?;
            let f0 = parse_quantity(f0, Dimension::Force)?;
            let mu = friction_mu_from_slip(f, f0, wrap_deg.to_radians())?;
            println!("{}", serde_json::json!({ "mu": mu }));
            Ok(())
        }
        Command::Tangency { config } => cmd_tangency(g, config),
    }
}

fn load_config(g: &Global, path: &Path) -> Result<RunConfig> {
    let mut rc = RunConfig::load(path)?;
    let m = &mut rc.mechanism;
    if let Some((n, mm)) = g.grid {
        m.theta[0].points = n;
        if let Some(t) = m.theta.get_mut(1) {
            t.points = mm.unwrap_or(n);
        }
    }
    match g.friction {
        Some(FrictionArg::Infinite) => *m = m.with_friction(FrictionModel::INFINITE),
        Some(FrictionArg::Finite) => *m = m.with_friction(FrictionModel::finite(g.mu)?),
        None => {}
    }
    if let Some(s) = g.seed {
        m.solver.seed = s;
    }
    if let Some(r) = g.restarts {
        m.solver.restarts = r;
    }
    m.validate()?;
    Ok(rc)
}

fn out_dir(g: &Global) -> Result<&Path> {
    std::fs::create_dir_all(&g.out).with_context(|| format!("creating {}", g.out.display()))?;
    Ok(&g.out)
}

fn print_summary(report: &DesignReport, units: Units) {
    let s = if units == Units::Si { 1e-3 } else { 1.0 };
    let u = if units == Units::Si { "N m" } else { "N mm" };
    for (i, (r, m)) in report.rmse_Nmm.iter().zip(&report.max_error_Nmm).enumerate() {
        println!("cam {}: rmse {:.4} {u}, max error {:.4} {u}", i + 1, r * s, m * s);
    }
    println!("feasible: {}, converged: {}, runtime {:.2} s", report.feasible, report.converged, report.runtime_s);
}

fn cmd_design(g: &Global, config: &Path) -> Result<()> {
    let rc = load_config(g, config)?;
    let report = optimize_design(&rc.mechanism, &rc.desired, &rc.initial)?;
    if !report.converged {
        log::warn!("iteration budget exhausted; the returned design is feasible but not converged");
    }
    let dir = out_dir(g)?;
    output::write_json(dir, "report.json", &report)?;
    output::write_artifacts(dir, &report, &rc.mechanism, g.units)?;
    print_summary(&report, g.units);
    println!("wrote {}", dir.display());
    Ok(())
}

fn cmd_evaluate(g: &Global, design: &Path, config: &Path, k_scale: Option<f64>) -> Result<()> {
    let rc = load_config(g, config)?;
    let text = std::fs::read_to_string(design).map_err(|e| Error::Io(format!("{}: {e}", design.display())))?;
    let file: DesignFile =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", design.display())))?;
    let x0 = if file.x0_m.is_empty() { file.x0_mm.iter().map(|v| v * 1e-3).collect() } else { file.x0_m };
    let dv = DesignVector { betas: file.beta, x0 };
    let report = DesignReport::from_design(&dv, &rc.mechanism, &rc.desired)?;
    let deviation = k_scale
        .map(|s| stiffness_deviation(&dv, &rc.mechanism, s).map(|v| v.iter().map(|r| r * 1e3).collect::<Vec<_>>()))
        .transpose()?;
    let dir = out_dir(g)?;
    let out = EvaluationOutput { report: &report, k_scale, deviation_rmse_Nmm: deviation.clone() };
    output::write_json(dir, "evaluation.json", &out)?;
    output::write_artifacts(dir, &report, &rc.mechanism, g.units)?;
    print_summary(&report, g.units);
    if let (Some(s), Some(d)) = (k_scale, deviation) {
        let f = if g.units == Units::Si { 1e-3 } else { 1.0 };
        let u = if g.units == Units::Si { "N m" } else { "N mm" };
        for (i, r) in d.iter().enumerate() {
            println!("cam {}: torque deviation rmse at k x {s}: {:.4} {u}", i + 1, r * f);
        }
    }
    Ok(())
}

fn cmd_spring(units: Units, geom: &SpringWireGeometry) -> Result<()> {
    let d = design_spring(geom)?;
    let v = match units {
        Units::Paper => serde_json::json!({
            "k_N_per_mm": d.spec.k * 1e-3,
            "x_max_mm": d.spec.x_max * 1e3,
            "f_max_N": d.f_max,
            "spring_index": d.spring_index,
            "bergstrasser": d.bergstrasser,
        }),
        Units::Si => serde_json::json!({
            "k_N_per_m": d.spec.k,
            "x_max_m": d.spec.x_max,
            "f_max_N": d.f_max,
            "spring_index": d.spring_index,
            "bergstrasser": d.bergstrasser,
        }),
    };
    println!("{}", serde_json::to_string_pretty(&v)?);
    Ok(())
}

fn cmd_tangency(g: &Global, config: &Path) -> Result<()> {
    let rc = load_config(g, config)?;
    let m = &rc.mechanism;
    rc.initial.check(m)?;
    let dir = out_dir(g)?;
    for (i, (beta, dom)) in rc.initial.betas.iter().zip(&m.theta).enumerate() {
        let profile = CamProfile::new(beta.clone(), dom.max + std::f64::consts::TAU)?;
        let sweep = sweep_tangency(&profile, &m.cams[i].idler, &dom.grid())?;
        let path = dir.join(format!("tangency_cam{}.csv", i + 1));
        write_sweep_csv(std::fs::File::create(&path)?, &sweep)?;
        let worst = sweep.iter().map(|s| s.residual_norm).fold(0.0, f64::max);
        println!("cam {}: {} points, worst residual {worst:.3e}, wrote {}", i + 1, sweep.len(), path.display());
    }
    Ok(())
}
