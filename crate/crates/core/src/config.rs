//! Design run files: a TOML document with unit-suffixed quantities.
//!
//! ```toml
//! dof = 2
//! order = 3
//! weights = [10, 10, 0, 0, 0, 0, 0, 0]
//!
//! [theta]
//! min = "0 deg"
//! max = "90 deg"
//! points = 31
//!
//! [desired]
//! kind = "rr_arm"
//! m1 = "0.5 kg"
//! m2 = "0.5 kg"
//! l1 = "0.5 m"
//! lc1 = "0.25 m"
//! lc2 = "0.25 m"
//!
//! [[cam]]
//! idler_radius = "20 mm"
//! idler_offset = "15 mm"
//! rho_min = "25 mm"
//! rho_max = "500 mm"
//! friction = "finite"
//! mu = 0.3273
//! beta_init = [0.001, 0.001, 0.001, 0.001]
//!
//! [[spring]]
//! k = "1.10 N/mm"
//! x_max = "57.66 mm"
//! x_pre = "10 mm"
//! ```
//!
//! `beta_init` lists the starting cam coefficients highest power first, in
//! metres per rad^k unless a length unit is given. Springs are listed as
//! wrap spring of cam 1, idler spring, wrap spring of cam 2; their `x_pre` is
//! the starting pre-extension. A `[theta]` table inside a `[[cam]]` overrides
//! the shared one.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::balancing::{DesiredTorque, RRArmParams, TorqueTable, STANDARD_GRAVITY};
use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::optimizer::{CamSetup, DesignVector, Dof, MechanismConfig, SolverOptions, ThetaDomain};
use crate::springs::SpringEntry;
use crate::tangency::IdlerSpec;
use crate::torque::{FrictionMode, FrictionModel};
use crate::units::{Dimension, QuantityInput};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTheta {
    min: QuantityInput,
    max: QuantityInput,
    #[serde(default)]
    points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCam {
    idler_radius: QuantityInput,
    idler_offset: QuantityInput,
    rho_min: QuantityInput,
    rho_max: QuantityInput,
    #[serde(default)]
    friction: FrictionMode,
    #[serde(default)]
    mu: f64,
    beta_init: Vec<QuantityInput>,
    #[serde(default)]
    theta: Option<RawTheta>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawDesired {
    RrArm {
        m1: QuantityInput,
        m2: QuantityInput,
        l1: QuantityInput,
        lc1: QuantityInput,
        lc2: QuantityInput,
        #[serde(default)]
        g: Option<QuantityInput>,
    },
    /// Coefficients in N m per rad^k, lowest power first.
    Polynomial {
        coeffs: Vec<f64>,
        #[serde(default)]
        coeffs2: Vec<f64>,
    },
    /// CSV path, relative to the config file.
    Table { path: PathBuf },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    max_outer: Option<usize>,
    max_inner: Option<usize>,
    grad_tol: Option<f64>,
    feas_tol: Option<f64>,
    fd_step: Option<f64>,
    restarts: Option<usize>,
    seed: Option<u64>,
    exec: Option<ExecMode>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dof: u8,
    #[serde(default = "default_order")]
    order: usize,
    weights: Vec<f64>,
    #[serde(default)]
    theta: Option<RawTheta>,
    desired: RawDesired,
    cam: Vec<RawCam>,
    spring: Vec<SpringEntry>,
    #[serde(default)]
    solver: RawSolver,
}

fn default_order() -> usize {
    3
}

const DEFAULT_POINTS_ONE: usize = 61;
const DEFAULT_POINTS_TWO: usize = 31;

/// A parsed run file: mechanism, desired torque and starting design.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mechanism: MechanismConfig,
    pub desired: DesiredTorque,
    pub initial: DesignVector,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Parse run-file text; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let dof = match raw.dof {
            1 => Dof::One,
            2 => Dof::Two,
            n => return Err(Error::Config(format!("`dof` must be 1 or 2, got {n}"))),
        };
        let default_points = if dof == Dof::One { DEFAULT_POINTS_ONE } else { DEFAULT_POINTS_TWO };
        let shared = raw.theta.as_ref().map(|t| theta_domain(t, "theta", default_points)).transpose()?;

        let mut cams = Vec::new();
        let mut theta = Vec::new();
        let mut betas = Vec::new();
        for (i, c) in raw.cam.iter().enumerate() {
            let f = |name: &str| format!("cam[{i}].{name}");
            let idler = IdlerSpec::new(
                c.idler_radius.to_si(Dimension::Length, &f("idler_radius"))?,
                c.idler_offset.to_si(Dimension::Length, &f("idler_offset"))?,
            )?;
            let friction = match c.friction {
                FrictionMode::Infinite => FrictionModel::INFINITE,
                FrictionMode::Finite => {
                    FrictionModel::finite(c.mu).map_err(|e| Error::Config(format!("{}: {e}", f("mu"))))?
                }
            };
            cams.push(CamSetup {
                idler,
                rho_min: c.rho_min.to_si(Dimension::Length, &f("rho_min"))?,
                rho_max: c.rho_max.to_si(Dimension::Length, &f("rho_max"))?,
                friction,
            });
            let dom = match (&c.theta, shared) {
                (Some(t), _) => theta_domain(t, &f("theta"), default_points)?,
                (None, Some(s)) => s,
                (None, None) => return Err(Error::Config(format!("no rotation range for cam {i}; add [theta]"))),
            };
            theta.push(dom);
            if c.beta_init.len() != raw.order + 1 {
                return Err(Error::Config(format!(
                    "{} needs {} coefficients for order {}, got {}",
                    f("beta_init"),
                    raw.order + 1,
                    raw.order,
                    c.beta_init.len()
                )));
            }
            let mut b = c
                .beta_init
                .iter()
                .enumerate()
                .map(|(k, q)| q.to_si(Dimension::Length, &format!("{}[{k}]", f("beta_init"))))
                .collect::<Result<Vec<f64>>>()?;
            b.reverse();
            betas.push(b);
        }

        let mut springs = Vec::new();
        let mut x0 = Vec::new();
        for (i, s) in raw.spring.iter().enumerate() {
            let spec = s.to_spec(&format!("spring[{i}]"))?;
            x0.push(spec.x_pre);
            springs.push(spec);
        }

        let desired = match raw.desired {
            RawDesired::RrArm { m1, m2, l1, lc1, lc2, g } => {
                let p = RRArmParams {
                    m1: m1.to_si(Dimension::Mass, "desired.m1")?,
                    m2: m2.to_si(Dimension::Mass, "desired.m2")?,
                    l1: l1.to_si(Dimension::Length, "desired.l1")?,
                    lc1: lc1.to_si(Dimension::Length, "desired.lc1")?,
                    lc2: lc2.to_si(Dimension::Length, "desired.lc2")?,
                    g: g.map(|g| g.to_si(Dimension::Acceleration, "desired.g"))
                        .transpose()?
                        .unwrap_or(STANDARD_GRAVITY),
                };
                p.validate()?;
                DesiredTorque::RrArm(p)
            }
            RawDesired::Polynomial { coeffs, coeffs2 } => DesiredTorque::Polynomial { cam1: coeffs, cam2: coeffs2 },
            RawDesired::Table { path } => DesiredTorque::Table(TorqueTable::from_csv_path(&base_dir.join(path))?),
        };

        let d = SolverOptions::default();
        let s = raw.solver;
        let solver = SolverOptions {
            max_outer: s.max_outer.unwrap_or(d.max_outer),
            max_inner: s.max_inner.unwrap_or(d.max_inner),
            grad_tol: s.grad_tol.unwrap_or(d.grad_tol),
            feas_tol: s.feas_tol.unwrap_or(d.feas_tol),
            fd_step: s.fd_step.unwrap_or(d.fd_step),
            restarts: s.restarts.unwrap_or(d.restarts),
            seed: s.seed.unwrap_or(d.seed),
            exec: s.exec.unwrap_or(d.exec),
            ..d
        };

        let mechanism = MechanismConfig { dof, cams, springs, weights: raw.weights, theta, order: raw.order, solver };
        mechanism.validate()?;
        Ok(Self { mechanism, desired, initial: DesignVector { betas, x0 } })
    }
}

fn theta_domain(t: &RawTheta, field: &str, default_points: usize) -> Result<ThetaDomain> {
    Ok(ThetaDomain {
        min: t.min.to_si(Dimension::Angle, &format!("{field}.min"))?,
        max: t.max.to_si(Dimension::Angle, &format!("{field}.max"))?,
        points: t.points.unwrap_or(default_points),
    })
}
