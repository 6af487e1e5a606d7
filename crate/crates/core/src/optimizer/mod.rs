//! Cam and pre-extension design by constrained optimization.
//!
//! Design variables are the polynomial coefficients of every cam profile and
//! the pre-extension of every spring. The objective combines the squared
//! torque error with weighted stiffness sensitivities; convexity, radius
//! bounds and spring travel are enforced on discrete grids.

pub mod model;
pub mod nlp;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::balancing::DesiredTorque;
use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::geometry;
use crate::quadrature;
use crate::springs::SpringSpec;
use crate::tangency::IdlerSpec;
use crate::torque::{FrictionModel, TorqueGrid};

pub use model::{ConstraintMargins, Evaluation, ExtensionGrid};

/// Required convexity margin `rho^2 + 2 rho'^2 - rho rho''` (m^2).
pub const EPS_CONVEXITY: f64 = 1e-6;
/// Required clearance below each spring's maximum extension (m).
pub const EPS_EXTENSION: f64 = 1e-6;
/// Slack allowed when checking a returned design against the constraints.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dof {
    One,
    Two,
}

impl Dof {
    pub fn cams(self) -> usize {
        match self {
            Dof::One => 1,
            Dof::Two => 2,
        }
    }

    pub fn springs(self) -> usize {
        self.cams() + 1
    }

    pub fn weights(self) -> usize {
        match self {
            Dof::One => 3,
            Dof::Two => 8,
        }
    }
}

/// Rotation range of one cam and the number of grid points on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaDomain {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl ThetaDomain {
    pub fn grid(&self) -> Vec<f64> {
        quadrature::linspace(self.min, self.max, self.points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CamSetup {
    pub idler: IdlerSpec,
    pub rho_min: f64,
    pub rho_max: f64,
    pub friction: FrictionModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_outer: usize,
    pub max_inner: usize,
    pub grad_tol: f64,
    pub feas_tol: f64,
    pub fd_step: f64,
    /// Length unit of the scaled design variables (m).
    pub var_scale: f64,
    /// Extra jittered starts besides the given one.
    pub restarts: usize,
    pub seed: u64,
    pub exec: ExecMode,
}

impl Default for SolverOptions {
    fn default() -> Self {
        let al = nlp::AlOptions::default();
        Self {
            max_outer: al.max_outer,
            max_inner: al.max_inner,
            grad_tol: al.grad_tol,
            feas_tol: al.feas_tol,
            fd_step: al.fd_step,
            var_scale: 0.01,
            restarts: 0,
            seed: 0,
            exec: ExecMode::Parallel,
        }
    }
}

/// Fixed parameters of a mechanism and its design problem.
///
/// Spring order is: wrap spring of cam 1, idler spring, then (two cams) the
/// wrap spring of cam 2. The `x_pre` of each spring is ignored here; it is a
/// design variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismConfig {
    pub dof: Dof,
    pub cams: Vec<CamSetup>,
    pub springs: Vec<SpringSpec>,
    /// One cam: `[w1, w2, w3]`. Two cams: `[w1, ..., w8]`.
    pub weights: Vec<f64>,
    pub theta: Vec<ThetaDomain>,
    /// Polynomial order of every cam profile.
    pub order: usize,
    pub solver: SolverOptions,
}

impl MechanismConfig {
    pub fn validate(&self) -> Result<()> {
        let dof = self.dof;
        let count = |what: &str, got: usize, want: usize| {
            if got == want {
                Ok(())
            } else {
                Err(Error::Config(format!("expected {want} {what} for a {}-cam mechanism, got {got}", dof.cams())))
            }
        };
        count("cams", self.cams.len(), dof.cams())?;
        count("springs", self.springs.len(), dof.springs())?;
        count("weights", self.weights.len(), dof.weights())?;
        count("rotation ranges", self.theta.len(), dof.cams())?;
        if let Some(w) = self.weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::Config(format!("weights must be finite and >= 0, got {w}")));
        }
        for d in &self.theta {
            if !(d.min < d.max) || !d.min.is_finite() || !d.max.is_finite() {
                return Err(Error::Config(format!("rotation range needs min < max, got [{}, {}]", d.min, d.max)));
            }
            if d.points < 2 {
                return Err(Error::Config("rotation grids need at least 2 points".into()));
            }
        }
        if self.order == 0 || self.order >= geometry::MAX_COEFFS {
            return Err(Error::Config(format!(
                "polynomial order must be in 1..{}, got {}",
                geometry::MAX_COEFFS,
                self.order
            )));
        }
        for c in &self.cams {
            if !(c.rho_min >= 0.0) || !c.rho_max.is_finite() {
                return Err(Error::InvalidGeometry(format!("bad radius bounds [{}, {}]", c.rho_min, c.rho_max)));
            }
        }
        Ok(())
    }

    fn has_empty_radius_box(&self) -> bool {
        self.cams.iter().any(|c| !(c.rho_min < c.rho_max))
    }

    /// Same mechanism with every spring constant multiplied by `scale`.
    pub fn with_stiffness_scale(&self, scale: f64) -> Self {
        let mut c = self.clone();
        for s in &mut c.springs {
            s.k *= scale;
        }
        c
    }

    pub fn with_friction(&self, friction: FrictionModel) -> Self {
        let mut c = self.clone();
        for cam in &mut c.cams {
            cam.friction = friction;
        }
        c
    }
}

/// Cam coefficients (lowest power first, m per rad^k) and pre-extensions (m).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignVector {
    pub betas: Vec<Vec<f64>>,
    pub x0: Vec<f64>,
}

impl DesignVector {
    /// Every coefficient equal to `beta`, every pre-extension equal to `x0`.
    pub fn uniform(config: &MechanismConfig, beta: f64, x0: f64) -> Self {
        Self { betas: vec![vec![beta; config.order + 1]; config.dof.cams()], x0: vec![x0; config.dof.springs()] }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.betas.iter().flatten().chain(&self.x0).copied().collect()
    }

    pub fn from_vec(&self, v: &[f64]) -> Self {
        let mut it = v.iter().copied();
        let betas = self.betas.iter().map(|b| it.by_ref().take(b.len()).collect()).collect();
        Self { betas, x0: it.collect() }
    }

    /// Shape and finiteness against `config`.
    pub fn check(&self, config: &MechanismConfig) -> Result<()> {
        if self.betas.len() != config.dof.cams()
            || self.x0.len() != config.dof.springs()
            || self.betas.iter().any(|b| b.len() != config.order + 1)
        {
            return Err(Error::Config(format!(
                "design vector shape does not match the mechanism ({} cams of order {}, {} springs)",
                config.dof.cams(),
                config.order,
                config.dof.springs()
            )));
        }
        if self.to_vec().iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("design vector has non-finite entries".into()));
        }
        Ok(())
    }
}

/// Smallest slack of each constraint family for a design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignMargins {
    /// Smallest convexity margin over the checked angles (m^2).
    pub convexity_m2: f64,
    /// Smallest `rho - rho_min` (m).
    pub rho_lower_m: f64,
    /// Smallest `rho_max - rho` (m).
    pub rho_upper_m: f64,
    /// Smallest spring extension (m).
    pub extension_lower_m: f64,
    /// Smallest `x_max - x` over all springs (m).
    pub extension_upper_m: f64,
    pub x0_min_m: f64,
}

impl DesignMargins {
    pub fn feasible(&self) -> bool {
        let t = FEASIBILITY_TOLERANCE;
        self.convexity_m2 >= EPS_CONVEXITY - t
            && self.rho_lower_m > -t
            && self.rho_upper_m > -t
            && self.extension_lower_m >= -t
            && self.extension_upper_m >= EPS_EXTENSION - t
            && self.x0_min_m >= -t
    }
}

pub fn design_margins(e: &Evaluation, design: &DesignVector, config: &MechanismConfig) -> DesignMargins {
    let mut m = DesignMargins {
        convexity_m2: f64::INFINITY,
        rho_lower_m: f64::INFINITY,
        rho_upper_m: f64::INFINITY,
        extension_lower_m: f64::INFINITY,
        extension_upper_m: f64::INFINITY,
        x0_min_m: design.x0.iter().copied().fold(f64::INFINITY, f64::min),
    };
    for (i, (p, setup)) in e.profiles.iter().zip(&config.cams).enumerate() {
        for phi in model::check_angles(e, i) {
            let rho = p.rho(phi);
            m.convexity_m2 = m.convexity_m2.min(geometry::convexity_margin(p, phi));
            m.rho_lower_m = m.rho_lower_m.min(rho - setup.rho_min);
            m.rho_upper_m = m.rho_upper_m.min(setup.rho_max - rho);
        }
    }
    for (x, s) in e.extensions.x.iter().zip(&config.springs) {
        for &xi in x {
            m.extension_lower_m = m.extension_lower_m.min(xi);
            m.extension_upper_m = m.extension_upper_m.min(s.x_max - xi);
        }
    }
    m
}

/// `(rmse, max_error)` between two equally shaped sample sets.
pub fn evaluate_metrics(values: &[f64], desired: &[f64]) -> (f64, f64) {
    assert_eq!(values.len(), desired.len(), "grids must have the same shape");
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let sq: Vec<f64> = values.iter().zip(desired).map(|(a, b)| (a - b) * (a - b)).collect();
    let max = values.iter().zip(desired).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ((exec::pairwise_sum(&sq) / sq.len() as f64).sqrt(), max)
}

/// Forward model of a design on the configured grid.
pub fn evaluate_design(design: &DesignVector, config: &MechanismConfig, tau_d: &DesiredTorque) -> Result<Evaluation> {
    config.validate()?;
    design.check(config)?;
    model::evaluate_with_desired(design, config, &model::desired_grid(config, tau_d))
}

pub fn objective_1dof(design: &DesignVector, config: &MechanismConfig, tau_d: &DesiredTorque) -> Result<f64> {
    if config.dof != Dof::One {
        return Err(Error::Config("objective_1dof needs a one-cam mechanism".into()));
    }
    Ok(model::objective(&evaluate_design(design, config, tau_d)?, &config.weights))
}

pub fn objective_2dof(design: &DesignVector, config: &MechanismConfig, tau_d: &DesiredTorque) -> Result<f64> {
    if config.dof != Dof::Two {
        return Err(Error::Config("objective_2dof needs a two-cam mechanism".into()));
    }
    Ok(model::objective(&evaluate_design(design, config, tau_d)?, &config.weights))
}

/// RMSE (N m) per cam between the torques with nominal springs and with
/// every spring constant scaled by `scale`.
pub fn stiffness_deviation(design: &DesignVector, config: &MechanismConfig, scale: f64) -> Result<Vec<f64>> {
    let zero = DesiredTorque::Custom(std::sync::Arc::new(|_, _| (0.0, 0.0)));
    let base = evaluate_design(design, config, &zero)?;
    let scaled = evaluate_design(design, &config.with_stiffness_scale(scale), &zero)?;
    Ok(per_cam_metrics(&scaled.torque, &base.torque).into_iter().map(|(r, _)| r).collect())
}

fn per_cam_metrics(a: &TorqueGrid, b: &TorqueGrid) -> Vec<(f64, f64)> {
    let mut out = vec![evaluate_metrics(&a.tau1, &b.tau1)];
    if a.is_two_dof() {
        out.push(evaluate_metrics(&a.tau2, &b.tau2));
    }
    out
}

/// Result of a design run or evaluation. Torques in N mm, lengths in mm
/// where the field name says so.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignReport {
    pub dof: usize,
    /// Per cam, lowest power first (m per rad^k).
    pub beta: Vec<Vec<f64>>,
    /// Per cam, highest power first.
    pub beta_highest_first: Vec<Vec<f64>>,
    pub x0_m: Vec<f64>,
    pub x0_mm: Vec<f64>,
    pub rmse_Nmm: Vec<f64>,
    pub max_error_Nmm: Vec<f64>,
    pub objective: f64,
    pub runtime_s: f64,
    pub iterations: usize,
    pub outer_iterations: usize,
    pub converged: bool,
    pub feasible: bool,
    pub margins: DesignMargins,
    pub grid: Vec<usize>,
    #[serde(skip)]
    pub evaluation: Option<Evaluation>,
    /// Merit values of every accepted step, per outer iteration.
    #[serde(skip)]
    pub merit_history: Vec<Vec<f64>>,
}

impl DesignReport {
    pub fn design(&self) -> DesignVector {
        let x0 = if self.x0_m.is_empty() { self.x0_mm.iter().map(|v| v * 1e-3).collect() } else { self.x0_m.clone() };
        DesignVector { betas: self.beta.clone(), x0 }
    }

    /// Report for a fixed design without optimizing.
    pub fn from_design(design: &DesignVector, config: &MechanismConfig, tau_d: &DesiredTorque) -> Result<Self> {
        let start = Instant::now();
        let e = evaluate_design(design, config, tau_d)?;
        let mut r = Self::assemble(design, config, e);
        r.runtime_s = start.elapsed().as_secs_f64();
        r.converged = true;
        Ok(r)
    }

    fn assemble(design: &DesignVector, config: &MechanismConfig, e: Evaluation) -> Self {
        let metrics = per_cam_metrics(&e.torque, &e.desired);
        let margins = design_margins(&e, design, config);
        Self {
            dof: config.dof.cams(),
            beta: design.betas.clone(),
            beta_highest_first: e.profiles.iter().map(|p| p.coeffs_highest_first()).collect(),
            x0_m: design.x0.clone(),
            x0_mm: design.x0.iter().map(|v| v * 1e3).collect(),
            rmse_Nmm: metrics.iter().map(|m| m.0 * 1e3).collect(),
            max_error_Nmm: metrics.iter().map(|m| m.1 * 1e3).collect(),
            objective: model::objective(&e, &config.weights),
            runtime_s: 0.0,
            iterations: 0,
            outer_iterations: 0,
            converged: false,
            feasible: margins.feasible(),
            margins,
            grid: config.theta.iter().map(|d| d.points).collect(),
            evaluation: Some(e),
            merit_history: Vec::new(),
        }
    }
}

struct DesignProblem<'a> {
    config: &'a MechanismConfig,
    desired: &'a TorqueGrid,
    template: &'a DesignVector,
    margins: ConstraintMargins,
    scale: f64,
}

impl DesignProblem<'_> {
    fn design(&self, z: &[f64]) -> DesignVector {
        let v: Vec<f64> = z.iter().map(|x| x * self.scale).collect();
        self.template.from_vec(&v)
    }
}

impl nlp::Problem for DesignProblem<'_> {
    fn dim(&self) -> usize {
        self.template.to_vec().len()
    }

    fn eval(&self, z: &[f64]) -> Option<(f64, Vec<f64>)> {
        let d = self.design(z);
        let e = model::evaluate_with_desired(&d, self.config, self.desired).ok()?;
        let f = model::objective(&e, &self.config.weights);
        Some((f, model::constraints(&e, &d, self.config, &self.margins)))
    }
}

/// Start points: the given design, then `restarts` jittered copies.
fn start_points(initial: &DesignVector, opts: &SolverOptions) -> Vec<DesignVector> {
    let mut out = vec![initial.clone()];
    for i in 0..opts.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(i as u64));
        let betas = initial
            .betas
            .iter()
            .map(|b| b.iter().map(|&c| c * (1.0 + 0.2 * rng.gen_range(-1.0..1.0))).collect())
            .collect();
        let x0 = initial.x0.iter().map(|&x| (x + 0.002 * rng.gen_range(-1.0..1.0)).max(0.0)).collect();
        out.push(DesignVector { betas, x0 });
    }
    out
}

/// Optimize cam coefficients and pre-extensions from `initial`.
///
/// A design that satisfies every constraint is returned even when the
/// iteration budget ran out (`converged == false`). Without a feasible
/// design the error is [`Error::NoFeasiblePoint`] when the constraints are
/// clearly violated and [`Error::MaxIterations`] when the run came close.
pub fn optimize_design(
    config: &MechanismConfig,
    tau_d: &DesiredTorque,
    initial: &DesignVector,
) -> Result<DesignReport> {
    let start = Instant::now();
    config.validate()?;
    if config.has_empty_radius_box() {
        return Err(Error::NoFeasiblePoint("rho_min >= rho_max leaves no admissible cam radius".into()));
    }
    initial.check(config)?;
    let desired = model::desired_grid(config, tau_d);
    // the start must be evaluable; surface the actual failure otherwise
    model::evaluate_with_desired(initial, config, &desired)?;

    let opts = &config.solver;
    let mut inner_config = config.clone();
    inner_config.solver.exec = ExecMode::Sequential;
    let problem = DesignProblem {
        config: &inner_config,
        desired: &desired,
        template: initial,
        margins: ConstraintMargins {
            convexity: 2.0 * EPS_CONVEXITY,
            radius: 2.0 * EPS_EXTENSION,
            extension_upper: 2.0 * EPS_EXTENSION,
            extension_lower: EPS_EXTENSION,
        },
        scale: opts.var_scale,
    };
    let al = nlp::AlOptions {
        max_outer: opts.max_outer,
        max_inner: opts.max_inner,
        grad_tol: opts.grad_tol,
        feas_tol: opts.feas_tol,
        fd_step: opts.fd_step,
        exec: opts.exec,
        ..Default::default()
    };
    let starts = start_points(initial, opts);
    let runs = exec::map(opts.exec, &starts, |s| {
        let z0: Vec<f64> = s.to_vec().iter().map(|v| v / opts.var_scale).collect();
        let r = nlp::minimize(&problem, z0, &al);
        let d = problem.design(&r.z);
        let report =
            model::evaluate_with_desired(&d, config, &desired).ok().map(|e| DesignReport::assemble(&d, config, e));
        (r, report)
    });

    let mut best: Option<(nlp::AlResult, DesignReport)> = None;
    let mut closest = f64::INFINITY;
    for (r, report) in runs {
        closest = closest.min(r.violation);
        let Some(report) = report else { continue };
        let better = match &best {
            None => true,
            Some((_, b)) => (report.feasible, -report.objective) > (b.feasible, -b.objective),
        };
        if better {
            best = Some((r, report));
        }
    }
    let Some((r, mut report)) = best.filter(|(_, rep)| rep.feasible) else {
        return Err(if closest > 1e-3 {
            Error::NoFeasiblePoint(format!("largest scaled constraint violation {closest:.3e}"))
        } else {
            Error::MaxIterations { violation: closest }
        });
    };
    report.iterations = r.inner_iterations;
    report.outer_iterations = r.outer_iterations;
    report.converged = r.status == nlp::Status::Converged;
    report.merit_history = r.merit_history;
    report.runtime_s = start.elapsed().as_secs_f64();
    Ok(report)
}
