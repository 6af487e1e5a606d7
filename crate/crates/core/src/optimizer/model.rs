//! Forward model on the design grid: contacts, extensions, torques and
//! sensitivities for a candidate design.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exec::{self, ExecMode};
use crate::geometry::{self, CamProfile};
use crate::quadrature;
use crate::sensitivity::SensitivityGrid;
use crate::springs;
use crate::tangency::{self, TangencySolution};
use crate::torque::{self, TorqueGrid};

use super::{CamSetup, DesignVector, Dof, MechanismConfig};

/// Per-cam samples along its own rotation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CamSamples {
    pub theta: Vec<f64>,
    pub contacts: Vec<TangencySolution>,
    /// Wrap-spring extension minus its pre-extension (m).
    pub wrap: Vec<f64>,
    /// Idler displacement, i.e. this cam's share of the idler spring extension (m).
    pub normal: Vec<f64>,
    /// Wrap-spring torque per newton of wire tension (m).
    pub wrap_arm: Vec<f64>,
    /// Idler-spring torque per newton of idler force (m).
    pub normal_arm: Vec<f64>,
}

impl CamSamples {
    pub fn alpha_max(&self) -> f64 {
        self.contacts.iter().map(|s| s.alpha).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Spring extensions on the design grid (m), laid out like [`TorqueGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionGrid {
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    /// One entry per spring, each covering the whole grid.
    pub x: Vec<Vec<f64>>,
}

impl ExtensionGrid {
    /// CSV `theta1_rad[,theta2_rad],x1_mm,x2_mm[,x3_mm]`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["theta1_rad".to_string()];
        if !self.theta2.is_empty() {
            header.push("theta2_rad".into());
        }
        header.extend((1..=self.x.len()).map(|i| format!("x{i}_mm")));
        w.write_record(&header)?;
        let n2 = self.theta2.len().max(1);
        for (i, t1) in self.theta1.iter().enumerate() {
            for j in 0..n2 {
                let k = i * n2 + j;
                let mut row = vec![t1.to_string()];
                if let Some(t2) = self.theta2.get(j) {
                    row.push(t2.to_string());
                }
                row.extend(self.x.iter().map(|x| (x[k] * 1e3).to_string()));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Everything the objective, constraints and reports need from one design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub profiles: Vec<CamProfile>,
    pub cams: Vec<CamSamples>,
    pub torque: TorqueGrid,
    pub desired: TorqueGrid,
    pub extensions: ExtensionGrid,
    pub sensitivity: SensitivityGrid,
}

/// Profiles carry a generous angular range; positivity is a design constraint.
pub(crate) fn build_profiles(design: &DesignVector, config: &MechanismConfig) -> Result<Vec<CamProfile>> {
    design
        .betas
        .iter()
        .zip(&config.theta)
        .map(|(b, dom)| CamProfile::from_coeffs(b.clone(), dom.max + std::f64::consts::TAU))
        .collect()
}

pub(crate) fn sample_cam(profile: &CamProfile, setup: &CamSetup, theta: &[f64], mode: ExecMode) -> Result<CamSamples> {
    let idler = &setup.idler;
    let contacts = tangency::sweep_tangency(profile, idler, theta)?;
    let sol0 = if theta.first() == Some(&0.0) {
        contacts[0]
    } else {
        tangency::solve_tangency(profile, idler, 0.0, tangency::initial_guess(profile, idler, 0.0))?
    };
    let per_point: Vec<Result<[f64; 4]>> = exec::map(mode, &contacts, |s| {
        let arms = torque::moment_arms(profile, s)?;
        let wrap_arm = torque::wrap_torque_per_tension(profile, s, &setup.friction)?;
        Ok([
            springs::wrap_spring_extension(profile, idler, s, &sol0, 0.0),
            springs::normal_contribution(profile, idler, s, &sol0),
            wrap_arm,
            arms.normal,
        ])
    });
    let mut out = CamSamples {
        theta: theta.to_vec(),
        contacts,
        wrap: Vec::with_capacity(theta.len()),
        normal: Vec::with_capacity(theta.len()),
        wrap_arm: Vec::with_capacity(theta.len()),
        normal_arm: Vec::with_capacity(theta.len()),
    };
    for p in per_point {
        let [a, b, c, d] = p?;
        out.wrap.push(a);
        out.normal.push(b);
        out.wrap_arm.push(c);
        out.normal_arm.push(d);
    }
    Ok(out)
}

pub(crate) fn desired_grid(config: &MechanismConfig, tau_d: &crate::balancing::DesiredTorque) -> TorqueGrid {
    let theta1 = config.theta[0].grid();
    match config.dof {
        Dof::One => TorqueGrid {
            tau1: theta1.iter().map(|&t| tau_d.eval(t, 0.0).0).collect(),
            theta1,
            theta2: Vec::new(),
            tau2: Vec::new(),
        },
        Dof::Two => {
            let theta2 = config.theta[1].grid();
            let (mut tau1, mut tau2) = (Vec::new(), Vec::new());
            for &a in &theta1 {
                for &b in &theta2 {
                    let (t1, t2) = tau_d.eval(a, b);
                    tau1.push(t1);
                    tau2.push(t2);
                }
            }
            TorqueGrid { theta1, theta2, tau1, tau2 }
        }
    }
}

/// Evaluate a design against a precomputed desired-torque grid.
pub fn evaluate_with_desired(
    design: &DesignVector,
    config: &MechanismConfig,
    desired: &TorqueGrid,
) -> Result<Evaluation> {
    let mode = config.solver.exec;
    let profiles = build_profiles(design, config)?;
    let cams: Vec<CamSamples> = profiles
        .iter()
        .zip(&config.cams)
        .zip(&config.theta)
        .map(|((p, setup), dom)| sample_cam(p, setup, &dom.grid(), mode))
        .collect::<Result<_>>()?;
    let k: Vec<f64> = config.springs.iter().map(|s| s.k).collect();
    let x0 = &design.x0;

    let (torque, extensions, sensitivity) = match config.dof {
        Dof::One => {
            let c = &cams[0];
            let x1: Vec<f64> = c.wrap.iter().map(|w| x0[0] + w).collect();
            let x2: Vec<f64> = c.normal.iter().map(|w| x0[1] + w).collect();
            let d1: Vec<f64> = x1.iter().zip(&c.wrap_arm).map(|(x, a)| x * a).collect();
            let d2: Vec<f64> = x2.iter().zip(&c.normal_arm).map(|(x, a)| x * a).collect();
            let tau1 = d1.iter().zip(&d2).map(|(a, b)| k[0] * a + k[1] * b).collect();
            (
                TorqueGrid { theta1: c.theta.clone(), theta2: Vec::new(), tau1, tau2: Vec::new() },
                ExtensionGrid { theta1: c.theta.clone(), theta2: Vec::new(), x: vec![x1, x2] },
                SensitivityGrid {
                    theta1: c.theta.clone(),
                    theta2: Vec::new(),
                    names: vec!["dtau1_dk1".into(), "dtau1_dk2".into()],
                    partials: vec![d1, d2],
                },
            )
        }
        Dof::Two => {
            let (c1, c2) = (&cams[0], &cams[1]);
            let (n1, n2) = (c1.theta.len(), c2.theta.len());
            let n = n1 * n2;
            let mut x = vec![Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
            let mut p: Vec<Vec<f64>> = (0..6).map(|_| Vec::with_capacity(n)).collect();
            let (mut tau1, mut tau2) = (Vec::with_capacity(n), Vec::with_capacity(n));
            for i in 0..n1 {
                let x1 = x0[0] + c1.wrap[i];
                for j in 0..n2 {
                    let x3 = x0[2] + c2.wrap[j];
                    let x2 = x0[1] + c1.normal[i] + c2.normal[j];
                    let d = [
                        x1 * c1.wrap_arm[i],
                        x2 * c1.normal_arm[i],
                        0.0,
                        0.0,
                        x2 * c2.normal_arm[j],
                        x3 * c2.wrap_arm[j],
                    ];
                    tau1.push(k[0] * d[0] + k[1] * d[1]);
                    tau2.push(k[1] * d[4] + k[2] * d[5]);
                    for (col, v) in p.iter_mut().zip(d) {
                        col.push(v);
                    }
                    x[0].push(x1);
                    x[1].push(x2);
                    x[2].push(x3);
                }
            }
            let names = ["dtau1_dk1", "dtau1_dk2", "dtau1_dk3", "dtau2_dk1", "dtau2_dk2", "dtau2_dk3"];
            (
                TorqueGrid { theta1: c1.theta.clone(), theta2: c2.theta.clone(), tau1, tau2 },
                ExtensionGrid { theta1: c1.theta.clone(), theta2: c2.theta.clone(), x },
                SensitivityGrid {
                    theta1: c1.theta.clone(),
                    theta2: c2.theta.clone(),
                    names: names.iter().map(|s| s.to_string()).collect(),
                    partials: p,
                },
            )
        }
    };
    Ok(Evaluation { profiles, cams, torque, desired: desired.clone(), extensions, sensitivity })
}

fn grid_steps(e: &Evaluation) -> (usize, usize, f64, f64) {
    let h = |t: &[f64]| if t.len() > 1 { (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64 } else { 1.0 };
    (e.torque.theta1.len(), e.torque.theta2.len().max(1), h(&e.torque.theta1), h(&e.torque.theta2))
}

/// Weighted squared torque error integral plus weighted sensitivity integrals.
pub fn objective(e: &Evaluation, weights: &[f64]) -> f64 {
    let (n1, n2, h1, h2) = grid_steps(e);
    let sq = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).collect() };
    let (torque_weights, sens_weights) = if e.torque.is_two_dof() { weights.split_at(2) } else { weights.split_at(1) };
    let mut total = torque_weights[0] * quadrature::trapezoid_2d(&sq(&e.torque.tau1, &e.desired.tau1), n1, n2, h1, h2);
    if e.torque.is_two_dof() && torque_weights[1] != 0.0 {
        total += torque_weights[1] * quadrature::trapezoid_2d(&sq(&e.torque.tau2, &e.desired.tau2), n1, n2, h1, h2);
    }
    total + crate::sensitivity::sensitivity_objective(&e.sensitivity, sens_weights)
}

/// Constraint margins used both inside the solver and in reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintMargins {
    /// Convexity margin floor (m^2).
    pub convexity: f64,
    /// Distance kept from the radius bounds (m).
    pub radius: f64,
    /// Distance kept below `x_max` (m).
    pub extension_upper: f64,
    /// Distance kept above zero extension (m).
    pub extension_lower: f64,
}

pub const CONVEXITY_SAMPLES: usize = 128;
/// Extra wrap angle checked beyond the largest observed contact.
pub const CONVEXITY_OVERHANG: f64 = 0.2;

pub(crate) fn radius_scale(setup: &CamSetup) -> f64 {
    setup.rho_min.max(0.01)
}

pub(crate) fn check_angles(e: &Evaluation, cam: usize) -> Vec<f64> {
    quadrature::linspace(0.0, e.cams[cam].alpha_max() + CONVEXITY_OVERHANG, CONVEXITY_SAMPLES)
}

/// Scaled constraint values `g >= 0`.
pub fn constraints(e: &Evaluation, design: &DesignVector, config: &MechanismConfig, m: &ConstraintMargins) -> Vec<f64> {
    let mut g = Vec::new();
    for (i, (profile, setup)) in e.profiles.iter().zip(&config.cams).enumerate() {
        let s = radius_scale(setup);
        for phi in check_angles(e, i) {
            let rho = profile.rho(phi);
            g.push((geometry::convexity_margin(profile, phi) - m.convexity) / (s * s));
            g.push((rho - setup.rho_min - m.radius) / s);
            g.push((setup.rho_max - rho - m.radius) / s);
        }
    }
    for (x, spring) in e.extensions.x.iter().zip(&config.springs) {
        for &xi in x {
            g.push((xi - m.extension_lower) / spring.x_max);
            g.push((spring.x_max - m.extension_upper - xi) / spring.x_max);
        }
    }
    for (x0, spring) in design.x0.iter().zip(&config.springs) {
        g.push(x0 / spring.x_max);
    }
    g
}
