//! Cam/idler contact angles.
//!
//! For a cam rotated by `theta` the contact is located by the cam parameter
//! `alpha` and the idler angle `gamma`. Both are found by a small
//! Levenberg-Marquardt solve on three residuals: the two components of
//! `t(alpha) + t(gamma)` and the vertical closure of the contact point.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::geometry::{CamProfile, PlanePoint};

/// Maximum Levenberg-Marquardt iterations for one contact solve.
pub const MAX_ITERATIONS: usize = 200;
/// Accept a solve when the squared residual is below this value.
pub const COST_TOLERANCE: f64 = 1e-18;

const LAMBDA_INIT: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e16;
/// Keep iterating well past `COST_TOLERANCE` so downstream finite
/// differences see a smooth solution.
const COST_TARGET: f64 = 1e-30;

/// Idler roller pressed against the cam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdlerSpec {
    /// Roller radius (m).
    pub radius: f64,
    /// Vertical offset of the roller centre from the cam axis (m).
    pub offset: f64,
}

impl IdlerSpec {
    pub fn new(radius: f64, offset: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !offset.is_finite() {
            return Err(Error::Config(format!(
                "idler radius must be positive and offset finite (radius {radius}, offset {offset})"
            )));
        }
        Ok(Self { radius, offset })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangencySolution {
    pub theta: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub residual_norm: f64,
}

impl TangencySolution {
    /// World-frame contact point computed from the cam side.
    pub fn contact_point(&self, profile: &CamProfile) -> PlanePoint {
        crate::geometry::cam_point(profile, self.alpha, self.theta)
    }

    /// Idler centre implied by this contact.
    pub fn idler_center(&self, profile: &CamProfile, idler: &IdlerSpec) -> PlanePoint {
        let p = self.contact_point(profile);
        PlanePoint::new(p.x - idler.radius * self.gamma.cos(), idler.offset)
    }
}

fn idler_tangent(gamma: f64) -> PlanePoint {
    let (s, c) = gamma.sin_cos();
    PlanePoint::new(-s, c)
}

/// Raw residuals `[t(alpha)+t(gamma)]_x`, `[..]_y` and
/// `rho(alpha) sin(alpha-theta) - r sin(gamma) - a0`.
///
/// The vector is zero exactly at a valid tangency.
pub fn tangency_residual(
    profile: &CamProfile,
    idler: &IdlerSpec,
    theta: f64,
    alpha: f64,
    gamma: f64,
) -> Result<[f64; 3]> {
    let ta = crate::geometry::tangent_unit(profile, alpha, theta)?;
    let tg = idler_tangent(gamma);
    let closure = profile.rho(alpha) * (alpha - theta).sin() - idler.radius * gamma.sin() - idler.offset;
    Ok([ta.x + tg.x, ta.y + tg.y, closure])
}

/// Residual and Jacobian with the closure row scaled by `scale`.
fn residual_and_jacobian(
    profile: &CamProfile,
    idler: &IdlerSpec,
    theta: f64,
    x: [f64; 2],
    scale: f64,
) -> Option<([f64; 3], [[f64; 2]; 3])> {
    let [alpha, gamma] = x;
    let e = profile.eval(alpha);
    let psi = alpha - theta;
    let u = PlanePoint::polar(1.0, psi);
    let v = u.perp();
    let t = u * e.d1 + v * e.rho;
    let n = t.norm();
    if !(n > 0.0 && n.is_finite()) {
        return None;
    }
    let that = t * (1.0 / n);
    let dt = u * (e.d2 - e.rho) + v * (2.0 * e.d1);
    let dthat = (dt - that * that.dot(dt)) * (1.0 / n);

    let (sg, cg) = gamma.sin_cos();
    let tg = PlanePoint::new(-sg, cg);
    let dtg = PlanePoint::new(-cg, -sg);

    let (sp, cp) = psi.sin_cos();
    let closure = (e.rho * sp - idler.radius * sg - idler.offset) * scale;
    let r = [that.x + tg.x, that.y + tg.y, closure];
    let j = [[dthat.x, dtg.x], [dthat.y, dtg.y], [(e.d1 * sp + e.rho * cp) * scale, -idler.radius * cg * scale]];
    Some((r, j))
}

fn cost(r: &[f64; 3]) -> f64 {
    r[0] * r[0] + r[1] * r[1] + r[2] * r[2]
}

fn closure_scale(profile: &CamProfile, idler: &IdlerSpec) -> f64 {
    let rho0 = profile.rho(0.0);
    1.0 / if rho0 > 0.0 { rho0 } else { idler.radius }
}

/// Two-circle guess: exact for a circular cam of radius `rho(alpha)`.
pub fn initial_guess(profile: &CamProfile, idler: &IdlerSpec, theta: f64) -> (f64, f64) {
    let mut psi = 0.0;
    for _ in 0..3 {
        let reach = profile.rho(theta + psi) + idler.radius;
        let s = if reach > 0.0 { (idler.offset / reach).clamp(-1.0, 1.0) } else { 0.0 };
        psi = s.asin();
    }
    (theta + psi, psi + std::f64::consts::PI)
}

/// Solve for `(alpha, gamma)` at cam rotation `theta` from `guess`.
pub fn solve_tangency(
    profile: &CamProfile,
    idler: &IdlerSpec,
    theta: f64,
    guess: (f64, f64),
) -> Result<TangencySolution> {
    let scale = closure_scale(profile, idler);
    let fail = |residual: f64| Error::NonConvergence { theta, residual };
    if !(guess.0.is_finite() && guess.1.is_finite()) {
        return Err(fail(f64::INFINITY));
    }
    let mut x = [guess.0, guess.1];
    let (mut r, mut j) = residual_and_jacobian(profile, idler, theta, x, scale).ok_or_else(|| fail(f64::INFINITY))?;
    let mut c = cost(&r);
    let mut lambda = LAMBDA_INIT;

    for _ in 0..MAX_ITERATIONS {
        if c < COST_TARGET {
            break;
        }
        // normal equations, 2x2
        let mut a = [[0.0; 2]; 2];
        let mut g = [0.0; 2];
        for k in 0..3 {
            for p in 0..2 {
                g[p] += j[k][p] * r[k];
                for q in 0..2 {
                    a[p][q] += j[k][p] * j[k][q];
                }
            }
        }
        let mut accepted = false;
        while lambda <= LAMBDA_MAX {
            let a00 = a[0][0] + lambda;
            let a11 = a[1][1] + lambda;
            let det = a00 * a11 - a[0][1] * a[1][0];
            if det != 0.0 && det.is_finite() {
                let d0 = -(a11 * g[0] - a[0][1] * g[1]) / det;
                let d1 = -(a00 * g[1] - a[1][0] * g[0]) / det;
                let trial = [x[0] + d0, x[1] + d1];
                if let Some((tr, tj)) = residual_and_jacobian(profile, idler, theta, trial, scale) {
                    let tc = cost(&tr);
                    if tc < c {
                        let step_small = d0.abs().max(d1.abs()) <= 1e-15 * (1.0 + x[0].abs().max(x[1].abs()));
                        x = trial;
                        r = tr;
                        j = tj;
                        c = tc;
                        lambda = (lambda / 10.0).max(1e-12);
                        accepted = !step_small;
                        break;
                    }
                }
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }

    if !(c <= COST_TOLERANCE) || !(profile.rho(x[0]) > 0.0) {
        return Err(fail(c.sqrt()));
    }
    Ok(TangencySolution { theta, alpha: x[0], gamma: x[1], residual_norm: c.sqrt() })
}

/// Warm-started continuation over a monotone `theta` grid.
///
/// The first point starts from [`initial_guess`]; each later point starts
/// from the previous solution shifted by the rotation increment.
pub fn sweep_tangency(profile: &CamProfile, idler: &IdlerSpec, theta_grid: &[f64]) -> Result<Vec<TangencySolution>> {
    let mut out = Vec::with_capacity(theta_grid.len());
    let mut prev: Option<TangencySolution> = None;
    for &theta in theta_grid {
        let guess = match prev {
            Some(s) => (s.alpha + (theta - s.theta), s.gamma),
            None => initial_guess(profile, idler, theta),
        };
        let sol = solve_tangency(profile, idler, theta, guess)?;
        prev = Some(sol);
        out.push(sol);
    }
    Ok(out)
}

/// Independent solves from [`initial_guess`] at every grid point; may run in parallel.
pub fn sweep_tangency_cold(
    mode: ExecMode,
    profile: &CamProfile,
    idler: &IdlerSpec,
    theta_grid: &[f64],
) -> Result<Vec<TangencySolution>> {
    exec::map(mode, theta_grid, |&theta| solve_tangency(profile, idler, theta, initial_guess(profile, idler, theta)))
        .into_iter()
        .collect()
}

/// CSV `theta_rad,alpha_rad,gamma_rad`.
pub fn write_sweep_csv<W: Write>(out: W, sweep: &[TangencySolution]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta_rad", "alpha_rad", "gamma_rad"])?;
    for s in sweep {
        w.write_record(&[s.theta.to_string(), s.alpha.to_string(), s.gamma.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
