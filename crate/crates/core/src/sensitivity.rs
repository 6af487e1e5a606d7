//! Sensitivity of cam torque to the spring constants.
//!
//! With the cam geometry fixed the torque is linear in every `k`, so the
//! partial derivatives are the torque contributions with the stiffness
//! divided out: `dtau/dk = x * (moment arm per unit force)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::CamProfile;
use crate::quadrature;
use crate::tangency::TangencySolution;
use crate::torque::{self, WireState};

/// Smoothing of `|s|` as `sqrt(s^2 + delta^2)` (N m per N/m).
pub const SMOOTH_ABS_DELTA: f64 = 1e-9;

pub fn smooth_abs(s: f64) -> f64 {
    s.hypot(SMOOTH_ABS_DELTA)
}

/// `(dtau1/dk1, dtau1/dk2)` for the point-force model.
pub fn dtau_dk_infinite(profile: &CamProfile, sol: &TangencySolution, x1: f64, x2: f64) -> Result<(f64, f64)> {
    let arms = torque::moment_arms(profile, sol)?;
    Ok((x1 * arms.tangent, x2 * arms.normal))
}

/// `dtau1/dk1` with capstan friction on the wrapped wire.
///
/// The tension at the contact is `k1 x1`, so the derivative is the torque
/// produced by a contact tension of `x1`: the anchor moment
/// `r(0) x t(0) x1 e^{-mu alpha}` plus the distributed load moment.
pub fn dtau_dk_finite(profile: &CamProfile, alpha: f64, mu: f64, x1: f64) -> f64 {
    torque::cam_torque_finite(profile, &WireState { tension_at_contact: x1, alpha }, mu)
}

/// Partial derivatives sampled on a torque grid.
///
/// Layout matches [`torque::TorqueGrid`]: row-major over `theta1 x theta2`
/// with `theta2` empty for one-cam mechanisms. Entry `partials[c]` is the
/// column named `names[c]`, e.g. `dtau1_dk2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityGrid {
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub names: Vec<String>,
    /// N m per N/m (m^2).
    pub partials: Vec<Vec<f64>>,
}

impl SensitivityGrid {
    fn dims(&self) -> (usize, usize) {
        (self.theta1.len(), self.theta2.len().max(1))
    }

    fn steps(&self) -> (f64, f64) {
        let h = |t: &[f64]| if t.len() > 1 { (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64 } else { 1.0 };
        (h(&self.theta1), h(&self.theta2))
    }

    /// Trapezoid integral of `|partials[c]|` over the sampled domain.
    pub fn integral_abs(&self, c: usize) -> f64 {
        let (n1, n2) = self.dims();
        let (h1, h2) = self.steps();
        let v: Vec<f64> = self.partials[c].iter().map(|&s| smooth_abs(s)).collect();
        quadrature::trapezoid_2d(&v, n1, n2, h1, h2)
    }

    /// CSV mirroring the torque grid, one column per partial (m^2).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["theta1_rad".to_string()];
        if !self.theta2.is_empty() {
            header.push("theta2_rad".into());
        }
        header.extend(self.names.iter().map(|n| format!("{n}_m2")));
        w.write_record(&header)?;
        let (n1, n2) = self.dims();
        for i in 0..n1 {
            for j in 0..n2 {
                let k = i * n2 + j;
                let mut row = vec![self.theta1[i].to_string()];
                if !self.theta2.is_empty() {
                    row.push(self.theta2[j].to_string());
                }
                row.extend(self.partials.iter().map(|p| p[k].to_string()));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// `sum_c weights[c] * int |partials[c]|`.
///
/// Zero weights skip their column entirely.
pub fn sensitivity_objective(grid: &SensitivityGrid, weights: &[f64]) -> f64 {
    assert_eq!(grid.partials.len(), weights.len(), "one weight per partial");
    weights.iter().enumerate().filter(|(_, w)| **w != 0.0).map(|(c, w)| w * grid.integral_abs(c)).sum()
}
