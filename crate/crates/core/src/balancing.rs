//! Desired joint torques and wire friction characterization.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STANDARD_GRAVITY: f64 = 9.81;

/// Two-link arm whose self weight the cams balance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RRArmParams {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub lc1: f64,
    pub lc2: f64,
    #[serde(default = "default_g")]
    pub g: f64,
}

fn default_g() -> f64 {
    STANDARD_GRAVITY
}

impl Default for RRArmParams {
    fn default() -> Self {
        Self { m1: 0.5, m2: 0.5, l1: 0.5, lc1: 0.25, lc2: 0.25, g: STANDARD_GRAVITY }
    }
}

impl RRArmParams {
    pub fn validate(&self) -> Result<()> {
        let fields =
            [("m1", self.m1), ("m2", self.m2), ("l1", self.l1), ("lc1", self.lc1), ("lc2", self.lc2), ("g", self.g)];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("arm parameter `{name}` must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Gravity balancing torques `(tau_d1, tau_d2)` of the arm, with both links
/// pointing straight up at `theta1 = theta2 = 0`.
pub fn rr_gravity_torques(p: &RRArmParams, theta1: f64, theta2: f64) -> (f64, f64) {
    let s1 = theta1.sin();
    let s12 = (theta1 + theta2).sin();
    let tau2 = p.m2 * p.g * p.lc2 * s12;
    (p.m1 * p.g * p.lc1 * s1 + p.m2 * p.g * p.l1 * s1 + tau2, tau2)
}

/// `sum coeffs[k] theta^k` (lowest power first).
pub fn polynomial_torque(coeffs: &[f64], theta: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * theta + c)
}

/// Friction coefficient from a capstan slip test: `mu = ln(f/f0) / wrap`.
pub fn friction_mu_from_slip(f: f64, f0: f64, wrap_angle: f64) -> Result<f64> {
    if !(f0 > 0.0) || !(f >= f0) || !f.is_finite() {
        return Err(Error::Domain(format!("slip test needs f >= f0 > 0, got f = {f}, f0 = {f0}")));
    }
    if !(wrap_angle > 0.0 && wrap_angle.is_finite()) {
        return Err(Error::Domain(format!("wrap angle must be positive, got {wrap_angle}")));
    }
    Ok((f / f0).ln() / wrap_angle)
}

type Row = (f64, f64, f64, Option<f64>);

/// Desired torque sampled on a tensor grid, bilinearly interpolated.
///
/// One-joint tables have a single `theta2` node. Queries outside the table
/// are clamped to its edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorqueTable {
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    /// Row-major `theta1 x theta2`.
    pub tau1: Vec<f64>,
    pub tau2: Option<Vec<f64>>,
}

impl TorqueTable {
    /// Reads `theta1_rad[,theta2_rad],tau_d1_Nm[,tau_d2_Nm]`. Rows may come in
    /// any order but must cover the full grid.
    pub fn from_csv_reader<R: std::io::Read>(rdr: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(rdr);
        let headers = r.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let t1 = col("theta1_rad").ok_or_else(|| Error::Config("torque table: missing column `theta1_rad`".into()))?;
        let d1 = col("tau_d1_Nm").ok_or_else(|| Error::Config("torque table: missing column `tau_d1_Nm`".into()))?;
        let (t2, d2) = (col("theta2_rad"), col("tau_d2_Nm"));

        let mut rows = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let get = |c: usize| -> Result<f64> {
                rec.get(c)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::Config(format!("torque table: bad number on data row {}", line + 1)))
            };
            let a = get(t1)?;
            let b = t2.map(get).transpose()?.unwrap_or(0.0);
            rows.push((a, b, get(d1)?, d2.map(get).transpose()?));
        }
        let axis = |sel: fn(&Row) -> f64| {
            let mut v: Vec<f64> = rows.iter().map(sel).collect();
            v.sort_by(|a, b| a.total_cmp(b));
            v.dedup();
            v
        };
        let theta1 = axis(|r| r.0);
        let theta2 = axis(|r| r.1);
        let (n1, n2) = (theta1.len(), theta2.len());
        if n1 < 2 || rows.len() != n1 * n2 {
            return Err(Error::Config(format!(
                "torque table must be a full grid with at least two theta1 nodes ({} rows for {n1} x {n2})",
                rows.len()
            )));
        }
        let mut tau1 = vec![f64::NAN; n1 * n2];
        let mut tau2 = d2.map(|_| vec![f64::NAN; n1 * n2]);
        for (a, b, v1, v2) in rows {
            let i = theta1.binary_search_by(|x| x.total_cmp(&a)).unwrap();
            let j = theta2.binary_search_by(|x| x.total_cmp(&b)).unwrap();
            tau1[i * n2 + j] = v1;
            if let (Some(t), Some(v)) = (tau2.as_mut(), v2) {
                t[i * n2 + j] = v;
            }
        }
        if tau1.iter().chain(tau2.iter().flatten()).any(|v| v.is_nan()) {
            return Err(Error::Config("torque table has duplicate or missing grid nodes".into()));
        }
        Ok(Self { theta1, theta2, tau1, tau2 })
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(f)
    }

    fn locate(axis: &[f64], x: f64) -> (usize, f64) {
        if axis.len() == 1 {
            return (0, 0.0);
        }
        let x = x.clamp(axis[0], axis[axis.len() - 1]);
        let i = match axis.partition_point(|&a| a <= x) {
            0 => 0,
            p => (p - 1).min(axis.len() - 2),
        };
        (i, (x - axis[i]) / (axis[i + 1] - axis[i]))
    }

    fn interp(&self, values: &[f64], theta1: f64, theta2: f64) -> f64 {
        let n2 = self.theta2.len();
        let (i, u) = Self::locate(&self.theta1, theta1);
        let (j, v) = Self::locate(&self.theta2, theta2);
        let at = |a: usize, b: usize| values[a * n2 + b.min(n2 - 1)];
        let j1 = if n2 > 1 { j + 1 } else { j };
        let lo = at(i, j) * (1.0 - v) + at(i, j1) * v;
        let hi = at(i + 1, j) * (1.0 - v) + at(i + 1, j1) * v;
        lo * (1.0 - u) + hi * u
    }

    pub fn eval(&self, theta1: f64, theta2: f64) -> (f64, f64) {
        let t1 = self.interp(&self.tau1, theta1, theta2);
        let t2 = self.tau2.as_ref().map_or(0.0, |t| self.interp(t, theta1, theta2));
        (t1, t2)
    }
}

pub type TorqueFn = Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>;

/// Source of the desired torques `(tau_d1, tau_d2)` in N m.
#[derive(Clone)]
pub enum DesiredTorque {
    RrArm(RRArmParams),
    /// `tau_d1 = poly(cam1, theta1)`, `tau_d2 = poly(cam2, theta2)`.
    Polynomial {
        cam1: Vec<f64>,
        cam2: Vec<f64>,
    },
    Table(TorqueTable),
    Custom(TorqueFn),
}

impl fmt::Debug for DesiredTorque {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::RrArm(p) => f.debug_tuple("RrArm").field(p).finish(),
            Self::Polynomial { cam1, cam2 } => {
                f.debug_struct("Polynomial").field("cam1", cam1).field("cam2", cam2).finish()
            }
            Self::Table(t) => f.debug_tuple("Table").field(&(t.theta1.len(), t.theta2.len())).finish(),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl DesiredTorque {
    pub fn eval(&self, theta1: f64, theta2: f64) -> (f64, f64) {
        match self {
            Self::RrArm(p) => rr_gravity_torques(p, theta1, theta2),
            Self::Polynomial { cam1, cam2 } => (polynomial_torque(cam1, theta1), polynomial_torque(cam2, theta2)),
            Self::Table(t) => t.eval(theta1, theta2),
            Self::Custom(f) => f(theta1, theta2),
        }
    }
}
