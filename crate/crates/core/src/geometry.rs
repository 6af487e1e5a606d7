//! Polar polynomial cam curves.
//!
//! A cam is described by `rho(phi) = beta_0 + beta_1 phi + ... + beta_n phi^n`
//! in a cam-attached frame. When the cam is rotated by `theta` the body point at
//! parameter `phi` sits at world angle `phi - theta`.

use std::io::Write;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Highest supported polynomial order is 7 (eight coefficients).
pub const MAX_COEFFS: usize = 8;
/// Sample count used to check `rho > 0` over the profile domain.
pub const POSITIVITY_SAMPLES: usize = 1024;
/// Default number of Simpson subintervals for [`arc_length`].
pub const ARC_LENGTH_SUBINTERVALS: usize = 512;

/// A point or vector in the mechanism plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub const ZERO: PlanePoint = PlanePoint { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn polar(radius: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(radius * c, radius * s)
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3-D cross product `self x o`.
    pub fn cross(self, o: Self) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Rotated by +90 degrees (`z x self`).
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for PlanePoint {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for PlanePoint {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for PlanePoint {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl Neg for PlanePoint {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Radius and its first two derivatives at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialEval {
    pub rho: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Body-frame position `r(phi)` and its derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyFrame {
    pub r: PlanePoint,
    pub dr: PlanePoint,
    pub ddr: PlanePoint,
}

/// Polynomial polar cam profile.
///
/// Coefficients are stored lowest power first: `coeffs[i]` multiplies `phi^i`
/// and carries units of metres per radian^i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CamProfile {
    coeffs: Vec<f64>,
    phi_max: f64,
}

impl CamProfile {
    /// Validated constructor: 1 to 8 finite coefficients and `rho > 0` on a
    /// dense sample of `[0, phi_max]`.
    pub fn new(coeffs: Vec<f64>, phi_max: f64) -> Result<Self> {
        let profile = Self::from_coeffs(coeffs, phi_max)?;
        if let Some(phi) = profile.first_nonpositive_sample() {
            return Err(Error::InvalidProfile(format!("rho({phi:.4}) = {:.4e} is not positive", profile.rho(phi))));
        }
        Ok(profile)
    }

    /// Constructor that checks shape but not positivity. Used inside the
    /// optimizer where positivity is a constraint, not a precondition.
    pub fn from_coeffs(coeffs: Vec<f64>, phi_max: f64) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() > MAX_COEFFS {
            return Err(Error::InvalidProfile(format!("expected 1..={MAX_COEFFS} coefficients, got {}", coeffs.len())));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidProfile("non-finite coefficient".into()));
        }
        if !(phi_max.is_finite() && phi_max >= 0.0) {
            return Err(Error::InvalidProfile(format!("phi_max = {phi_max} must be finite and >= 0")));
        }
        Ok(Self { coeffs, phi_max })
    }

    /// A circle of radius `radius`.
    pub fn circle(radius: f64, phi_max: f64) -> Result<Self> {
        Self::new(vec![radius], phi_max)
    }

    /// Build from coefficients listed highest power first.
    pub fn from_highest_first(mut coeffs: Vec<f64>, phi_max: f64) -> Result<Self> {
        coeffs.reverse();
        Self::new(coeffs, phi_max)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_highest_first(&self) -> Vec<f64> {
        self.coeffs.iter().rev().copied().collect()
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn phi_max(&self) -> f64 {
        self.phi_max
    }

    pub fn with_phi_max(mut self, phi_max: f64) -> Self {
        self.phi_max = phi_max;
        self
    }

    fn first_nonpositive_sample(&self) -> Option<f64> {
        quadrature::linspace(0.0, self.phi_max, POSITIVITY_SAMPLES).into_iter().find(|&phi| !(self.rho(phi) > 0.0))
    }

    pub fn rho(&self, phi: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * phi + c)
    }

    /// Horner evaluation of `rho`, `rho'` and `rho''`.
    pub fn eval(&self, phi: f64) -> RadialEval {
        let mut p = 0.0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for &c in self.coeffs.iter().rev() {
            d2 = d2 * phi + 2.0 * d1;
            d1 = d1 * phi + p;
            p = p * phi + c;
        }
        RadialEval { rho: p, d1, d2 }
    }

    /// `r(phi)`, `r'(phi)`, `r''(phi)` in the cam-attached frame.
    pub fn body_frame(&self, phi: f64) -> BodyFrame {
        let e = self.eval(phi);
        let radial = PlanePoint::polar(1.0, phi);
        let tangential = radial.perp();
        BodyFrame {
            r: radial * e.rho,
            dr: radial * e.d1 + tangential * e.rho,
            ddr: radial * (e.d2 - e.rho) + tangential * (2.0 * e.d1),
        }
    }
}

/// `rho(phi)` with its first and second derivatives.
pub fn eval_rho(profile: &CamProfile, phi: f64) -> RadialEval {
    profile.eval(phi)
}

/// World-frame point of body parameter `phi` when the cam is rotated by `theta`.
pub fn cam_point(profile: &CamProfile, phi: f64, theta: f64) -> PlanePoint {
    PlanePoint::polar(profile.rho(phi), phi - theta)
}

/// Unrotated derivative `d/dphi` of [`cam_point`].
pub fn tangent(profile: &CamProfile, phi: f64, theta: f64) -> PlanePoint {
    let e = profile.eval(phi);
    let radial = PlanePoint::polar(1.0, phi - theta);
    radial * e.d1 + radial.perp() * e.rho
}

/// Unit tangent of the rotated cam at `phi`, pointing toward increasing `phi`.
pub fn tangent_unit(profile: &CamProfile, phi: f64, theta: f64) -> Result<PlanePoint> {
    let t = tangent(profile, phi, theta);
    let n = t.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::DegenerateTangent { phi });
    }
    Ok(t * (1.0 / n))
}

/// `rho^2 + 2 rho'^2 - rho rho''`; positive where the curve is locally convex.
pub fn convexity_margin(profile: &CamProfile, phi: f64) -> f64 {
    let e = profile.eval(phi);
    e.rho * e.rho + 2.0 * e.d1 * e.d1 - e.rho * e.d2
}

/// Convexity numerator `x' y'' - y' x''` from the Cartesian embedding.
///
/// Algebraically identical to [`convexity_margin`]; kept as an independent
/// evaluation path.
pub fn convexity_numerator_cartesian(profile: &CamProfile, phi: f64) -> f64 {
    let e = profile.eval(phi);
    let (s, c) = phi.sin_cos();
    let dx = e.d1 * c - e.rho * s;
    let dy = e.d1 * s + e.rho * c;
    let ddx = e.d2 * c - e.rho * c - 2.0 * e.d1 * s;
    let ddy = e.d2 * s - e.rho * s + 2.0 * e.d1 * c;
    dx * ddy - dy * ddx
}

/// Length of the curve between `phi_a` and `phi_b` (composite Simpson, 512 subintervals).
pub fn arc_length(profile: &CamProfile, phi_a: f64, phi_b: f64) -> f64 {
    arc_length_with(profile, phi_a, phi_b, ARC_LENGTH_SUBINTERVALS)
}

pub fn arc_length_with(profile: &CamProfile, phi_a: f64, phi_b: f64, subintervals: usize) -> f64 {
    quadrature::simpson(
        |phi| {
            let e = profile.eval(phi);
            e.rho.hypot(e.d1)
        },
        phi_a,
        phi_b,
        subintervals,
    )
}

/// Write the profile as CSV `phi_rad,rho_m,x_m,y_m` on a uniform grid.
///
/// At least 360 rows are written regardless of `rows`.
pub fn write_profile_csv<W: Write>(out: W, profile: &CamProfile, rows: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["phi_rad", "rho_m", "x_m", "y_m"])?;
    for phi in quadrature::linspace(0.0, profile.phi_max(), rows.max(360)) {
        let p = cam_point(profile, phi, 0.0);
        w.write_record(&[phi.to_string(), profile.rho(phi).to_string(), p.x.to_string(), p.y.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
