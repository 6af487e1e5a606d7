//! Spring extensions driven by the cam, and helical spring sizing from wire geometry.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, CamProfile};
use crate::tangency::{IdlerSpec, TangencySolution};
use crate::units::{Dimension, QuantityInput};

/// Linear extension spring. Force is `k * x` with no separate pre-tension term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpringSpec {
    /// Stiffness (N/m).
    pub k: f64,
    /// Extension at the reference configuration (m).
    pub x_pre: f64,
    /// Maximum allowable extension (m).
    pub x_max: f64,
}

impl SpringSpec {
    pub fn new(k: f64, x_pre: f64, x_max: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Config(format!("spring stiffness must be positive, got {k}")));
        }
        if !(x_pre >= 0.0 && x_pre <= x_max && x_max.is_finite()) {
            return Err(Error::Config(format!(
                "spring extensions must satisfy 0 <= x_pre <= x_max (x_pre {x_pre}, x_max {x_max})"
            )));
        }
        Ok(Self { k, x_pre, x_max })
    }

    pub fn force(&self, x: f64) -> f64 {
        self.k * x
    }
}

/// Helical extension spring geometry and material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpringWireGeometry {
    /// Wire diameter `d` (m).
    pub wire_diameter: f64,
    /// Outer coil diameter `D` (m).
    pub outer_diameter: f64,
    /// Number of active coils.
    pub coils: f64,
    /// Shear modulus `G` (Pa).
    pub shear_modulus: f64,
    /// Yield stress (Pa).
    pub yield_stress: f64,
    /// Safety factor, at least 1.
    pub safety_factor: f64,
}

impl SpringWireGeometry {
    pub fn mean_diameter(&self) -> f64 {
        self.outer_diameter - self.wire_diameter
    }

    pub fn spring_index(&self) -> f64 {
        self.mean_diameter() / self.wire_diameter
    }

    /// Bergstrasser stress-correction factor `(4c + 2) / (4c - 3)`.
    pub fn bergstrasser(&self) -> f64 {
        let c = self.spring_index();
        (4.0 * c + 2.0) / (4.0 * c - 3.0)
    }

    /// Maximum shear stress in the wire under axial load `force`.
    pub fn shear_stress(&self, force: f64) -> f64 {
        let d = self.wire_diameter;
        self.bergstrasser() * 8.0 * force * self.mean_diameter() / (PI * d * d * d)
    }

    /// Deflection under `force`, including the `1 + 1/(2c^2)` correction.
    pub fn deflection(&self, force: f64) -> f64 {
        let d = self.wire_diameter;
        let dm = self.mean_diameter();
        let c = self.spring_index();
        8.0 * force * dm.powi(3) * self.coils / (d.powi(4) * self.shear_modulus) * (1.0 + 1.0 / (2.0 * c * c))
    }

    fn validate(&self) -> Result<()> {
        let g = self;
        let positive = [g.wire_diameter, g.outer_diameter, g.coils, g.shear_modulus, g.yield_stress];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidGeometry("all spring parameters must be positive and finite".into()));
        }
        if g.mean_diameter() <= 0.0 {
            return Err(Error::InvalidGeometry(format!(
                "outer diameter {} must exceed wire diameter {}",
                g.outer_diameter, g.wire_diameter
            )));
        }
        if g.spring_index() <= 0.75 {
            return Err(Error::InvalidGeometry(format!("spring index {} must exceed 3/4", g.spring_index())));
        }
        if g.coils < 1.0 {
            return Err(Error::InvalidGeometry(format!("need at least one coil, got {}", g.coils)));
        }
        if !(g.safety_factor >= 1.0 && g.safety_factor.is_finite()) {
            return Err(Error::InvalidGeometry(format!("safety factor {} must be >= 1", g.safety_factor)));
        }
        Ok(())
    }
}

/// Result of sizing a spring from its geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpringDesign {
    pub spec: SpringSpec,
    /// Largest force keeping shear stress below yield / (2 n_s).
    pub f_max: f64,
    pub spring_index: f64,
    pub bergstrasser: f64,
}

/// Stiffness, maximum force and maximum extension from wire geometry.
///
/// The allowable shear stress is half the yield stress (Tresca) divided by
/// the safety factor. `x_pre` of the returned spec is zero.
pub fn design_spring(geom: &SpringWireGeometry) -> Result<SpringDesign> {
    geom.validate()?;
    let d = geom.wire_diameter;
    let dm = geom.mean_diameter();
    let c = geom.spring_index();
    let kb = geom.bergstrasser();
    let correction = 1.0 + 1.0 / (2.0 * c * c);
    let f_max = PI * d.powi(3) * geom.yield_stress / (16.0 * geom.safety_factor * kb * dm);
    let k = d.powi(4) * geom.shear_modulus / (8.0 * dm.powi(3) * geom.coils) / correction;
    let x_max = 8.0 * f_max * dm.powi(3) * geom.coils * correction / (d.powi(4) * geom.shear_modulus);
    Ok(SpringDesign { spec: SpringSpec { k, x_pre: 0.0, x_max }, f_max, spring_index: c, bergstrasser: kb })
}

/// Extension of the spring on the wrapped wire.
///
/// `x1 = L(alpha0, alpha) + r (gamma - gamma0) + x_pre` where `L` is the cam
/// arc length and `sol0` is the contact at the reference rotation.
pub fn wrap_spring_extension(
    profile: &CamProfile,
    idler: &IdlerSpec,
    sol: &TangencySolution,
    sol0: &TangencySolution,
    x_pre: f64,
) -> f64 {
    wrap_spring_extension_with(profile, idler, sol, sol0, x_pre, geometry::ARC_LENGTH_SUBINTERVALS)
}

pub fn wrap_spring_extension_with(
    profile: &CamProfile,
    idler: &IdlerSpec,
    sol: &TangencySolution,
    sol0: &TangencySolution,
    x_pre: f64,
    subintervals: usize,
) -> f64 {
    geometry::arc_length_with(profile, sol0.alpha, sol.alpha, subintervals)
        + idler.radius * (sol.gamma - sol0.gamma)
        + x_pre
}

/// Horizontal idler displacement relative to the reference configuration,
/// i.e. this cam's contribution to the idler spring extension.
pub fn normal_contribution(
    profile: &CamProfile,
    idler: &IdlerSpec,
    sol: &TangencySolution,
    sol0: &TangencySolution,
) -> f64 {
    let x = |s: &TangencySolution| profile.rho(s.alpha) * (s.alpha - s.theta).cos() - idler.radius * s.gamma.cos();
    x(sol) - x(sol0)
}

/// Extension of the spring pressing the idler against a single cam.
pub fn normal_spring_extension(
    profile: &CamProfile,
    idler: &IdlerSpec,
    sol: &TangencySolution,
    sol0: &TangencySolution,
    x_pre: f64,
) -> f64 {
    x_pre + normal_contribution(profile, idler, sol, sol0)
}

/// One cam's contact state, as needed by two-cam extension formulas.
#[derive(Debug, Clone, Copy)]
pub struct CamContact<'a> {
    pub profile: &'a CamProfile,
    pub idler: &'a IdlerSpec,
    pub sol: TangencySolution,
    pub sol0: TangencySolution,
}

impl CamContact<'_> {
    pub fn normal_contribution(&self) -> f64 {
        normal_contribution(self.profile, self.idler, &self.sol, &self.sol0)
    }
}

/// Extension of the spring joining both idler platforms.
pub fn coupling_spring_extension_2dof(cam1: &CamContact<'_>, cam2: &CamContact<'_>, x_pre: f64) -> f64 {
    x_pre + cam1.normal_contribution() + cam2.normal_contribution()
}

/// Extensions of every spring at one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtensionState {
    pub x1: f64,
    pub x2: f64,
    /// Wrap spring of the second cam (two-cam mechanisms only).
    pub x3: Option<f64>,
    /// Per-cam contributions to `x2`.
    pub x2_contributions: [f64; 2],
}

/// Spring catalog entry as written in a config file (units allowed).
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SpringEntry {
    pub k: QuantityInput,
    pub x_max: QuantityInput,
    #[serde(default)]
    pub x_pre: Option<QuantityInput>,
}

impl SpringEntry {
    pub fn to_spec(&self, name: &str) -> Result<SpringSpec> {
        let k = self.k.to_si(Dimension::Stiffness, &format!("{name}.k"))?;
        let x_max = self.x_max.to_si(Dimension::Length, &format!("{name}.x_max"))?;
        let x_pre = match &self.x_pre {
            Some(q) => q.to_si(Dimension::Length, &format!("{name}.x_pre"))?,
            None => 0.0,
        };
        SpringSpec::new(k, x_pre, x_max).map_err(|e| Error::Config(format!("spring `{name}`: {e}")))
    }
}

/// Named springs, e.g.
///
/// ```toml
/// [spring.s1]
/// k = "1.10 N/mm"
/// x_max = "57.66 mm"
/// ```
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
pub struct SpringCatalog {
    #[serde(default)]
    pub spring: BTreeMap<String, SpringEntry>,
}

impl SpringCatalog {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn get(&self, name: &str) -> Result<SpringSpec> {
        self.spring
            .get(name)
            .ok_or_else(|| Error::Config(format!("spring `{name}` not found in catalog")))?
            .to_spec(name)
    }
}
