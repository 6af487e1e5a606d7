//! Unit-suffixed quantities such as `"1.10 N/mm"` or `"90 deg"`.
//!
//! Everything is converted to SI on input. Bare numbers are taken as SI.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Stiffness,
    Angle,
    Mass,
    Force,
    Pressure,
    Acceleration,
    Torque,
    Dimensionless,
}

impl Dimension {
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dimension::Length => &[("m", 1.0), ("cm", 1e-2), ("mm", 1e-3), ("um", 1e-6), ("in", 0.0254)],
            Dimension::Stiffness => &[("N/m", 1.0), ("N/mm", 1e3), ("kN/m", 1e3), ("lbf/in", 175.126_835_246_476_8)],
            Dimension::Angle => &[("rad", 1.0), ("deg", std::f64::consts::PI / 180.0)],
            Dimension::Mass => &[("kg", 1.0), ("g", 1e-3)],
            Dimension::Force => &[("N", 1.0), ("kN", 1e3), ("lbf", 4.448_221_615_260_5)],
            Dimension::Pressure => &[("Pa", 1.0), ("kPa", 1e3), ("MPa", 1e6), ("GPa", 1e9)],
            Dimension::Acceleration => &[("m/s^2", 1.0), ("m/s2", 1.0)],
            Dimension::Torque => &[("N*m", 1.0), ("Nm", 1.0), ("N*mm", 1e-3), ("Nmm", 1e-3)],
            Dimension::Dimensionless => &[("", 1.0)],
        }
    }
}

/// Parse `"<number> <unit>"` (whitespace optional) into SI.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64> {
    let text = text.trim();
    let split =
        text.find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'))).unwrap_or(text.len());
    let (num, unit) = text.split_at(split);
    let value: f64 = num.trim().parse().map_err(|_| Error::Config(format!("cannot parse number in {text:?}")))?;
    let unit = unit.trim();
    if unit.is_empty() {
        return Ok(value);
    }
    dim.units().iter().find(|(name, _)| *name == unit).map(|(_, factor)| value * factor).ok_or_else(|| {
        let known: Vec<&str> = dim.units().iter().map(|(n, _)| *n).collect();
        Error::Config(format!("unknown unit {unit:?} in {text:?}; expected one of {known:?}"))
    })
}

/// A config value that is either a bare SI number or a unit-suffixed string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QuantityInput {
    Number(f64),
    Text(String),
}

impl QuantityInput {
    pub fn to_si(&self, dim: Dimension, field: &str) -> Result<f64> {
        let v = match self {
            QuantityInput::Number(v) => *v,
            QuantityInput::Text(s) => {
                parse_quantity(s, dim).map_err(|e| Error::Config(format!("field `{field}`: {e}")))?
            }
        };
        if !v.is_finite() {
            return Err(Error::Config(format!("field `{field}` is not finite")));
        }
        Ok(v)
    }
}

impl From<f64> for QuantityInput {
    fn from(v: f64) -> Self {
        QuantityInput::Number(v)
    }
}

impl From<&str> for QuantityInput {
    fn from(s: &str) -> Self {
        QuantityInput::Text(s.to_string())
    }
}
