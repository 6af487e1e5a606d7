//! Synthesis of spring-loaded, wire-wrapped cams for static balancing.
//!
//! The crate covers the forward model of one- and two-cam mechanisms (contact
//! geometry, spring extensions, wire friction, torque and its sensitivity to
//! spring stiffness) and a constrained optimizer that picks polynomial cam
//! profiles and spring pre-extensions to match a desired torque.

// NaN must fail these checks, so `!(x > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod balancing;
pub mod config;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod optimizer;
pub mod quadrature;
pub mod sensitivity;
pub mod springs;
pub mod tangency;
pub mod torque;
pub mod units;

pub use error::{Error, Result};
pub use exec::ExecMode;
pub use geometry::{CamProfile, PlanePoint};
pub use springs::{SpringSpec, SpringWireGeometry};
pub use tangency::{IdlerSpec, TangencySolution};
pub use torque::{FrictionMode, FrictionModel};
