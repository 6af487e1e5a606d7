//! Torque applied to a cam by its springs.
//!
//! Two wire models are supported. With infinite friction the wrap spring acts
//! as a point force `k1 x1 t` at the contact. With finite friction the wire
//! tension decays toward the anchor at `phi = 0` following the capstan law
//! and the torque is the anchor moment plus the moment of the distributed
//! contact and friction load.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, CamProfile, PlanePoint};
use crate::quadrature;
use crate::springs::{self, CamContact, SpringSpec};
use crate::tangency::{self, IdlerSpec, TangencySolution};

/// Simpson subintervals for the distributed-load integral.
pub const FRICTION_SUBINTERVALS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrictionMode {
    #[default]
    Infinite,
    Finite,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FrictionModel {
    pub mode: FrictionMode,
    /// Static wire/cam friction coefficient; only used in finite mode.
    pub mu: f64,
}

impl FrictionModel {
    pub const INFINITE: FrictionModel = FrictionModel { mode: FrictionMode::Infinite, mu: 0.0 };

    pub fn finite(mu: f64) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::Domain(format!("friction coefficient must be >= 0, got {mu}")));
        }
        Ok(Self { mode: FrictionMode::Finite, mu })
    }
}

/// Wire tension at the contact and the contact parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireState {
    /// Tension where the wire leaves the cam, `eta(alpha)` (N).
    pub tension_at_contact: f64,
    pub alpha: f64,
}

/// Capstan tension `eta(phi) = eta(alpha) exp(mu (phi - alpha))` for `phi` in `[0, alpha]`.
pub fn wire_tension(eta_alpha: f64, mu: f64, alpha: f64, phi: f64) -> Result<f64> {
    let slack = 1e-12 * alpha.abs().max(1.0);
    if !(phi >= -slack && phi <= alpha + slack) {
        return Err(Error::Domain(format!("phi = {phi} outside wrapped range [0, {alpha}]")));
    }
    Ok(eta_alpha * (mu * (phi - alpha)).exp())
}

fn tension_unchecked(wire: &WireState, mu: f64, phi: f64) -> f64 {
    wire.tension_at_contact * (mu * (phi - wire.alpha)).exp()
}

/// Internal wire force `psi(phi) = eta(phi) r'/|r'|` in the cam frame.
pub fn wire_internal_force(profile: &CamProfile, phi: f64, wire: &WireState, mu: f64) -> PlanePoint {
    let dr = profile.body_frame(phi).dr;
    dr * (tension_unchecked(wire, mu, phi) / dr.norm())
}

/// `psi'(phi)`: `eta/|r'| (mu r' + r'' - r' (r'.r'')/(r'.r'))`.
pub fn wire_internal_force_derivative(profile: &CamProfile, phi: f64, wire: &WireState, mu: f64) -> PlanePoint {
    let bf = profile.body_frame(phi);
    let dr = bf.dr;
    let dd = dr.dot(dr);
    let eta = tension_unchecked(wire, mu, phi);
    (dr * mu + bf.ddr - dr * (dr.dot(bf.ddr) / dd)) * (eta / dd.sqrt())
}

/// Load per radian exerted by the cam on the wire.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributedForce {
    /// `f = -psi'` (N/rad), cam frame.
    pub force: PlanePoint,
    /// Component along the local tangent (friction).
    pub tangential: f64,
    /// Component along the outward normal (contact pressure).
    pub pressure: f64,
}

pub fn distributed_wire_force(profile: &CamProfile, phi: f64, wire: &WireState, mu: f64) -> DistributedForce {
    let force = -wire_internal_force_derivative(profile, phi, wire, mu);
    let dr = profile.body_frame(phi).dr;
    let t = dr * (1.0 / dr.norm());
    DistributedForce { force, tangential: force.dot(t), pressure: -force.dot(t.perp()) }
}

/// Torque contributions about the cam axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TorqueParts {
    /// From the wrap spring.
    pub wrap: f64,
    /// From the idler spring.
    pub normal: f64,
}

impl TorqueParts {
    pub fn total(&self) -> f64 {
        self.wrap + self.normal
    }
}

/// Moment arms at the contact: `z.(r_po x t)` and `z.(r_po x n)`.
///
/// `n` is the unit normal pointing into the cam, the direction the idler
/// pushes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentArms {
    pub tangent: f64,
    pub normal: f64,
}

pub fn moment_arms(profile: &CamProfile, sol: &TangencySolution) -> Result<MomentArms> {
    let p = geometry::cam_point(profile, sol.alpha, sol.theta);
    let t = geometry::tangent_unit(profile, sol.alpha, sol.theta)?;
    Ok(MomentArms { tangent: p.cross(t), normal: p.cross(t.perp()) })
}

/// Point-force model: `f1 = k1 x1 t`, `f2 = k2 x2 n` applied at the contact.
pub fn cam_torque_infinite(
    profile: &CamProfile,
    sol: &TangencySolution,
    wrap: (f64, f64),
    normal: (f64, f64),
) -> Result<TorqueParts> {
    let arms = moment_arms(profile, sol)?;
    Ok(TorqueParts { wrap: wrap.0 * wrap.1 * arms.tangent, normal: normal.0 * normal.1 * arms.normal })
}

/// Wrap-spring torque with capstan friction (512 Simpson subintervals).
pub fn cam_torque_finite(profile: &CamProfile, wire: &WireState, mu: f64) -> f64 {
    cam_torque_finite_with(profile, wire, mu, FRICTION_SUBINTERVALS)
}

pub fn cam_torque_finite_with(profile: &CamProfile, wire: &WireState, mu: f64, subintervals: usize) -> f64 {
    if wire.tension_at_contact == 0.0 {
        return 0.0;
    }
    let anchor = profile.body_frame(0.0).r.cross(wire_internal_force(profile, 0.0, wire, mu));
    let moment = |s: f64| profile.body_frame(s).r.cross(wire_internal_force_derivative(profile, s, wire, mu));
    let decay = mu * wire.alpha;
    let distributed = if decay > 1.0 {
        // the load concentrates near the contact; integrate in u = e^{mu (s - alpha)}
        quadrature::simpson(
            |u| moment(wire.alpha + u.ln() / mu) / (mu * u),
            (-decay).exp().max(f64::MIN_POSITIVE),
            1.0,
            subintervals,
        )
    } else {
        quadrature::simpson(moment, 0.0, wire.alpha, subintervals)
    };
    anchor + distributed
}

/// Wrap-spring torque per unit tension at the contact, for either model.
pub fn wrap_torque_per_tension(profile: &CamProfile, sol: &TangencySolution, friction: &FrictionModel) -> Result<f64> {
    match friction.mode {
        FrictionMode::Infinite => Ok(moment_arms(profile, sol)?.tangent),
        FrictionMode::Finite => {
            let wire = WireState { tension_at_contact: 1.0, alpha: sol.alpha };
            Ok(cam_torque_finite(profile, &wire, friction.mu))
        }
    }
}

/// Two cams, each with a wrap spring, sharing one spring between their idlers.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoCamMechanism {
    pub cams: [CamProfile; 2],
    pub idlers: [IdlerSpec; 2],
    pub friction: [FrictionModel; 2],
    /// Wrap spring of cam 1, coupling spring, wrap spring of cam 2.
    pub springs: [SpringSpec; 3],
}

impl TwoCamMechanism {
    fn contact(&self, i: usize, theta: f64) -> Result<(TangencySolution, TangencySolution)> {
        let (cam, idler) = (&self.cams[i], &self.idlers[i]);
        let sol0 = tangency::solve_tangency(cam, idler, 0.0, tangency::initial_guess(cam, idler, 0.0))?;
        // continue from the reference contact so both solves sit on the same branch
        let steps = ((theta.abs() / 0.05).ceil() as usize).max(1);
        let grid: Vec<f64> = (0..=steps).map(|s| theta * s as f64 / steps as f64).collect();
        let sweep = tangency::sweep_tangency(cam, idler, &grid)?;
        Ok((*sweep.last().unwrap_or(&sol0), sol0))
    }

    /// Per-cam torque contributions `(cam1, cam2)` at `(theta1, theta2)`.
    pub fn torque_parts(&self, theta1: f64, theta2: f64) -> Result<[TorqueParts; 2]> {
        let (s1, s10) = self.contact(0, theta1)?;
        let (s2, s20) = self.contact(1, theta2)?;
        let c1 = CamContact { profile: &self.cams[0], idler: &self.idlers[0], sol: s1, sol0: s10 };
        let c2 = CamContact { profile: &self.cams[1], idler: &self.idlers[1], sol: s2, sol0: s20 };
        let [k1, k2, k3] = self.springs;
        let x1 = springs::wrap_spring_extension(c1.profile, c1.idler, &s1, &s10, k1.x_pre);
        let x3 = springs::wrap_spring_extension(c2.profile, c2.idler, &s2, &s20, k3.x_pre);
        let x2 = springs::coupling_spring_extension_2dof(&c1, &c2, k2.x_pre);
        let a1 = moment_arms(c1.profile, &s1)?;
        let a2 = moment_arms(c2.profile, &s2)?;
        let w1 = wrap_torque_per_tension(c1.profile, &s1, &self.friction[0])?;
        let w2 = wrap_torque_per_tension(c2.profile, &s2, &self.friction[1])?;
        Ok([
            TorqueParts { wrap: k1.k * x1 * w1, normal: k2.k * x2 * a1.normal },
            TorqueParts { wrap: k3.k * x3 * w2, normal: k2.k * x2 * a2.normal },
        ])
    }

    /// `(tau1, tau2)` at `(theta1, theta2)`.
    pub fn cam_torques_2dof(&self, theta1: f64, theta2: f64) -> Result<(f64, f64)> {
        let [a, b] = self.torque_parts(theta1, theta2)?;
        Ok((a.total(), b.total()))
    }
}

/// Torques sampled on a `theta1 x theta2` grid (row-major, `theta2` fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorqueGrid {
    pub theta1: Vec<f64>,
    /// Empty for one-cam mechanisms.
    pub theta2: Vec<f64>,
    /// Cam 1 torque (N m).
    pub tau1: Vec<f64>,
    /// Cam 2 torque (N m); empty for one-cam mechanisms.
    pub tau2: Vec<f64>,
}

impl TorqueGrid {
    pub fn is_two_dof(&self) -> bool {
        !self.theta2.is_empty()
    }

    /// CSV `theta1_rad,theta2_rad,tau1_Nmm,tau2_Nmm` (one-cam grids drop the
    /// second-cam columns). Torques are written in N mm.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.write_csv_columns(out, ["tau1_Nmm", "tau2_Nmm"], 1e3)
    }

    /// Same layout with custom value columns and scale.
    pub fn write_csv_columns<W: Write>(&self, out: W, names: [&str; 2], scale: f64) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if self.is_two_dof() {
            w.write_record(["theta1_rad", "theta2_rad", names[0], names[1]])?;
            let n2 = self.theta2.len();
            for (i, t1) in self.theta1.iter().enumerate() {
                for (j, t2) in self.theta2.iter().enumerate() {
                    let k = i * n2 + j;
                    w.write_record(&[
                        t1.to_string(),
                        t2.to_string(),
                        (self.tau1[k] * scale).to_string(),
                        (self.tau2[k] * scale).to_string(),
                    ])?;
                }
            }
        } else {
            w.write_record(["theta1_rad", names[0]])?;
            for (t1, v) in self.theta1.iter().zip(&self.tau1) {
                w.write_record(&[t1.to_string(), (v * scale).to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::linspace;
    use crate::tangency::initial_guess;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn tabulated_cam1() -> CamProfile {
        CamProfile::from_highest_first(vec![-0.0052, 0.0133, 0.0046, 0.0250], 3.0).unwrap()
    }

    #[test]
    fn tension_profiles() {
        for phi in [0.0, 0.3, 1.0] {
            assert_eq!(wire_tension(5.0, 0.0, 1.0, phi).unwrap(), 5.0);
        }
        assert_eq!(wire_tension(5.0, 0.4, 1.0, 1.0).unwrap(), 5.0);
        let ratio = wire_tension(1.0, 0.3273, PI, 0.0).unwrap();
        assert!((ratio - 0.3577).abs() < 1e-4);
        assert!(wire_tension(1.0, 0.3, 1.0, 1.5).is_err());
        assert!(wire_tension(1.0, 0.3, 1.0, -0.1).is_err());
    }

    #[test]
    fn circle_distributed_force() {
        let c = CamProfile::circle(0.04, 2.0 * PI).unwrap();
        let wire = WireState { tension_at_contact: 7.0, alpha: 2.0 };
        let f = distributed_wire_force(&c, 0.9, &wire, 0.0);
        assert!(f.tangential.abs() < 1e-12);
        assert!((f.pressure - 7.0).abs() < 1e-12);
        // pressure pushes outward along the radius
        let radial = PlanePoint::polar(1.0, 0.9);
        assert!((f.force - radial * 7.0).norm() < 1e-12);

        let mu = 0.25;
        let f = distributed_wire_force(&c, 0.9, &wire, mu);
        let eta = wire_tension(7.0, mu, 2.0, 0.9).unwrap();
        assert!((f.tangential.abs() - mu * eta).abs() < 1e-12);

        let slack = WireState { tension_at_contact: 0.0, alpha: 2.0 };
        assert_eq!(distributed_wire_force(&tabulated_cam1(), 0.5, &slack, 0.3).force.norm(), 0.0);
    }

    #[test]
    fn zero_extensions_give_zero_torque() {
        let cam = tabulated_cam1();
        let idler = IdlerSpec::new(0.02, 0.015).unwrap();
        let s = tangency::solve_tangency(&cam, &idler, 0.4, initial_guess(&cam, &idler, 0.4)).unwrap();
        let t = cam_torque_infinite(&cam, &s, (1100.0, 0.0), (7350.0, 0.0)).unwrap();
        assert_eq!(t.total(), 0.0);
        assert_eq!(cam_torque_finite(&cam, &WireState { tension_at_contact: 0.0, alpha: 1.0 }, 0.3), 0.0);
    }

    #[test]
    fn circle_point_force_torques() {
        let r = 0.05;
        let c = CamProfile::circle(r, 2.0 * PI).unwrap();
        let idler = IdlerSpec::new(0.02, 0.015).unwrap();
        let s = tangency::solve_tangency(&c, &idler, 0.7, initial_guess(&c, &idler, 0.7)).unwrap();
        let t = cam_torque_infinite(&c, &s, (1100.0, 0.02), (7350.0, 0.01)).unwrap();
        assert!((t.wrap - r * 1100.0 * 0.02).abs() < 1e-12);
        assert!(t.normal.abs() < 1e-12);
    }

    #[test]
    fn infinite_mu_limit_matches_point_force() {
        let cam = tabulated_cam1();
        let idler = IdlerSpec::new(0.02, 0.015).unwrap();
        for theta in [0.0, 0.6, 1.4] {
            let s = tangency::solve_tangency(&cam, &idler, theta, initial_guess(&cam, &idler, theta)).unwrap();
            let arms = moment_arms(&cam, &s).unwrap();
            let wire = WireState { tension_at_contact: 40.0, alpha: s.alpha };
            let fin = cam_torque_finite(&cam, &wire, 1e3);
            let inf = 40.0 * arms.tangent;
            assert!((fin - inf).abs() <= 1e-3 * inf.abs(), "{fin} vs {inf}");
        }
    }

    #[test]
    fn two_cam_zero_and_circular_cases() {
        let circle = |r| CamProfile::circle(r, 4.0).unwrap();
        let idler = IdlerSpec::new(0.02, 0.015).unwrap();
        let springs = [
            SpringSpec::new(1100.0, 0.0, 0.06).unwrap(),
            SpringSpec::new(7350.0, 0.0, 0.032).unwrap(),
            SpringSpec::new(580.0, 0.0, 0.105).unwrap(),
        ];
        let mut mech = TwoCamMechanism {
            cams: [
                tabulated_cam1(),
                CamProfile::from_highest_first(vec![-0.0009, -0.0016, 0.0068, 0.0417], 3.0).unwrap(),
            ],
            idlers: [idler, idler],
            friction: [FrictionModel::INFINITE; 2],
            springs,
        };
        assert_eq!(mech.cam_torques_2dof(0.0, 0.0).unwrap(), (0.0, 0.0));

        mech.cams = [circle(0.05), circle(0.04)];
        mech.springs[0].x_pre = 0.01;
        mech.springs[1].x_pre = 0.005;
        for (t1, t2) in [(0.3, 0.0), (0.3, 1.2), (1.0, 0.5)] {
            let (tau1, _) = mech.cam_torques_2dof(t1, t2).unwrap();
            let x1 = 0.05 * t1 + 0.01;
            assert!((tau1 - 0.05 * 1100.0 * x1).abs() < 1e-9, "{tau1}");
        }
    }

    #[test]
    fn torque_grid_csv_layout() {
        let g = TorqueGrid {
            theta1: vec![0.0, 0.5],
            theta2: vec![0.0, 1.0],
            tau1: vec![1.0, 2.0, 3.0, 4.0],
            tau2: vec![0.5; 4],
        };
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "theta1_rad,theta2_rad,tau1_Nmm,tau2_Nmm");
        assert_eq!(lines[3], "0.5,0,3000,500");
        assert_eq!(lines.len(), 5);
    }

    fn convex_profile() -> impl Strategy<Value = CamProfile> {
        (0.02f64..0.06, -0.004f64..0.01, -0.003f64..0.006, -0.0015f64..0.0015).prop_filter_map(
            "convex and positive",
            |(b0, b1, b2, b3)| {
                let p = CamProfile::new(vec![b0, b1, b2, b3], 2.5).ok()?;
                linspace(0.0, 2.5, 64).into_iter().all(|phi| geometry::convexity_margin(&p, phi) > 0.0).then_some(p)
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn internal_force_is_tangent_with_tension_magnitude(p in convex_profile(), phi in 0.0f64..2.0, mu in 0.0f64..1.0) {
            let wire = WireState { tension_at_contact: 12.0, alpha: 2.0 };
            let psi = wire_internal_force(&p, phi, &wire, mu);
            let eta = wire_tension(12.0, mu, 2.0, phi).unwrap();
            prop_assert!((psi.norm() - eta).abs() < 1e-10);
            prop_assert!(psi.cross(p.body_frame(phi).dr).abs() < 1e-10);
        }

        #[test]
        fn internal_force_derivative_matches_finite_differences(p in convex_profile(), phi in 0.05f64..1.95, mu in 0.0f64..1.0) {
            let wire = WireState { tension_at_contact: 12.0, alpha: 2.0 };
            let h = 1e-6;
            let fd = (wire_internal_force(&p, phi + h, &wire, mu) - wire_internal_force(&p, phi - h, &wire, mu)) * (0.5 / h);
            let an = wire_internal_force_derivative(&p, phi, &wire, mu);
            prop_assert!((fd - an).norm() <= 1e-6 * an.norm().max(1e-3));
        }

        #[test]
        fn zero_friction_has_no_tangential_load(p in convex_profile(), phi in 0.0f64..2.0) {
            let wire = WireState { tension_at_contact: 3.0, alpha: 2.0 };
            prop_assert!(distributed_wire_force(&p, phi, &wire, 0.0).tangential.abs() < 1e-12);
        }

        #[test]
        fn capstan_identity_on_circles(r in 0.02f64..0.1, mu in 0.0f64..1.0, alpha in 0.1f64..PI, eta in 0.1f64..100.0) {
            let c = CamProfile::circle(r, 2.0 * PI).unwrap();
            let fin = cam_torque_finite(&c, &WireState { tension_at_contact: eta, alpha }, mu);
            prop_assert!((fin - r * eta).abs() <= 1e-6 * r * eta);
        }

        // Moment balance of the wrapped wire: the anchor moment plus the
        // distributed moment equal the moment of the departing tension.
        #[test]
        fn finite_friction_torque_equals_contact_moment(p in convex_profile(), alpha in 0.2f64..2.0, mu in 0.0f64..1.0) {
            let wire = WireState { tension_at_contact: 10.0, alpha };
            let fin = cam_torque_finite(&p, &wire, mu);
            let bf = p.body_frame(alpha);
            let expect = bf.r.cross(bf.dr) / bf.dr.norm() * 10.0;
            prop_assert!((fin - expect).abs() <= 1e-8 * expect.abs());
        }

        #[test]
        fn torque_linear_in_stiffness(scale in 0.1f64..5.0, theta in 0.0f64..FRAC_PI_2) {
            let cam = tabulated_cam1();
            let idler = IdlerSpec::new(0.02, 0.015).unwrap();
            let s = tangency::solve_tangency(&cam, &idler, theta, initial_guess(&cam, &idler, theta)).unwrap();
            let base = cam_torque_infinite(&cam, &s, (1100.0, 0.03), (7350.0, 0.01)).unwrap();
            let scaled = cam_torque_infinite(&cam, &s, (1100.0 * scale, 0.03), (7350.0 * scale, 0.01)).unwrap();
            prop_assert!((scaled.total() - scale * base.total()).abs() <= 1e-12 * base.total().abs().max(1e-9) * scale.max(1.0));
            for mode in [FrictionModel::INFINITE, FrictionModel::finite(0.3273).unwrap()] {
                let w = wrap_torque_per_tension(&cam, &s, &mode).unwrap();
                let a = 1100.0 * 0.03 * w;
                let b = 1100.0 * scale * 0.03 * w;
                prop_assert!((b - scale * a).abs() <= 1e-12 * a.abs() * scale.max(1.0));
            }
        }
    }
}
