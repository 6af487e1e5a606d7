//! Acceptance criteria. Runs without the libtest harness so every
//! PASS/FAIL line reaches the terminal under a plain `cargo test`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wrapcam::balancing::{friction_mu_from_slip, rr_gravity_torques, DesiredTorque, RRArmParams, TorqueTable};
use wrapcam::config::RunConfig;
use wrapcam::geometry::{convexity_margin, CamProfile};
use wrapcam::optimizer::{
    evaluate_design, optimize_design, stiffness_deviation, CamSetup, DesignReport, DesignVector, Dof, MechanismConfig,
    SolverOptions, ThetaDomain,
};
use wrapcam::springs::{design_spring, SpringSpec, SpringWireGeometry};
use wrapcam::tangency::{initial_guess, solve_tangency, IdlerSpec};
use wrapcam::torque::{
    cam_torque_finite, wire_internal_force, wire_internal_force_derivative, wire_tension, wrap_torque_per_tension,
    FrictionModel, WireState,
};

fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!("criterion {id:>2} {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
}

fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../cli/examples").join(name)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn criterion_01_capstan_identity_on_circles() -> bool {
    let start = Instant::now();
    let idler = IdlerSpec::new(0.020, 0.015).unwrap();
    let eta = 37.5;
    let mut worst: f64 = 0.0;
    for r in [0.030, 0.050, 0.080] {
        let psi = (idler.offset / (r + idler.radius)).asin();
        for mu in [0.0, 0.1, 0.3273, 1.0] {
            for alpha in [PI / 6.0, FRAC_PI_2, PI] {
                let cam = CamProfile::circle(r, alpha + TAU).unwrap();
                let theta = alpha - psi;
                let sol = solve_tangency(&cam, &idler, theta, initial_guess(&cam, &idler, theta)).unwrap();
                let direct = cam_torque_finite(&cam, &WireState { tension_at_contact: eta, alpha }, mu);
                let finite = eta * wrap_torque_per_tension(&cam, &sol, &FrictionModel::finite(mu).unwrap()).unwrap();
                let infinite = eta * wrap_torque_per_tension(&cam, &sol, &FrictionModel::INFINITE).unwrap();
                worst = worst.max(rel(direct, r * eta)).max(rel(finite, r * eta)).max(rel(finite, infinite));
            }
        }
    }
    let t = start.elapsed();
    let pass = worst <= 1e-6 && t < Duration::from_secs(1);
    report(1, "capstan identity", pass, format!("worst relative error {worst:.2e}, {t:.2?}"));
    pass
}

fn criterion_02_stiffness_linearity() -> bool {
    let start = Instant::now();
    let rc = RunConfig::load(&bundled("two_dof_no_sens.cfg")).unwrap();
    let design = DesignVector {
        betas: vec![vec![0.0250, 0.0046, 0.0133, -0.0052], vec![0.0417, 0.0068, -0.0016, -0.0009]],
        x0: vec![0.0, 0.00933, 0.0],
    };
    let d: Vec<Vec<f64>> =
        [1.05, 1.10, 1.20].iter().map(|&s| stiffness_deviation(&design, &rc.mechanism, s).unwrap()).collect();
    let mut worst: f64 = 0.0;
    for ((a, b), c) in d[0].iter().zip(&d[1]).zip(&d[2]) {
        worst = worst.max(rel(*b, 2.0 * a)).max(rel(*c, 4.0 * a));
    }
    let t = start.elapsed();
    let pass = worst <= 1e-9 && d[0].iter().all(|v| *v > 0.0) && t < Duration::from_secs(10);
    let nmm = |v: &[f64]| format!("{:.2}/{:.2}", v[0] * 1e3, v[1] * 1e3);
    report(
        2,
        "stiffness linearity",
        pass,
        format!(
            "deviations Nmm +5% {} +10% {} +20% {}, ratio error {worst:.1e}, {t:.2?}",
            nmm(&d[0]),
            nmm(&d[1]),
            nmm(&d[2])
        ),
    );
    pass
}

fn criterion_03_two_circle_tangency() -> bool {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let big = rng.gen_range(0.01..0.2);
        let small = rng.gen_range(0.005..0.05);
        let a0 = (big + small) * rng.gen_range(-0.95..0.95);
        let theta = rng.gen_range(FRAC_PI_2..TAU);
        let cam = CamProfile::circle(big, 3.0 * TAU).unwrap();
        let idler = IdlerSpec::new(small, a0).unwrap();
        let sol = solve_tangency(&cam, &idler, theta, initial_guess(&cam, &idler, theta)).unwrap();
        let expected = (a0 / (big + small)).asin();
        let d = sol.alpha - theta - expected;
        worst = worst.max(d.sin().atan2(d.cos()).abs());
    }
    let t = start.elapsed();
    let pass = worst <= 1e-6 && t < Duration::from_secs(1);
    report(3, "two-circle tangency", pass, format!("worst angle error {worst:.2e} rad, {t:.2?}"));
    pass
}

/// Positive, convex cubic on `[0, phi_max]`.
fn random_convex_profile(rng: &mut ChaCha8Rng, phi_max: f64) -> CamProfile {
    loop {
        let c = vec![
            rng.gen_range(0.02..0.06),
            rng.gen_range(-0.005..0.01),
            rng.gen_range(-0.003..0.006),
            rng.gen_range(-0.001..0.001),
        ];
        let Ok(p) = CamProfile::new(c, phi_max) else { continue };
        if (0..=400).all(|k| convexity_margin(&p, phi_max * k as f64 / 400.0) > 1e-6) {
            return p;
        }
    }
}

fn criterion_04_internal_force_checks() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut norm_err, mut fd_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let alpha = rng.gen_range(0.5..3.0);
        let p = random_convex_profile(&mut rng, alpha + 1.0);
        let mu = rng.gen_range(0.0..1.0);
        let wire = WireState { tension_at_contact: rng.gen_range(1.0..100.0), alpha };
        for k in 1..10 {
            let phi = alpha * k as f64 / 10.0;
            let psi = wire_internal_force(&p, phi, &wire, mu);
            let eta = wire_tension(wire.tension_at_contact, mu, alpha, phi).unwrap();
            norm_err = norm_err.max((psi.norm() - eta).abs());
            let h = 1e-5;
            let fd =
                (wire_internal_force(&p, phi + h, &wire, mu) - wire_internal_force(&p, phi - h, &wire, mu)) * (0.5 / h);
            let an = wire_internal_force_derivative(&p, phi, &wire, mu);
            fd_err = fd_err.max((fd - an).norm() / an.norm());
        }
    }
    let pass = norm_err <= 1e-10 && fd_err <= 1e-6;
    report(
        4,
        "internal force tangency and derivative",
        pass,
        format!("norm error {norm_err:.1e}, fd relative error {fd_err:.1e}"),
    );
    pass
}

fn inverse_crime_config() -> MechanismConfig {
    let idler = IdlerSpec::new(0.020, 0.015).unwrap();
    MechanismConfig {
        dof: Dof::One,
        cams: vec![CamSetup { idler, rho_min: 0.02, rho_max: 0.5, friction: FrictionModel::INFINITE }],
        springs: vec![SpringSpec::new(1100.0, 0.0, 0.08).unwrap(), SpringSpec::new(7350.0, 0.0, 0.04).unwrap()],
        weights: vec![10.0, 0.0, 0.0],
        theta: vec![ThetaDomain { min: 0.0, max: FRAC_PI_2, points: 61 }],
        order: 3,
        solver: SolverOptions::default(),
    }
}

fn criterion_05_inverse_crime() -> bool {
    let start = Instant::now();
    let config = inverse_crime_config();
    let truth = DesignVector { betas: vec![vec![0.0250, 0.0046, 0.0133, -0.0052]], x0: vec![0.002, 0.005] };
    let zero = DesiredTorque::Custom(std::sync::Arc::new(|_, _| (0.0, 0.0)));
    let forward = evaluate_design(&truth, &config, &zero).unwrap();
    let truth_report = DesignReport::from_design(&truth, &config, &zero).unwrap();
    let mut csv = Vec::new();
    forward.torque.write_csv_columns(&mut csv, ["tau_d1_Nm", "tau_d2_Nm"], 1.0).unwrap();
    let target = DesiredTorque::Table(TorqueTable::from_csv_reader(csv.as_slice()).unwrap());

    let perturbed = DesignVector {
        betas: vec![truth.betas[0].iter().map(|b| b * 1.05).collect()],
        x0: truth.x0.iter().map(|x| x + 0.002).collect(),
    };
    let start_rmse = DesignReport::from_design(&perturbed, &config, &target).unwrap().rmse_Nmm[0];
    let r = optimize_design(&config, &target, &perturbed).unwrap();
    let t = start.elapsed();
    let pass = truth_report.margins.feasible() && r.rmse_Nmm[0] < 1.0 && r.feasible && t < Duration::from_secs(120);
    report(
        5,
        "inverse crime",
        pass,
        format!("rmse {:.3} Nmm from {start_rmse:.1} Nmm, feasible {}, {t:.2?}", r.rmse_Nmm[0], r.feasible),
    );
    pass
}

/// Independent convexity and extension checks on a returned design.
fn dense_checks(r: &DesignReport, config: &MechanismConfig) -> (f64, bool) {
    let e = r.evaluation.as_ref().unwrap();
    let mut min_margin = f64::INFINITY;
    for (profile, cam) in e.profiles.iter().zip(&e.cams) {
        let top = cam.alpha_max();
        for k in 0..=2000 {
            min_margin = min_margin.min(convexity_margin(profile, top * k as f64 / 2000.0));
        }
    }
    let within =
        e.extensions.x.iter().zip(&config.springs).all(|(x, s)| x.iter().all(|&v| v >= -1e-12 && v <= s.x_max + 1e-12));
    (min_margin, within)
}

fn criterion_06_quadratic_target() -> bool {
    let start = Instant::now();
    let rc = RunConfig::load(&bundled("one_dof_quadratic.cfg")).unwrap();
    let r = optimize_design(&rc.mechanism, &rc.desired, &rc.initial).unwrap();
    let (margin, within) = dense_checks(&r, &rc.mechanism);
    let t = start.elapsed();
    let pass = r.rmse_Nmm[0] <= 60.0 && margin > 0.0 && within && r.feasible && t < Duration::from_secs(300);
    report(
        6,
        "quadratic target",
        pass,
        format!(
            "rmse {:.3} Nmm, min convexity margin {margin:.2e} m^2, extensions within limits {within}, {t:.2?}",
            r.rmse_Nmm[0]
        ),
    );
    pass
}

struct Study {
    config: MechanismConfig,
    report: DesignReport,
    runtime: Duration,
}

fn study(name: &str) -> Study {
    let start = Instant::now();
    let rc = RunConfig::load(&bundled(name)).unwrap();
    let report = optimize_design(&rc.mechanism, &rc.desired, &rc.initial).unwrap();
    Study { config: rc.mechanism, report, runtime: start.elapsed() }
}

fn no_sens() -> &'static Study {
    static S: OnceLock<Study> = OnceLock::new();
    S.get_or_init(|| study("two_dof_no_sens.cfg"))
}

fn sens() -> &'static Study {
    static S: OnceLock<Study> = OnceLock::new();
    S.get_or_init(|| study("two_dof_sens.cfg"))
}

fn criterion_07_two_cam_torque_tracking() -> bool {
    let s = no_sens();
    let r = &s.report;
    let (margin, within) = dense_checks(r, &s.config);
    let pass = r.rmse_Nmm[0] <= 500.0
        && r.rmse_Nmm[1] <= 300.0
        && r.feasible
        && margin > 0.0
        && within
        && s.runtime < Duration::from_secs(1800);
    report(
        7,
        "two-cam torque tracking",
        pass,
        format!(
            "rmse {:.2}/{:.2} Nmm, max {:.2}/{:.2} Nmm, feasible {}, {:.1?}",
            r.rmse_Nmm[0], r.rmse_Nmm[1], r.max_error_Nmm[0], r.max_error_Nmm[1], r.feasible, s.runtime
        ),
    );
    pass
}

fn criterion_08_sensitivity_benefit() -> bool {
    let plain = no_sens();
    let robust = sens();
    let dev = |s: &Study| stiffness_deviation(&s.report.design(), &s.config, 1.2).unwrap();
    let a = dev(plain);
    let b = dev(robust);
    let pass = robust.report.feasible && b[0] < a[0] && b[1] < a[1];
    report(
        8,
        "sensitivity benefit",
        pass,
        format!(
            "+20% deviation Nmm {:.2}/{:.2} without vs {:.2}/{:.2} with sensitivity terms, rmse {:.2}/{:.2} Nmm, {:.1?}",
            a[0] * 1e3,
            a[1] * 1e3,
            b[0] * 1e3,
            b[1] * 1e3,
            robust.report.rmse_Nmm[0],
            robust.report.rmse_Nmm[1],
            robust.runtime
        ),
    );
    pass
}

fn criterion_09_spring_design_consistency() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let d = rng.gen_range(0.2e-3..3e-3);
        let g = SpringWireGeometry {
            wire_diameter: d,
            outer_diameter: d * rng.gen_range(1.8..20.0),
            coils: rng.gen_range(1.0..200.0),
            shear_modulus: rng.gen_range(30e9..90e9),
            yield_stress: rng.gen_range(0.3e9..2.5e9),
            safety_factor: rng.gen_range(1.0..3.0),
        };
        let s = design_spring(&g).unwrap();
        worst = worst.max(rel(s.spec.k * s.spec.x_max, s.f_max));
    }
    let mut rejected = true;
    for c in [0.1, 0.5, 0.75] {
        let g = SpringWireGeometry {
            wire_diameter: 1e-3,
            outer_diameter: 1e-3 * (1.0 + c),
            coils: 10.0,
            shear_modulus: 79.3e9,
            yield_stress: 1e9,
            safety_factor: 1.0,
        };
        rejected &= design_spring(&g).is_err();
    }
    let pass = worst <= 1e-12 && rejected;
    report(
        9,
        "spring design consistency",
        pass,
        format!("worst relative error {worst:.1e}, low index rejected {rejected}"),
    );
    pass
}

fn criterion_10_friction_round_trip() -> bool {
    let ratio = (0.3273 * PI).exp();
    let mu = friction_mu_from_slip(ratio, 1.0, PI).unwrap();
    let pass = (mu - 0.3273).abs() <= 2.0 * f64::EPSILON * 0.3273;
    report(10, "friction round trip", pass, format!("mu {mu:.17}"));
    pass
}

fn criterion_11_gravity_torque_table() -> bool {
    // m1 = m2 = 0.5 kg, l1 = 0.5 m, lc1 = lc2 = 0.25 m, g = 9.81, evaluated by hand
    let table = [
        (0.0, 0.0, 0.0, 0.0),
        (0.0, 45.0, 0.8670896904300038, 0.8670896904300038),
        (0.0, 90.0, 1.22625, 1.22625),
        (45.0, 0.0, 3.4683587617200153, 0.8670896904300038),
        (45.0, 45.0, 3.827519071290012, 1.22625),
        (45.0, 90.0, 3.4683587617200153, 0.8670896904300041),
        (90.0, 0.0, 4.905, 1.22625),
        (90.0, 45.0, 4.545839690430004, 0.8670896904300041),
        (90.0, 90.0, 3.67875, 0.0),
    ];
    let p = RRArmParams::default();
    let mut worst: f64 = 0.0;
    for (a, b, t1, t2) in table {
        let (x, y) = rr_gravity_torques(&p, f64::to_radians(a), f64::to_radians(b));
        worst = worst.max((x - t1).abs()).max((y - t2).abs());
    }
    let pass = worst <= 1e-9;
    report(11, "gravity torque table", pass, format!("worst error {worst:.1e} N m"));
    pass
}

fn main() {
    let checks: [fn() -> bool; 11] = [
        criterion_01_capstan_identity_on_circles,
        criterion_02_stiffness_linearity,
        criterion_03_two_circle_tangency,
        criterion_04_internal_force_checks,
        criterion_05_inverse_crime,
        criterion_06_quadratic_target,
        criterion_07_two_cam_torque_tracking,
        criterion_08_sensitivity_benefit,
        criterion_09_spring_design_consistency,
        criterion_10_friction_round_trip,
        criterion_11_gravity_torque_table,
    ];
    let failed = checks.iter().filter(|c| !c()).count();
    println!("acceptance: {} of {} criteria passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
