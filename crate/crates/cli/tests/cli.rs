use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wrapcam"))
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap_or_else(|| panic!("{name} missing"));
    r.records().map(|rec| rec.unwrap()[idx].parse().unwrap()).collect()
}

const ONE_CAM: &str = r#"
dof = 1
weights = [10, 0, 0]
[theta]
min = "0 deg"
max = "90 deg"
points = 31
[desired]
kind = "polynomial"
coeffs = [0, 0, 0.08]
[[cam]]
idler_radius = "10 mm"
idler_offset = "0 mm"
rho_min = "1 mm"
rho_max = "1 m"
beta_init = [0, 0, 0, "50 mm"]
[[spring]]
k = "0.35 N/mm"
x_max = "40 mm"
[[spring]]
k = "0.35 N/mm"
x_max = "40 mm"
"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn malformed_config_exits_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", &ONE_CAM.replace("rho_max = \"1 m\"", "rho_max = \"1 m"));
    let out = run(&["--out", dir.path().to_str().unwrap(), "design", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line"), "{err}");

    let cfg = write(dir.path(), "unit.cfg", &ONE_CAM.replace("\"0.35 N/mm\"", "\"0.35 N\""));
    let out = run(&["--out", dir.path().to_str().unwrap(), "design", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("spring[0].k"));
}

#[test]
fn empty_radius_box_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.cfg", &ONE_CAM.replace("rho_min = \"1 mm\"", "rho_min = \"2 m\""));
    let out = run(&["--out", dir.path().to_str().unwrap(), "design", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn design_then_evaluate_reproduces_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let d1 = dir.path().join("design");
    let d2 = dir.path().join("eval");
    let cfg = example("one_dof_quadratic.cfg");
    ok(&["--out", d1.to_str().unwrap(), "design", cfg.to_str().unwrap()]);
    for f in ["report.json", "cam1_profile.csv", "torque.csv", "desired.csv", "extensions.csv", "sensitivity.csv"] {
        assert!(d1.join(f).exists(), "{f}");
    }
    for f in ["cam1_outline.svg", "torque_cam1.svg", "extensions.svg"] {
        assert!(std::fs::read_to_string(d1.join(f)).unwrap().contains("<polyline"), "{f}");
    }
    let report = d1.join("report.json");
    ok(&["--out", d2.to_str().unwrap(), "evaluate", report.to_str().unwrap(), cfg.to_str().unwrap()]);
    let a = json(&report);
    let b = json(&d2.join("evaluation.json"));
    assert_eq!(a["rmse_Nmm"], b["rmse_Nmm"]);
    assert_eq!(a["max_error_Nmm"], b["max_error_Nmm"]);
    assert_eq!(a["objective"], b["objective"]);
    assert_eq!(a["feasible"], Value::Bool(true));
    assert!(a["rmse_Nmm"][0].as_f64().unwrap() < 60.0);
    assert_eq!(std::fs::read(d1.join("torque.csv")).unwrap(), std::fs::read(d2.join("torque.csv")).unwrap());
}

#[test]
fn stiffness_scaling_deviation_is_linear() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = example("two_dof_no_sens.cfg");
    let design = write(
        dir.path(),
        "d.json",
        r#"{"beta": [[0.025, 0.0046, 0.0133, -0.0052], [0.0417, 0.0068, -0.0016, -0.0009]], "x0_mm": [0, 9.33, 0]}"#,
    );
    let dev = |s: &str| {
        let out = dir.path().join(s);
        ok(&[
            "--out",
            out.to_str().unwrap(),
            "evaluate",
            design.to_str().unwrap(),
            cfg.to_str().unwrap(),
            "--k-scale",
            s,
        ]);
        json(&out.join("evaluation.json"))["deviation_rmse_Nmm"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect::<Vec<_>>()
    };
    let a = dev("1.1");
    let b = dev("1.2");
    assert_eq!(a.len(), 2);
    for (x, y) in a.iter().zip(&b) {
        assert!(*x > 0.0);
        assert!((y / x - 2.0).abs() < 1e-9, "{x} {y}");
    }
}

#[test]
fn friction_override_leaves_circle_torque_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.cfg", ONE_CAM);
    let design = write(dir.path(), "d.json", r#"{"beta": [[0.05, 0, 0, 0]], "x0_m": [0.005, 0.002]}"#);
    let tau = |args: &[&str], sub: &str| {
        let out = dir.path().join(sub);
        let mut a = vec!["--out", out.to_str().unwrap()];
        a.extend_from_slice(args);
        a.extend_from_slice(&["evaluate", design.to_str().unwrap(), cfg.to_str().unwrap()]);
        ok(&a);
        column(&out.join("torque.csv"), "tau1_Nmm")
    };
    let inf = tau(&["--friction", "infinite"], "inf");
    let fin = tau(&["--friction", "finite", "--mu", "0.3273"], "fin");
    assert!(inf.iter().skip(1).all(|v| v.abs() > 1e-6));
    for (a, b) in inf.iter().zip(&fin) {
        assert!((a - b).abs() <= 1e-6 * a.abs().max(1e-12), "{a} {b}");
    }
}

#[test]
fn grid_override_and_si_units() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.cfg", ONE_CAM);
    let design = write(dir.path(), "d.json", r#"{"beta": [[0.05, 0, 0, 0]], "x0_m": [0.005, 0.002]}"#);
    ok(&[
        "--out",
        dir.path().to_str().unwrap(),
        "--grid",
        "7",
        "--units",
        "si",
        "evaluate",
        design.to_str().unwrap(),
        cfg.to_str().unwrap(),
    ]);
    let t = column(&dir.path().join("torque.csv"), "tau1_Nm");
    assert_eq!(t.len(), 7);
    assert_eq!(column(&dir.path().join("extensions.csv"), "x2_m").len(), 7);
    let bad = run(&["--grid", "1", "evaluate", "a", "b"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn spring_and_mu_commands() {
    let s = ok(&[
        "spring",
        "--wire-diameter",
        "1 mm",
        "--outer-diameter",
        "10 mm",
        "--coils",
        "20",
        "--yield-stress",
        "1 GPa",
        "--safety-factor",
        "1.5",
    ]);
    let v: Value = serde_json::from_str(&s).unwrap();
    let k = v["k_N_per_mm"].as_f64().unwrap();
    let x = v["x_max_mm"].as_f64().unwrap();
    let f = v["f_max_N"].as_f64().unwrap();
    assert!((k * x - f).abs() <= 1e-12 * f);

    let out = run(&[
        "spring",
        "--wire-diameter",
        "2 mm",
        "--outer-diameter",
        "3 mm",
        "--coils",
        "5",
        "--yield-stress",
        "1 GPa",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let ratio = (0.3273 * std::f64::consts::PI).exp();
    let s = ok(&["mu", "--f", &format!("{ratio} N"), "--f0", "1 N", "--wrap-deg", "180"]);
    let v: Value = serde_json::from_str(&s).unwrap();
    assert!((v["mu"].as_f64().unwrap() - 0.3273).abs() < 1e-12);
}

#[test]
fn tangency_sweep_writes_one_csv_per_cam() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "--out",
        dir.path().to_str().unwrap(),
        "--grid",
        "5",
        "tangency",
        example("two_dof_no_sens.cfg").to_str().unwrap(),
    ]);
    for i in 1..=2 {
        let a = column(&dir.path().join(format!("tangency_cam{i}.csv")), "alpha_rad");
        assert_eq!(a.len(), 5);
        assert!(a.windows(2).all(|w| w[1] > w[0]));
    }
}
