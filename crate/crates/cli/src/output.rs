//! Files written by `design` and `evaluate`.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use wrapcam::geometry::{cam_point, write_profile_csv};
use wrapcam::optimizer::{DesignReport, Evaluation, MechanismConfig};
use wrapcam::torque::TorqueGrid;

use crate::plot::{Chart, Series};
use crate::Units;

impl Units {
    fn torque(self) -> (f64, &'static str) {
        match self {
            Units::Paper => (1e3, "Nmm"),
            Units::Si => (1.0, "Nm"),
        }
    }

    fn length(self) -> (f64, &'static str) {
        match self {
            Units::Paper => (1e3, "mm"),
            Units::Si => (1.0, "m"),
        }
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut f = create(dir, name)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    std::io::Write::write_all(&mut f, b"\n")?;
    Ok(())
}

/// CSVs and plots for one evaluated design.
pub fn write_artifacts(dir: &Path, report: &DesignReport, config: &MechanismConfig, units: Units) -> Result<()> {
    let e = report.evaluation.as_ref().context("report has no evaluation attached")?;
    let (ts, tu) = units.torque();
    let n = e.profiles.len();
    let torque_cols = [format!("tau1_{tu}"), format!("tau2_{tu}")];
    let desired_cols = [format!("tau_d1_{tu}"), format!("tau_d2_{tu}")];
    e.torque.write_csv_columns(create(dir, "torque.csv")?, [&torque_cols[0], &torque_cols[1]], ts)?;
    e.desired.write_csv_columns(create(dir, "desired.csv")?, [&desired_cols[0], &desired_cols[1]], ts)?;
    write_extensions(dir, e, units)?;
    e.sensitivity.write_csv(create(dir, "sensitivity.csv")?)?;
    for i in 0..n {
        write_profile_csv(create(dir, &format!("cam{}_profile.csv", i + 1))?, &e.profiles[i], 720)?;
        std::fs::write(dir.join(format!("cam{}_outline.svg", i + 1)), outline_chart(e, config, i, units).render())?;
        std::fs::write(dir.join(format!("torque_cam{}.svg", i + 1)), torque_chart(e, i, units).render())?;
    }
    std::fs::write(dir.join("extensions.svg"), extension_chart(e, config, units).render())?;
    Ok(())
}

fn write_extensions(dir: &Path, e: &Evaluation, units: Units) -> Result<()> {
    let (ls, lu) = units.length();
    let g = &e.extensions;
    let mut w = csv::Writer::from_writer(create(dir, "extensions.csv")?);
    let mut header = vec!["theta1_rad".to_string()];
    if !g.theta2.is_empty() {
        header.push("theta2_rad".into());
    }
    header.extend((1..=g.x.len()).map(|i| format!("x{i}_{lu}")));
    w.write_record(&header)?;
    let n2 = g.theta2.len().max(1);
    for (i, t1) in g.theta1.iter().enumerate() {
        for j in 0..n2 {
            let k = i * n2 + j;
            let mut row = vec![t1.to_string()];
            if let Some(t2) = g.theta2.get(j) {
                row.push(t2.to_string());
            }
            row.extend(g.x.iter().map(|x| (x[k] * ls).to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// First, middle and last index of an axis with `n` points.
fn slices(n: usize) -> Vec<usize> {
    if n <= 1 {
        return vec![0];
    }
    let mut v = vec![0, n / 2, n - 1];
    v.dedup();
    v
}

fn outline_chart(e: &Evaluation, config: &MechanismConfig, cam: usize, units: Units) -> Chart {
    let (ls, lu) = units.length();
    let profile = &e.profiles[cam];
    let mut c = Chart::new(&format!("cam {} at theta = 0", cam + 1), &format!("x ({lu})"), &format!("y ({lu})"));
    c.equal_aspect = true;
    let steps = 720;
    let outline = (0..=steps)
        .map(|k| {
            let p = cam_point(profile, std::f64::consts::TAU * k as f64 / steps as f64, 0.0);
            (p.x * ls, p.y * ls)
        })
        .collect();
    c.series.push(Series::new("profile", outline, 0));
    if let Some(sol) = e.cams[cam].contacts.first() {
        let idler = &config.cams[cam].idler;
        let center = sol.idler_center(profile, idler);
        let circle = (0..=90)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / 90.0;
                ((center.x + idler.radius * a.cos()) * ls, (center.y + idler.radius * a.sin()) * ls)
            })
            .collect();
        c.series.push(Series::new("idler", circle, 1).dashed());
        let p = sol.contact_point(profile);
        c.series.push(Series::new("contact", vec![(0.0, 0.0), (p.x * ls, p.y * ls)], 2).dashed());
    }
    c
}

fn torque_chart(e: &Evaluation, cam: usize, units: Units) -> Chart {
    let (ts, tu) = units.torque();
    let mut c =
        Chart::new(&format!("cam {} torque", cam + 1), &format!("theta{} (deg)", cam + 1), &format!("torque ({tu})"));
    let t: &TorqueGrid = &e.torque;
    let d: &TorqueGrid = &e.desired;
    let (n1, n2) = (t.theta1.len(), t.theta2.len().max(1));
    let (own, other, tau, tau_d) =
        if cam == 0 { (&t.theta1, &t.theta2, &t.tau1, &d.tau1) } else { (&t.theta2, &t.theta1, &t.tau2, &d.tau2) };
    let fixed_axis = if cam == 0 { slices(t.theta2.len()) } else { slices(n1) };
    for (s, &fixed) in fixed_axis.iter().enumerate() {
        let idx = |a: usize| if cam == 0 { a * n2 + fixed } else { fixed * n2 + a };
        let label = other.get(fixed).map(|v| format!(" @ {:.0} deg", v.to_degrees())).unwrap_or_default();
        let pts = |v: &[f64]| (0..own.len()).map(|a| (own[a].to_degrees(), v[idx(a)] * ts)).collect::<Vec<_>>();
        c.series.push(Series::new(format!("tau{label}"), pts(tau), s));
        c.series.push(Series::new(format!("tau_d{label}"), pts(tau_d), s).dashed());
    }
    c
}

fn extension_chart(e: &Evaluation, config: &MechanismConfig, units: Units) -> Chart {
    let (ls, lu) = units.length();
    let g = &e.extensions;
    let two = !g.theta2.is_empty();
    let x_label = if two { "theta1 or theta2 (deg)" } else { "theta1 (deg)" };
    let mut c = Chart::new("spring extensions", x_label, &format!("extension ({lu})"));
    let n2 = g.theta2.len().max(1);
    let deg = |v: &[f64]| v.iter().map(|t| t.to_degrees()).collect::<Vec<_>>();
    let t1 = deg(&g.theta1);
    let t2 = deg(&g.theta2);
    for (s, x) in g.x.iter().enumerate() {
        // the third spring follows cam 2; the others are drawn along theta1
        let (axis, at): (&[f64], Box<dyn Fn(usize) -> usize>) =
            if two && s == 2 { (&t2, Box::new(|j| j)) } else { (&t1, Box::new(move |i| i * n2)) };
        let pts: Vec<(f64, f64)> = axis.iter().enumerate().map(|(a, &th)| (th, x[at(a)] * ls)).collect();
        let lim = config.springs[s].x_max * ls;
        let (lo, hi) = (axis.first().copied().unwrap_or(0.0), axis.last().copied().unwrap_or(1.0));
        c.series.push(Series::new(format!("x{}", s + 1), pts, s));
        c.series.push(Series::new(format!("x{} max", s + 1), vec![(lo, lim), (hi, lim)], s).dashed());
    }
    c
}
