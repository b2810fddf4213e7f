//! Plot-ready CSV and JSON writers for experiment artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::flow::trajectory::{Event, Trajectory};
use crate::surface::ProfileSurface;

/// Sampled profile table: l, r, r', r'', K.
pub fn surface_table_csv(surface: &ProfileSurface, n: usize) -> String {
    let mut out = String::from("l,r,r_prime,r_second,curvature\n");
    let total = surface.total_length();
    for i in 0..=n {
        let l = total * i as f64 / n as f64;
        let _ = writeln!(
            out,
            "{l:.12},{:.12},{:.12},{:.12},{:.12}",
            surface.radius(l),
            surface.radius_d1(l),
            surface.radius_d2(l),
            surface.gaussian_curvature(l)
        );
    }
    out
}

/// Trajectory table: s, theta, l, phi, clairaut, K.
pub fn trajectory_csv(surface: &ProfileSurface, traj: &Trajectory) -> String {
    let mut out = String::from("s,theta,l,phi,clairaut,curvature\n");
    for p in &traj.samples {
        let state = p.state();
        let clairaut = surface.clairaut_raw(p.l, p.heading);
        let k = surface.curvature_at(p.theta, p.l);
        let _ = writeln!(
            out,
            "{:.12},{:.12},{:.12},{:.12},{:.12},{:.12}",
            p.s, p.theta, p.l, state.phi, clairaut, k
        );
    }
    out
}

/// Event list as JSON records {type, time, section, theta, phi}.
pub fn events_json(events: &[Event]) -> serde_json::Value {
    let records: Vec<serde_json::Value> = events
        .iter()
        .map(|e| {
            let state = crate::flow::GeodesicState::from_heading(e.theta, e.l, e.heading);
            serde_json::json!({
                "type": format!("{:?}", e.kind),
                "time": e.s,
                "section": e.l,
                "theta": e.theta,
                "phi": state.phi,
            })
        })
        .collect();
    serde_json::Value::Array(records)
}

/// Two-column CSV for growth series and sweeps.
pub fn two_column_csv(header: (&str, &str), rows: &[(f64, f64)]) -> String {
    let mut out = format!("{},{}\n", header.0, header.1);
    for (a, b) in rows {
        let _ = writeln!(out, "{a:.12},{b:.12}");
    }
    out
}

pub fn three_column_csv(header: (&str, &str, &str), rows: &[(f64, f64, f64)]) -> String {
    let mut out = format!("{},{},{}\n", header.0, header.1, header.2);
    for (a, b, c) in rows {
        let _ = writeln!(out, "{a:.12},{b:.12},{c:.12}");
    }
    out
}

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, content)?;
    Ok(())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_text(path, &text)
}
