//! Experiment configuration: structured text with sections [profile],
//! [bump], [family] and [run]. Parsing reports every problem at once with
//! its key path; unknown keys are errors.

use serde::Serialize;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::surface::{DumbbellParams, PerturbationBump, ProfileSurface};

/// Which base surface the experiments run on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SurfaceKind {
    Dumbbell,
    Sphere { radius: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct BumpConfig {
    pub amplitude: f64,
    pub half_width_t: f64,
    pub half_width_x: f64,
    pub theta0: f64,
    pub anchor_offset: Option<f64>,
}

impl Default for BumpConfig {
    fn default() -> Self {
        BumpConfig {
            amplitude: 0.05,
            half_width_t: 0.35,
            half_width_x: 0.09,
            theta0: 0.0,
            anchor_offset: None,
        }
    }
}

/// Numeric parameters shared by the experiments; each experiment reads the
/// subset it needs.
#[derive(Debug, Clone, Serialize)]
pub struct RunParams {
    pub t_max: f64,
    pub n_dirs: usize,
    pub seed: u64,
    pub rtol: f64,
    pub threads: usize,
    pub n_points: usize,
    pub n_iterates: usize,
    pub grid_theta: usize,
    pub grid_phi: usize,
    pub refine_tol: f64,
    pub tol_q: f64,
    pub epsilons: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub t_values: Vec<f64>,
    pub p_theta: f64,
    pub p_l: f64,
    pub heading: f64,
    pub q_theta: f64,
    pub q_l: f64,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            t_max: 20.0,
            n_dirs: 512,
            seed: 42,
            rtol: 1e-11,
            threads: 0,
            n_points: 200,
            n_iterates: 10_000,
            grid_theta: 4,
            grid_phi: 12,
            refine_tol: 1e-3,
            tol_q: 1e-6,
            epsilons: vec![0.5, 0.25],
            amplitudes: vec![0.05, 0.025, 0.0125],
            t_values: Vec::new(),
            p_theta: 0.0,
            p_l: 1.0,
            heading: 0.5,
            q_theta: 2.0,
            q_l: 2.5,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub surface: SurfaceKind,
    pub profile: DumbbellParams,
    pub bump: Option<BumpConfig>,
    /// Cylinder lengths for family sweeps; the first is the reference d.
    pub d_sweep: Vec<f64>,
    pub run: RunParams,
    /// Keys that were filled from defaults (documented in summaries).
    pub defaulted: Vec<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            surface: SurfaceKind::Dumbbell,
            profile: DumbbellParams::default(),
            bump: Some(BumpConfig::default()),
            d_sweep: vec![10.0],
            run: RunParams::default(),
            defaulted: Vec::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn reference_d(&self) -> f64 {
        self.d_sweep.first().copied().unwrap_or(10.0)
    }

    /// Build the configured surface (with the bump attached when present).
    pub fn build_surface(&self, d: f64) -> Result<ProfileSurface> {
        match &self.surface {
            SurfaceKind::Sphere { radius } => Ok(ProfileSurface::sphere(*radius)),
            SurfaceKind::Dumbbell => {
                let surface = self.profile.clone().with_cylinder_length(d).build()?;
                match &self.bump {
                    None => Ok(surface),
                    Some(b) if b.amplitude == 0.0 => Ok(surface),
                    Some(b) => {
                        let bump = match b.anchor_offset {
                            Some(off) => PerturbationBump::with_anchor_offset(
                                &surface,
                                b.amplitude,
                                b.half_width_t,
                                b.half_width_x,
                                b.theta0,
                                off,
                            )?,
                            None => PerturbationBump::new(
                                &surface,
                                b.amplitude,
                                b.half_width_t,
                                b.half_width_x,
                                b.theta0,
                            )?,
                        };
                        surface.with_bump(bump)
                    }
                }
            }
        }
    }

    /// Stable 64-bit hash of the canonical serialized form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).unwrap_or_default();
        format!("{:016x}", fnv1a64(text.as_bytes()))
    }
}

pub fn fnv1a64(data: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in data {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Parse and validate a configuration text; returns either a config or the
/// complete list of problems (with key paths, or line/column for syntax
/// errors).
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config {
        issues: vec![format!("syntax: {e}")],
    })?;

    let mut issues: Vec<String> = Vec::new();
    let mut defaulted: Vec<String> = Vec::new();
    let mut cfg = ExperimentConfig::default();

    for (section, val) in &table {
        match section.as_str() {
            "profile" => parse_profile(val, &mut cfg, &mut issues, &mut defaulted),
            "bump" => parse_bump(val, &mut cfg, &mut issues, &mut defaulted),
            "family" => parse_family(val, &mut cfg, &mut issues, &mut defaulted),
            "run" => parse_run(val, &mut cfg, &mut issues, &mut defaulted),
            other => issues.push(format!("[{other}]: unknown section")),
        }
    }
    if !table.contains_key("profile") {
        defaulted.push("profile (all keys)".into());
    }
    if !table.contains_key("bump") {
        defaulted.push("bump (reference bump)".into());
    }

    validate_semantics(&cfg, &mut issues);

    if issues.is_empty() {
        cfg.defaulted = defaulted;
        Ok(cfg)
    } else {
        Err(Error::Config { issues })
    }
}

fn get_f64(map: &BTreeMap<String, toml::Value>, key: &str, path: &str, issues: &mut Vec<String>) -> Option<f64> {
    match map.get(key) {
        Some(toml::Value::Float(f)) => Some(*f),
        Some(toml::Value::Integer(i)) => Some(*i as f64),
        Some(_) => {
            issues.push(format!("{path}.{key}: expected a number"));
            None
        }
        None => None,
    }
}

fn as_map(val: &toml::Value, path: &str, issues: &mut Vec<String>) -> Option<BTreeMap<String, toml::Value>> {
    match val {
        toml::Value::Table(t) => Some(t.iter().map(|(k, v)| (k.clone(), v.clone())).collect()),
        _ => {
            issues.push(format!("[{path}]: expected a table"));
            None
        }
    }
}

fn check_unknown(map: &BTreeMap<String, toml::Value>, allowed: &[&str], path: &str, issues: &mut Vec<String>) {
    for key in map.keys() {
        if !allowed.contains(&key.as_str()) {
            issues.push(format!("{path}.{key}: unknown key"));
        }
    }
}

fn parse_profile(
    val: &toml::Value,
    cfg: &mut ExperimentConfig,
    issues: &mut Vec<String>,
    defaulted: &mut Vec<String>,
) {
    let Some(map) = as_map(val, "profile", issues) else {
        return;
    };
    const ALLOWED: &[&str] = &[
        "kind", "radius", "r_neck", "r_band", "r_waist", "r_hump", "l_hump", "l_neck",
        "l_band_center", "band_halfwidth", "l_alpha", "cap_height", "hump_d2", "neck_d2",
    ];
    check_unknown(&map, ALLOWED, "profile", issues);
    if let Some(kind) = map.get("kind") {
        match kind.as_str() {
            Some("dumbbell") => cfg.surface = SurfaceKind::Dumbbell,
            Some("sphere") => {
                let radius = get_f64(&map, "radius", "profile", issues).unwrap_or_else(|| {
                    defaulted.push("profile.radius".into());
                    1.0
                });
                cfg.surface = SurfaceKind::Sphere { radius };
            }
            _ => issues.push("profile.kind: expected \"dumbbell\" or \"sphere\"".into()),
        }
    }
    let p = &mut cfg.profile;
    let mut set = |key: &str, field: &mut f64| {
        if let Some(v) = get_f64(&map, key, "profile", issues) {
            *field = v;
        } else if !map.contains_key(key) {
            defaulted.push(format!("profile.{key}"));
        }
    };
    set("r_neck", &mut p.r_neck);
    set("r_band", &mut p.r_band);
    set("r_waist", &mut p.r_waist);
    set("r_hump", &mut p.r_hump);
    set("l_hump", &mut p.l_hump);
    set("l_neck", &mut p.l_neck);
    set("l_band_center", &mut p.l_band_center);
    set("band_halfwidth", &mut p.band_halfwidth);
    set("l_alpha", &mut p.l_alpha);
    set("cap_height", &mut p.cap_height);
    set("hump_d2", &mut p.hump_d2);
    set("neck_d2", &mut p.neck_d2);
}

fn parse_bump(
    val: &toml::Value,
    cfg: &mut ExperimentConfig,
    issues: &mut Vec<String>,
    defaulted: &mut Vec<String>,
) {
    let Some(map) = as_map(val, "bump", issues) else {
        return;
    };
    const ALLOWED: &[&str] = &[
        "amplitude",
        "half_width_t",
        "half_width_x",
        "theta0",
        "anchor_offset",
    ];
    check_unknown(&map, ALLOWED, "bump", issues);
    let mut b = BumpConfig::default();
    let mut set = |key: &str, field: &mut f64| {
        if let Some(v) = get_f64(&map, key, "bump", issues) {
            *field = v;
        } else if !map.contains_key(key) {
            defaulted.push(format!("bump.{key}"));
        }
    };
    set("amplitude", &mut b.amplitude);
    set("half_width_t", &mut b.half_width_t);
    set("half_width_x", &mut b.half_width_x);
    set("theta0", &mut b.theta0);
    if map.contains_key("anchor_offset") {
        b.anchor_offset = get_f64(&map, "anchor_offset", "bump", issues);
    }
    cfg.bump = Some(b);
}

fn parse_family(
    val: &toml::Value,
    cfg: &mut ExperimentConfig,
    issues: &mut Vec<String>,
    defaulted: &mut Vec<String>,
) {
    let Some(map) = as_map(val, "family", issues) else {
        return;
    };
    check_unknown(&map, &["d", "d_sweep"], "family", issues);
    let mut sweep = Vec::new();
    if let Some(d) = get_f64(&map, "d", "family", issues) {
        sweep.push(d);
    }
    if let Some(v) = map.get("d_sweep") {
        match v.as_array() {
            Some(arr) => {
                for (i, item) in arr.iter().enumerate() {
                    match item.as_float().or_else(|| item.as_integer().map(|x| x as f64)) {
                        Some(d) => sweep.push(d),
                        None => issues.push(format!("family.d_sweep[{i}]: expected a number")),
                    }
                }
            }
            None => issues.push("family.d_sweep: expected an array".into()),
        }
    }
    if sweep.is_empty() {
        defaulted.push("family.d".into());
    } else {
        cfg.d_sweep = sweep;
    }
}

fn parse_run(
    val: &toml::Value,
    cfg: &mut ExperimentConfig,
    issues: &mut Vec<String>,
    defaulted: &mut Vec<String>,
) {
    let Some(map) = as_map(val, "run", issues) else {
        return;
    };
    const ALLOWED: &[&str] = &[
        "t_max", "n_dirs", "seed", "rtol", "threads", "n_points", "n_iterates", "grid_theta",
        "grid_phi", "refine_tol", "tol_q", "epsilons", "amplitudes", "t_values", "p_theta", "p_l",
        "heading", "q_theta", "q_l",
    ];
    check_unknown(&map, ALLOWED, "run", issues);
    let r = &mut cfg.run;
    let mut set_f = |key: &str, field: &mut f64| {
        if let Some(v) = get_f64(&map, key, "run", issues) {
            *field = v;
        } else if !map.contains_key(key) {
            defaulted.push(format!("run.{key}"));
        }
    };
    set_f("t_max", &mut r.t_max);
    set_f("rtol", &mut r.rtol);
    set_f("refine_tol", &mut r.refine_tol);
    set_f("tol_q", &mut r.tol_q);
    set_f("p_theta", &mut r.p_theta);
    set_f("p_l", &mut r.p_l);
    set_f("heading", &mut r.heading);
    set_f("q_theta", &mut r.q_theta);
    set_f("q_l", &mut r.q_l);
    let mut set_u = |key: &str, field: &mut usize| match map.get(key) {
        Some(toml::Value::Integer(i)) if *i >= 0 => *field = *i as usize,
        Some(_) => issues.push(format!("run.{key}: expected a nonnegative integer")),
        None => defaulted.push(format!("run.{key}")),
    };
    set_u("n_dirs", &mut r.n_dirs);
    set_u("threads", &mut r.threads);
    set_u("n_points", &mut r.n_points);
    set_u("n_iterates", &mut r.n_iterates);
    set_u("grid_theta", &mut r.grid_theta);
    set_u("grid_phi", &mut r.grid_phi);
    match map.get("seed") {
        Some(toml::Value::Integer(i)) if *i >= 0 => r.seed = *i as u64,
        Some(_) => issues.push("run.seed: expected a nonnegative integer".into()),
        None => defaulted.push("run.seed".into()),
    }
    let mut set_vec = |key: &str, field: &mut Vec<f64>| {
        if let Some(v) = map.get(key) {
            match v.as_array() {
                Some(arr) => {
                    let mut out = Vec::new();
                    for (i, item) in arr.iter().enumerate() {
                        match item.as_float().or_else(|| item.as_integer().map(|x| x as f64)) {
                            Some(x) => out.push(x),
                            None => issues.push(format!("run.{key}[{i}]: expected a number")),
                        }
                    }
                    *field = out;
                }
                None => issues.push(format!("run.{key}: expected an array")),
            }
        }
    };
    set_vec("epsilons", &mut r.epsilons);
    set_vec("amplitudes", &mut r.amplitudes);
    set_vec("t_values", &mut r.t_values);
}

fn validate_semantics(cfg: &ExperimentConfig, issues: &mut Vec<String>) {
    for (i, d) in cfg.d_sweep.iter().enumerate() {
        if *d <= 0.0 {
            issues.push(format!("family.d[{i}]: d must be positive (got {d})"));
        }
    }
    if cfg.run.t_max <= 0.0 {
        issues.push(format!("run.t_max must be positive (got {})", cfg.run.t_max));
    }
    if cfg.run.rtol <= 0.0 || cfg.run.rtol >= 1e-2 {
        issues.push(format!("run.rtol out of range (got {})", cfg.run.rtol));
    }
    if cfg.run.n_dirs < 4 {
        issues.push(format!("run.n_dirs too small (got {})", cfg.run.n_dirs));
    }
    for (i, e) in cfg.run.epsilons.iter().enumerate() {
        if !(0.0 < *e && *e < 1.0) {
            issues.push(format!("run.epsilons[{i}]: need 0 < eps < 1 (got {e})"));
        }
    }
    // Construction-level checks surface early with their invariant names.
    if cfg.surface == SurfaceKind::Dumbbell {
        let d = cfg.reference_d();
        if d > 0.0 {
            if let Err(e) = cfg.build_surface(d) {
                issues.push(format!("surface construction: {e}"));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config("[run]\nt_max = 5.0\n").unwrap();
        assert_eq!(cfg.run.t_max, 5.0);
        assert_eq!(cfg.run.n_dirs, 512);
        assert!(cfg.defaulted.iter().any(|k| k == "run.n_dirs"));
        assert!(cfg.defaulted.iter().any(|k| k.starts_with("profile")));
    }

    #[test]
    fn negative_d_is_rejected_with_message() {
        let err = parse_config("[family]\nd = -1.0\n").unwrap_err();
        match err {
            Error::Config { issues } => {
                assert!(
                    issues.iter().any(|i| i.contains("d must be positive")),
                    "{issues:?}"
                );
            }
            other => panic!("expected config error, got {other}"),
        }
    }

    #[test]
    fn unknown_keys_are_errors_and_all_reported() {
        let err = parse_config("[run]\nbogus = 1\nworse = 2\n[nowhere]\nx = 3\n").unwrap_err();
        match err {
            Error::Config { issues } => {
                assert!(issues.iter().any(|i| i.contains("run.bogus")));
                assert!(issues.iter().any(|i| i.contains("run.worse")));
                assert!(issues.iter().any(|i| i.contains("nowhere")));
            }
            other => panic!("expected config error, got {other}"),
        }
    }

    #[test]
    fn indefinite_bump_metric_is_rejected_by_name() {
        // A huge negative amplitude drives the band metric indefinite.
        let err = parse_config("[bump]\namplitude = -2000.0\n").unwrap_err();
        match err {
            Error::Config { issues } => {
                assert!(
                    issues.iter().any(|i| i.contains("positive definite")),
                    "{issues:?}"
                );
            }
            other => panic!("expected config error, got {other}"),
        }
    }

    #[test]
    fn sphere_kind_parses() {
        let cfg = parse_config("[profile]\nkind = \"sphere\"\nradius = 2.0\n").unwrap();
        assert_eq!(cfg.surface, SurfaceKind::Sphere { radius: 2.0 });
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = parse_config("[run]\nt_max = 5.0\n").unwrap();
        let b = parse_config("[run]\nt_max = 5.0\n").unwrap();
        let c = parse_config("[run]\nt_max = 6.0\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }
}
