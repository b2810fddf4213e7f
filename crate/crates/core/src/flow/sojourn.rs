//! Sojourn-time measurements: how long orbits spend inside the region and
//! the cap per visit, and the largest entry angle that still guarantees a
//! prompt exit.

use rayon::prelude::*;

use crate::error::Result;
use crate::flow::driver::{FlowTask, StopRule};
use crate::flow::ode::IntegrationOptions;
use crate::flow::trajectory::EventKind;
use crate::flow::GeodesicState;
use crate::surface::ProfileSurface;
use std::f64::consts::PI;

/// One stay inside the region or the cap.
#[derive(Debug, Clone, Copy)]
pub struct Sojourn {
    pub enter_s: f64,
    pub exit_s: f64,
    /// true for the region (inside alpha), false for the cap (inside beta).
    pub in_region: bool,
}

impl Sojourn {
    pub fn duration(&self) -> f64 {
        self.exit_s - self.enter_s
    }
}

/// Extract completed sojourns in the region and cap from an event stream.
pub fn sojourns_from_events(
    events: &[crate::flow::trajectory::Event],
    started_inside_region: bool,
    start_s: f64,
) -> Vec<Sojourn> {
    let mut out = Vec::new();
    let mut region_enter = if started_inside_region {
        Some(start_s)
    } else {
        None
    };
    let mut cap_enter: Option<f64> = None;
    for e in events {
        match e.kind {
            EventKind::AlphaIn => region_enter = Some(e.s),
            EventKind::AlphaOut => {
                if let Some(s0) = region_enter.take() {
                    out.push(Sojourn {
                        enter_s: s0,
                        exit_s: e.s,
                        in_region: true,
                    });
                }
            }
            EventKind::BetaIn => cap_enter = Some(e.s),
            EventKind::BetaOut => {
                if let Some(s0) = cap_enter.take() {
                    out.push(Sojourn {
                        enter_s: s0,
                        exit_s: e.s,
                        in_region: false,
                    });
                }
            }
            _ => {}
        }
    }
    out
}

/// Maximum completed sojourn in region-or-cap over a grid of oscillating
/// starts on the boundary circle: per-theta, per-angle seeds pointing into
/// the region, each integrated for `horizon`.
pub fn max_sojourn(
    surface: &ProfileSurface,
    phi_band: f64,
    n_theta: usize,
    n_phi: usize,
    horizon: f64,
    opts: IntegrationOptions,
) -> Result<f64> {
    let marks = surface.marks().expect("dumbbell surface");
    let mut seeds = Vec::new();
    for i in 0..n_theta {
        let theta = 2.0 * PI * i as f64 / n_theta as f64;
        for j in 0..n_phi {
            let phi = phi_band * (2.0 * j as f64 / (n_phi.max(2) - 1) as f64 - 1.0);
            // Entering the region: heading pi - phi (downward family).
            seeds.push(GeodesicState::from_heading(theta, marks.l_alpha - 1e-9, PI - phi));
        }
    }
    let mut run_opts = opts;
    run_opts.record_steps = false;
    let sups: Result<Vec<f64>> = seeds
        .par_iter()
        .map(|seed| {
            let traj = FlowTask::new(surface).with_options(run_opts).run(
                seed,
                horizon,
                &[],
            )?;
            let sj = sojourns_from_events(&traj.events, true, 0.0);
            Ok(sj.iter().map(Sojourn::duration).fold(0.0, f64::max))
        })
        .collect();
    Ok(sups?.into_iter().fold(0.0, f64::max))
}

/// Measured entry-angle threshold: binary search for the largest phi such
/// that every grid geodesic entering the region through the boundary circle
/// with |angle| <= phi exits within the time cap.
pub fn measure_entry_angle(
    surface: &ProfileSurface,
    n_theta: usize,
    time_cap: f64,
    opts: IntegrationOptions,
) -> f64 {
    let marks = surface.marks().expect("dumbbell surface");
    let mut run_opts = opts;
    run_opts.record_steps = false;
    let exits_promptly = |phi: f64| -> bool {
        (0..n_theta).into_par_iter().all(|i| {
            let theta = 2.0 * PI * i as f64 / n_theta as f64;
            for sign in [-1.0, 1.0] {
                let seed =
                    GeodesicState::from_heading(theta, marks.l_alpha - 1e-9, PI - sign * phi);
                let task = FlowTask::new(surface)
                    .with_options(run_opts)
                    .with_stop(StopRule::LatitudeCross {
                        l: marks.l_alpha,
                        upward: Some(true),
                        after_s: 1e-6,
                    });
                match task.run(&seed, time_cap, &[]) {
                    Ok(traj) => {
                        if !traj.events.iter().any(|e| e.kind == EventKind::Stop) {
                            return false;
                        }
                    }
                    Err(_) => return false,
                }
            }
            true
        })
    };
    let mut lo = 0.1;
    let mut hi = 0.5 * PI - 1e-3;
    if !exits_promptly(lo) {
        return 0.0;
    }
    if exits_promptly(hi) {
        return hi;
    }
    for _ in 0..20 {
        let mid = 0.5 * (lo + hi);
        if exits_promptly(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
