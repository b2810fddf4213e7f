//! Wavefront evolution with adaptive direction refinement.
//!
//! The time-T image of the unit circle at p is a curve in the unit tangent
//! bundle whose length is int sqrt(y^2 + y'^2) dv over initial directions.
//! The polygonal length of the sampled front measures the same curve with
//! the Sasaki-style distance between consecutive samples (chart position
//! difference plus the parallel-transport-corrected direction difference).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::shoot::SourcePoint;
use crate::error::Result;
use crate::flow::driver::FlowTask;
use crate::flow::ode::IntegrationOptions;
use crate::flow::GeodesicState;
use crate::surface::bump::wrap_angle;
use crate::surface::ProfileSurface;
use std::f64::consts::PI;

/// One front sample: the endpoint of the geodesic shot in direction v.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FrontSample {
    pub v: f64,
    pub theta: f64,
    pub l: f64,
    pub heading: f64,
    pub y: f64,
    pub y_prime: f64,
}

/// Polygonal front with refinement metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrontCurve {
    pub samples: Vec<FrontSample>,
    pub t: f64,
    /// Quadrature of sqrt(y^2 + y'^2) over directions.
    pub length_quadrature: f64,
    /// Polygonal length of the sampled curve in the unit tangent bundle.
    pub length_polygonal: f64,
    pub refine_tol: f64,
    /// False if the refinement budget ran out first.
    pub complete: bool,
}

fn shoot_one(
    surface: &ProfileSurface,
    p: SourcePoint,
    v: f64,
    t: f64,
    opts: IntegrationOptions,
) -> Result<FrontSample> {
    let mut run_opts = opts;
    run_opts.record_steps = false;
    let task = FlowTask::new(surface).with_options(run_opts).with_jacobi(1);
    let traj = match p {
        SourcePoint::Interior { theta, l } => {
            let v0 = GeodesicState::from_heading(theta, l, v);
            task.run(&v0, t, &[0.0, 1.0])?
        }
        SourcePoint::Pole(end) => task.run_from_pole(end, v, t, &[0.0, 1.0])?,
    };
    let end = traj.last();
    let (y, y_prime) = end.jacobi(0);
    Ok(FrontSample {
        v,
        theta: end.theta,
        l: end.l,
        heading: end.heading,
        y,
        y_prime,
    })
}

/// Evolve the direction circle at p for time t with adaptive insertion of
/// directions until adjacent samples separate by at most refine_tol times
/// the front's (y, y') amplitude (so exponentially spreading fronts refine
/// to a fixed relative resolution).
pub fn front_length(
    surface: &ProfileSurface,
    p: SourcePoint,
    t: f64,
    refine_tol: f64,
    n_init: usize,
    max_samples: usize,
    opts: IntegrationOptions,
) -> Result<FrontCurve> {
    let init: Vec<f64> = (0..n_init)
        .map(|i| 2.0 * PI * i as f64 / n_init as f64)
        .collect();
    let mut samples: Vec<FrontSample> = init
        .par_iter()
        .map(|&v| shoot_one(surface, p, v, t, opts))
        .collect::<Result<Vec<_>>>()?;
    samples.sort_by(|a, b| a.v.partial_cmp(&b.v).unwrap());

    let mut complete = true;
    loop {
        let scale = samples
            .iter()
            .map(|s| s.y.hypot(s.y_prime))
            .fold(1.0, f64::max);
        let threshold = refine_tol * scale;
        // Find gaps that need refinement (the circle wraps around).
        let mut inserts: Vec<f64> = Vec::new();
        for i in 0..samples.len() {
            let a = &samples[i];
            let b = &samples[(i + 1) % samples.len()];
            let gap = ((a.y - b.y).powi(2) + (a.y_prime - b.y_prime).powi(2)).sqrt();
            if gap > threshold {
                let vb = if i + 1 == samples.len() {
                    b.v + 2.0 * PI
                } else {
                    b.v
                };
                inserts.push(0.5 * (a.v + vb));
            }
        }
        if inserts.is_empty() {
            break;
        }
        if samples.len() + inserts.len() > max_samples {
            complete = false;
            break;
        }
        let new: Vec<FrontSample> = inserts
            .par_iter()
            .map(|&v| shoot_one(surface, p, v % (2.0 * PI), t, opts).map(|mut s| {
                s.v = v % (2.0 * PI);
                s
            }))
            .collect::<Result<Vec<_>>>()?;
        samples.extend(new);
        samples.sort_by(|a, b| a.v.partial_cmp(&b.v).unwrap());
    }

    // Trapezoid quadrature of sqrt(y^2 + y'^2) over the direction circle.
    let mut quad = 0.0;
    let mut poly = 0.0;
    let n = samples.len();
    for i in 0..n {
        let a = &samples[i];
        let b = &samples[(i + 1) % n];
        let dv = if i + 1 == n {
            b.v + 2.0 * PI - a.v
        } else {
            b.v - a.v
        };
        let fa = (a.y * a.y + a.y_prime * a.y_prime).sqrt();
        let fb = (b.y * b.y + b.y_prime * b.y_prime).sqrt();
        quad += 0.5 * (fa + fb) * dv;
        poly += phase_distance(surface, a, b);
    }

    Ok(FrontCurve {
        samples,
        t,
        length_quadrature: quad,
        length_polygonal: poly,
        refine_tol,
        complete,
    })
}

/// Distance between nearby unit vectors: chart position distance plus the
/// parallel direction difference (the frame rotates by r' d theta along a
/// latitude step).
fn phase_distance(surface: &ProfileSurface, a: &FrontSample, b: &FrontSample) -> f64 {
    let l_mid = 0.5 * (a.l + b.l);
    let r = surface.radius(l_mid);
    let r1 = surface.radius_d1(l_mid);
    let dtheta = wrap_angle(b.theta - a.theta);
    let dl = b.l - a.l;
    let dpos2 = dl * dl + r * r * dtheta * dtheta;
    let dangle = wrap_angle(b.heading - a.heading) + r1 * dtheta;
    (dpos2 + dangle * dangle).sqrt()
}
