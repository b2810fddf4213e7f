//! The counting integrals: direction-and-time quadrature of |y| and its
//! area-sampled double version.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::area::AreaSampler;
use crate::counting::shoot::{ShotBundle, SourcePoint};
use crate::error::Result;
use crate::flow::ode::IntegrationOptions;
use crate::surface::ProfileSurface;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Result of the single-point counting integral
/// int_0^T int |y_v(s)| dv ds (equal to the area integral of the counting
/// function over the whole surface).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IntegralCount {
    pub value: f64,
    /// Direction-grid refinement error estimate.
    pub error: f64,
    /// The inner integral at the final time, int |y_v(T)| dv.
    pub inner_at_t: f64,
    pub n_dirs: usize,
}

/// Quadrature of |y_v(s)| over the direction fan and time window.
pub fn integral_count(
    surface: &ProfileSurface,
    p: SourcePoint,
    t_max: f64,
    n_dirs: usize,
    opts: IntegrationOptions,
) -> Result<IntegralCount> {
    let bundle = ShotBundle::shoot(surface, p, n_dirs, t_max, opts)?;
    Ok(integral_from_bundle(&bundle))
}

pub fn integral_from_bundle(bundle: &ShotBundle) -> IntegralCount {
    let totals = bundle.abs_y_totals();
    let n = totals.len();
    let dv = 2.0 * PI / n as f64;
    let value: f64 = totals.iter().sum::<f64>() * dv;
    // Half-grid comparison as the quadrature error estimate.
    let half: f64 = totals.iter().step_by(2).sum::<f64>() * 2.0 * dv;
    let inner: f64 = bundle
        .trajectories
        .iter()
        .map(|t| t.last().extras[0].abs())
        .sum::<f64>()
        * dv;
    IntegralCount {
        value,
        error: (value - half).abs(),
        inner_at_t: inner,
        n_dirs: n,
    }
}

/// The counting integral sampled at a ladder of times in one pass.
pub fn integral_count_series(
    surface: &ProfileSurface,
    p: SourcePoint,
    t_values: &[f64],
    n_dirs: usize,
    opts: IntegrationOptions,
) -> Result<Vec<(f64, f64)>> {
    let t_max = t_values.iter().cloned().fold(0.0, f64::max);
    let bundle = ShotBundle::shoot(surface, p, n_dirs, t_max, opts)?;
    let dv = 2.0 * PI / n_dirs as f64;
    let series = t_values
        .iter()
        .map(|&t| {
            let sum: f64 = bundle
                .trajectories
                .iter()
                .map(|traj| {
                    // The |y| integral is a monotone sample extra; linear
                    // interpolation between recorded steps.
                    let samples = &traj.samples;
                    let idx = samples.partition_point(|s| s.s < t);
                    if idx == 0 {
                        samples[0].extras[5]
                    } else if idx >= samples.len() {
                        samples[samples.len() - 1].extras[5]
                    } else {
                        let (a, b) = (&samples[idx - 1], &samples[idx]);
                        let w = (t - a.s) / (b.s - a.s);
                        a.extras[5] * (1.0 - w) + b.extras[5] * w
                    }
                })
                .sum();
            (t, sum * dv)
        })
        .collect();
    Ok(series)
}

/// Monte Carlo average of the counting integral over area-uniform base
/// points.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DoubleIntegral {
    pub value: f64,
    pub std_error: f64,
    pub n_points: usize,
}

pub fn double_integral_count(
    surface: &ProfileSurface,
    t_max: f64,
    n_points: usize,
    n_dirs: usize,
    seed: u64,
    opts: IntegrationOptions,
) -> Result<DoubleIntegral> {
    let sampler = AreaSampler::new(surface, 4000);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<(f64, f64)> = (0..n_points)
        .map(|_| {
            let l = sampler.sample_l(rng.random::<f64>());
            let theta = 2.0 * PI * rng.random::<f64>();
            (theta, l)
        })
        .collect();
    let values: Result<Vec<f64>> = points
        .par_iter()
        .map(|&(theta, l)| {
            let ic = integral_count(surface, SourcePoint::Interior { theta, l }, t_max, n_dirs, opts)?;
            Ok(ic.value)
        })
        .collect();
    let values = values?;
    let area = sampler.total_area();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / (values.len().max(2) - 1) as f64;
    Ok(DoubleIntegral {
        value: area * mean,
        std_error: area * (var / values.len() as f64).sqrt(),
        n_points,
    })
}
