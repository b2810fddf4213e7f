//! Exponential growth-rate fitting with a bootstrap confidence band.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sampled function T -> value with a declared tail window for fitting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthSeries {
    /// Strictly increasing sample times and positive values.
    pub samples: Vec<(f64, f64)>,
    /// Fraction of the window (from the end) used for the fit.
    pub tail_fraction: f64,
}

impl GrowthSeries {
    pub fn new(samples: Vec<(f64, f64)>) -> Self {
        GrowthSeries {
            samples,
            tail_fraction: 0.5,
        }
    }

    pub fn with_tail(mut self, fraction: f64) -> Self {
        self.tail_fraction = fraction;
        self
    }

    fn tail(&self) -> &[(f64, f64)] {
        let n = self.samples.len();
        let keep = ((n as f64 * self.tail_fraction).ceil() as usize).clamp(5.min(n), n);
        &self.samples[n - keep..]
    }
}

/// Least-squares slope of log(value) vs T with a percentile bootstrap
/// confidence interval.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GrowthFit {
    pub slope: f64,
    pub intercept: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_used: usize,
}

impl GrowthFit {
    pub fn band_overlaps(&self, other: &GrowthFit) -> bool {
        self.ci_lo <= other.ci_hi && other.ci_lo <= self.ci_hi
    }
}

pub fn growth_rate(series: &GrowthSeries) -> Result<GrowthFit> {
    growth_rate_seeded(series, 0x9e3779b97f4a7c15)
}

pub fn growth_rate_seeded(series: &GrowthSeries, seed: u64) -> Result<GrowthFit> {
    let tail = series.tail();
    if tail.len() < 5 {
        return Err(Error::Fit(format!(
            "need at least 5 tail samples, have {}",
            tail.len()
        )));
    }
    let mut prev = f64::MIN;
    for &(t, v) in tail {
        if v <= 0.0 {
            return Err(Error::Fit(format!("nonpositive value {v} at T = {t}")));
        }
        if t <= prev {
            return Err(Error::Fit("sample times must be strictly increasing".into()));
        }
        prev = t;
    }
    let pts: Vec<(f64, f64)> = tail.iter().map(|&(t, v)| (t, v.ln())).collect();
    let (slope, intercept) = lsq(&pts);

    // Pairs bootstrap, fixed seed, percentile interval.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_boot = 500;
    let mut slopes = Vec::with_capacity(n_boot);
    for _ in 0..n_boot {
        let resample: Vec<(f64, f64)> = (0..pts.len())
            .map(|_| pts[rng.random_range(0..pts.len())])
            .collect();
        // Degenerate resamples (all the same T) are skipped.
        let t0 = resample[0].0;
        if resample.iter().all(|&(t, _)| t == t0) {
            continue;
        }
        slopes.push(lsq(&resample).0);
    }
    slopes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo_idx = (0.025 * slopes.len() as f64) as usize;
    let hi_idx = ((0.975 * slopes.len() as f64) as usize).min(slopes.len() - 1);
    Ok(GrowthFit {
        slope,
        intercept,
        ci_lo: slopes[lo_idx],
        ci_hi: slopes[hi_idx],
        n_used: pts.len(),
    })
}

fn lsq(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    (slope, (sy - slope * sx) / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential_recovers_rate() {
        let samples: Vec<(f64, f64)> = (1..=40)
            .map(|k| {
                let t = k as f64;
                (t, 2.5 * (0.3 * t).exp())
            })
            .collect();
        let fit = growth_rate(&GrowthSeries::new(samples)).unwrap();
        assert!((fit.slope - 0.3).abs() < 1e-6, "slope {}", fit.slope);
        assert!(fit.ci_lo <= 0.3 && 0.3 <= fit.ci_hi);
    }

    #[test]
    fn linear_growth_slope_shrinks_with_window() {
        let series = |t_max: usize| {
            GrowthSeries::new(
                (1..=t_max)
                    .map(|k| {
                        let t = k as f64;
                        (t, 4.0 * t)
                    })
                    .collect(),
            )
        };
        let short = growth_rate(&series(20)).unwrap();
        let long = growth_rate(&series(200)).unwrap();
        assert!(long.slope < short.slope);
        assert!(long.slope < 0.01, "slope {}", long.slope);
    }

    #[test]
    fn rejects_nonpositive_values() {
        let mut samples: Vec<(f64, f64)> = (1..=10).map(|k| (k as f64, 1.0)).collect();
        samples[7].1 = 0.0;
        assert!(growth_rate(&GrowthSeries::new(samples)).is_err());
    }

    #[test]
    fn deterministic_under_fixed_seed() {
        let samples: Vec<(f64, f64)> = (1..=30)
            .map(|k| {
                let t = k as f64;
                (t, (0.2 * t).exp() * (1.0 + 0.01 * (3.0 * t).sin()))
            })
            .collect();
        let a = growth_rate(&GrowthSeries::new(samples.clone())).unwrap();
        let b = growth_rate(&GrowthSeries::new(samples)).unwrap();
        assert_eq!(a.slope, b.slope);
        assert_eq!(a.ci_lo, b.ci_lo);
        assert_eq!(a.ci_hi, b.ci_hi);
    }
}
