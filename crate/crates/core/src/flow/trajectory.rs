//! Sampled trajectories and their event records.

use serde::{Deserialize, Serialize};

use crate::flow::GeodesicState;
use crate::surface::ProfileSurface;

/// What happened at an event time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    /// Crossed the boundary circle of the region (alpha), leaving the region.
    AlphaOut,
    /// Crossed alpha entering the region.
    AlphaIn,
    /// Crossed the cap boundary (beta), entering the cap.
    BetaIn,
    /// Crossed beta leaving the cap.
    BetaOut,
    /// Crossed the hyperbolic neck circle.
    NeckCross,
    /// Entered or left the flat band.
    BandEnter,
    BandExit,
    /// Chart handovers.
    PoleChartEnter,
    PoleChartExit,
    BumpChartEnter,
    BumpChartExit,
    /// Closest approach to a pole inside the polar chart.
    PolePassage,
    /// First Jacobi amplitude crossed zero.
    JacobiZero,
    /// Riccati representation switches and conjugate passages.
    RiccatiInvert,
    RiccatiRestore,
    ConjugatePoint,
    /// Stop-rule crossing that ended the integration.
    Stop,
}

/// An event with interpolated crossing data.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub s: f64,
    pub theta: f64,
    pub l: f64,
    /// Direction angle from the +l meridian at the crossing.
    pub heading: f64,
}

/// One recorded point of a trajectory, always reported in the global
/// (theta, l) coordinates with unwrapped theta and heading.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Sample {
    pub s: f64,
    pub theta: f64,
    pub l: f64,
    pub heading: f64,
    /// Passenger values, in layout order (Jacobi pairs, Riccati curvature,
    /// |y| integral); unused slots are zero.
    pub extras: [f64; 6],
}

impl Sample {
    pub fn jacobi(&self, pair: usize) -> (f64, f64) {
        (self.extras[2 * pair], self.extras[2 * pair + 1])
    }

    pub fn state(&self) -> GeodesicState {
        GeodesicState::from_heading(self.theta, self.l, self.heading).with_time(self.s)
    }
}

/// Integration output: samples at accepted steps (or events only), the
/// event list, and the final state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    /// Number of Jacobi pairs carried.
    pub jacobi_pairs: usize,
    pub carried_riccati: bool,
    pub carried_abs_y: bool,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has samples")
    }

    pub fn final_state(&self) -> GeodesicState {
        self.last().state()
    }

    pub fn duration(&self) -> f64 {
        self.last().s - self.samples[0].s
    }

    /// Maximum |r sin(heading)| drift along the samples (unperturbed
    /// surfaces conserve this).
    pub fn clairaut_drift(&self, surface: &ProfileSurface) -> f64 {
        let c0 = surface.clairaut_raw(self.samples[0].l, self.samples[0].heading);
        self.samples
            .iter()
            .map(|p| (surface.clairaut_raw(p.l, p.heading) - c0).abs())
            .fold(0.0, f64::max)
    }

    /// Position (theta, l) at time s by monotone cubic Hermite interpolation
    /// between the bracketing samples, using the exact chart velocities at
    /// the sample points. Sub-sample accuracy is O(h^4) of the step size.
    pub fn position_at(&self, surface: &ProfileSurface, s: f64) -> (f64, f64) {
        let (a, b) = self.bracket(s);
        if a == b {
            let p = &self.samples[a];
            return (p.theta, p.l);
        }
        let p0 = &self.samples[a];
        let p1 = &self.samples[b];
        let h = p1.s - p0.s;
        let t = (s - p0.s) / h;
        let v0 = chart_velocity(surface, p0);
        let v1 = chart_velocity(surface, p1);
        (
            hermite(p0.theta, v0.0 * h, p1.theta, v1.0 * h, t),
            hermite(p0.l, v0.1 * h, p1.l, v1.1 * h, t),
        )
    }

    fn bracket(&self, s: f64) -> (usize, usize) {
        let n = self.samples.len();
        if s <= self.samples[0].s {
            return (0, 0);
        }
        if s >= self.samples[n - 1].s {
            return (n - 1, n - 1);
        }
        let idx = self.samples.partition_point(|p| p.s < s);
        (idx - 1, idx)
    }
}

fn chart_velocity(surface: &ProfileSurface, p: &Sample) -> (f64, f64) {
    let r = surface.radius(p.l);
    let (sin_chi, cos_chi) = p.heading.sin_cos();
    if r <= 1e-9 {
        return (0.0, cos_chi);
    }
    (sin_chi / r, cos_chi)
}

fn hermite(y0: f64, m0: f64, y1: f64, m1: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
        + m0 * (t3 - 2.0 * t2 + t)
        + y1 * (-2.0 * t3 + 3.0 * t2)
        + m1 * (t3 - t2)
}
