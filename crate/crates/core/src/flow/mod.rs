//! Geodesic, Jacobi and Riccati integration on profile surfaces.
//!
//! The flow is integrated in a direction-angle chart (theta, l, chi) that is
//! regular across latitude tangencies and exactly unit speed; near the poles
//! the driver switches to a Cartesian normal chart built from the exact
//! profile, and inside the metric bump to the sheared band chart. Chart
//! transitions, section crossings and Riccati blow-ups are located by
//! bisection on the dense output and recorded as events.

pub mod driver;
pub mod exponent;
pub mod field;
pub mod ode;
pub mod sojourn;
pub mod trajectory;

pub use driver::{integrate_geodesic, integrate_jacobi, integrate_riccati, FlowTask, StopRule};
pub use exponent::{finite_time_exponent, LyapunovBoundParams};
pub use ode::IntegrationOptions;
pub use trajectory::{Event, EventKind, Sample, Trajectory};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A unit tangent vector in the (theta, l, phi) chart with arc-length time.
///
/// `phi` is the angle to the meridian in (-pi/2, pi/2]; `upward` selects the
/// half of the direction circle within a right angle of the +l meridian
/// direction. The full direction angle is `heading()`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicState {
    pub theta: f64,
    pub l: f64,
    pub phi: f64,
    pub upward: bool,
    pub s: f64,
}

impl GeodesicState {
    /// State with `phi` measured from the +l meridian (upward family).
    pub fn new(theta: f64, l: f64, phi: f64) -> Self {
        GeodesicState {
            theta,
            l,
            phi,
            upward: true,
            s: 0.0,
        }
    }

    /// State from a full direction angle chi (counterclockwise from the +l
    /// meridian direction).
    pub fn from_heading(theta: f64, l: f64, chi: f64) -> Self {
        let mut c = chi.rem_euclid(2.0 * PI);
        if c > 3.0 * std::f64::consts::FRAC_PI_2 + 1e-12 {
            c -= 2.0 * PI;
        }
        // c in (-pi/2, 3pi/2]
        if c <= FRAC_PI_2_EPS {
            GeodesicState {
                theta,
                l,
                phi: c,
                upward: true,
                s: 0.0,
            }
        } else {
            GeodesicState {
                theta,
                l,
                phi: c - PI,
                upward: false,
                s: 0.0,
            }
        }
    }

    pub fn with_time(mut self, s: f64) -> Self {
        self.s = s;
        self
    }

    /// Full direction angle from the +l meridian direction.
    pub fn heading(&self) -> f64 {
        if self.upward {
            self.phi
        } else {
            self.phi + PI
        }
    }

    /// The reversed vector at the same point.
    pub fn flip(&self) -> Self {
        GeodesicState {
            theta: self.theta,
            l: self.l,
            phi: self.phi,
            upward: !self.upward,
            s: self.s,
        }
    }
}

const FRAC_PI_2_EPS: f64 = std::f64::consts::FRAC_PI_2 + 1e-12;

/// Normal Jacobi data (y, y') along a geodesic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobiState {
    pub y: f64,
    pub y_prime: f64,
}

/// Wavefront curvature along a geodesic; `inverted` means the stored value
/// is w = 1/u (used across blow-ups).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiccatiState {
    pub value: f64,
    pub inverted: bool,
}

impl RiccatiState {
    pub fn curvature(&self) -> f64 {
        if self.inverted {
            1.0 / self.value
        } else {
            self.value
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn flip_is_an_involution_and_negates_clairaut() {
        let s = crate::surface::ProfileSurface::unit_sphere();
        let v = GeodesicState::new(0.3, 1.1, 0.7);
        let f = v.flip();
        assert_eq!(f.flip(), v);
        let c = s.clairaut(&v).unwrap();
        let cf = s.clairaut(&f).unwrap();
        assert!((c + cf).abs() < 1e-15);
        // phi = 0 flips to the opposite meridian direction.
        let m = GeodesicState::new(0.0, 1.0, 0.0);
        let fm = m.flip();
        assert_eq!(fm.phi, 0.0);
        assert!(!fm.upward);
        assert!((fm.heading() - PI).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn heading_roundtrip(theta in -10.0..10.0f64, l in 0.1..3.0f64, chi in -9.0..9.0f64) {
            let v = GeodesicState::from_heading(theta, l, chi);
            prop_assert!(v.phi > -std::f64::consts::FRAC_PI_2 - 1e-9);
            prop_assert!(v.phi <= std::f64::consts::FRAC_PI_2 + 1e-9);
            // Headings agree modulo 2 pi.
            let diff = (v.heading() - chi).rem_euclid(2.0 * PI);
            prop_assert!(diff < 1e-9 || (2.0 * PI - diff) < 1e-9);
        }
    }
}
