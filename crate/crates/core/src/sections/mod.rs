//! Return-map machinery on the boundary circles.
//!
//! Four sections live over the two geodesic boundary circles: S1 (leaving
//! the region through alpha), S2 (entering the cap through beta), S3
//! (leaving the cap), S4 (entering the region). Both circles have radius
//! rho, and every section is coordinatized by (theta, phi) with
//! Clairaut value rho sin(phi) — on the inward sections phi is measured
//! against the co-oriented meridian, so both cylinder transits advance
//! theta by d tan(phi)/rho and the two turns advance theta by a smooth
//! function equal to pi at phi = 0.
//!
//! The published form of a turn map, (theta + a(phi), -phi), expresses the
//! same transit with the exit angle read in the mirrored frame; the
//! composed return map uses the frame-consistent version, which is what
//! makes the cylinder advances accumulate and the rescaled family converge
//! to the twist map (theta + 2 phi / rho, phi).

pub mod circle;
pub mod numeric;
pub mod transit;

pub use circle::{classify_side, detect_invariant_circle, CircleGrid, CircleWitness, SideClass};
pub use numeric::{compose_return, numeric_section_map, ReturnMap};
pub use transit::TransitFunction;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// The four transversal circles, in transit order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SectionId {
    /// On alpha, pointing out of the region (toward the cylinder).
    S1,
    /// On beta, pointing into the cap.
    S2,
    /// On beta, pointing out of the cap.
    S3,
    /// On alpha, pointing into the region.
    S4,
}

impl SectionId {
    pub fn next(self) -> SectionId {
        match self {
            SectionId::S1 => SectionId::S2,
            SectionId::S2 => SectionId::S3,
            SectionId::S3 => SectionId::S4,
            SectionId::S4 => SectionId::S1,
        }
    }
}

/// A point of a section: angle around the circle and direction angle with
/// |phi| < pi/2; the Clairaut value is rho sin(phi).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionPoint {
    pub theta: f64,
    pub phi: f64,
    pub section: SectionId,
}

impl SectionPoint {
    pub fn new(theta: f64, phi: f64, section: SectionId) -> Self {
        SectionPoint {
            theta,
            phi,
            section,
        }
    }
}

/// Cylinder transit: (theta + d tan(phi) / rho, phi), S1 -> S2 or S3 -> S4.
pub fn psi_cylinder(d: f64, rho: f64, pt: &SectionPoint) -> Result<SectionPoint> {
    if pt.phi.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::domain(format!(
            "cylinder transit needs |phi| < pi/2, got {}",
            pt.phi
        )));
    }
    let section = match pt.section {
        SectionId::S1 => SectionId::S2,
        SectionId::S3 => SectionId::S4,
        other => {
            return Err(Error::domain(format!(
                "cylinder transit starts on S1 or S3, got {other:?}"
            )))
        }
    };
    Ok(SectionPoint {
        theta: pt.theta + d * pt.phi.tan() / rho,
        phi: pt.phi,
        section,
    })
}

/// Turn transit in the published form: (theta + a(phi), -phi),
/// S2 -> S3 (cap) or S4 -> S1 (region).
pub fn psi_turn(a: &TransitFunction, pt: &SectionPoint) -> Result<SectionPoint> {
    let section = match pt.section {
        SectionId::S2 => SectionId::S3,
        SectionId::S4 => SectionId::S1,
        other => {
            return Err(Error::domain(format!(
                "turn transit starts on S2 or S4, got {other:?}"
            )))
        }
    };
    Ok(SectionPoint {
        theta: pt.theta + a.advance(pt.phi)?,
        phi: -pt.phi,
        section,
    })
}

/// The twist-map limit of the rescaled return family:
/// (theta + 2 phi / rho, phi) on (R/2pi) x [-1, 1].
pub fn limit_map(rho: f64, theta: f64, phi: f64) -> (f64, f64) {
    (theta + 2.0 * phi / rho, phi)
}

/// Conjugate a return map by the vertical scaling (theta, phi) ->
/// (theta, d phi): the rescaled map on (R/2pi) x [-1, 1].
pub fn scaled_map(
    map: &dyn Fn(SectionPoint) -> Result<SectionPoint>,
    d: f64,
    theta: f64,
    phi_scaled: f64,
) -> Result<(f64, f64)> {
    if phi_scaled.abs() > 1.0 + 1e-12 {
        return Err(Error::domain(format!(
            "rescaled coordinate {phi_scaled} outside [-1, 1]"
        )));
    }
    let pt = SectionPoint::new(theta, phi_scaled / d, SectionId::S1);
    let out = map(pt)?;
    Ok((out.theta, d * out.phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cylinder_transit_examples() {
        // rho = 1, d = 2, phi = pi/4 -> theta advance 2.
        let pt = SectionPoint::new(0.0, PI / 4.0, SectionId::S1);
        let out = psi_cylinder(2.0, 1.0, &pt).unwrap();
        assert!((out.theta - 2.0).abs() < 1e-14);
        assert_eq!(out.section, SectionId::S2);
        // phi = 0: identity in theta.
        let pt = SectionPoint::new(1.3, 0.0, SectionId::S3);
        let out = psi_cylinder(5.0, 0.8, &pt).unwrap();
        assert_eq!(out.theta, 1.3);
        assert_eq!(out.section, SectionId::S4);
        // Wrong section.
        let pt = SectionPoint::new(0.0, 0.1, SectionId::S2);
        assert!(psi_cylinder(1.0, 1.0, &pt).is_err());
    }

    #[test]
    fn limit_map_examples() {
        // rho = 2, (0, 1) -> (1, 1).
        let (t, p) = limit_map(2.0, 0.0, 1.0);
        assert_eq!((t, p), (1.0, 1.0));
        // phi = 0: identity.
        let (t, p) = limit_map(0.8, 2.2, 0.0);
        assert_eq!((t, p), (2.2, 0.0));
        // Positive twist: d theta'/d phi = 2/rho > 0.
        let h = 1e-6;
        let (tp, _) = limit_map(0.8, 0.0, h);
        let (tm, _) = limit_map(0.8, 0.0, -h);
        let twist = (tp - tm) / (2.0 * h);
        assert!((twist - 2.0 / 0.8).abs() < 1e-9);
    }
}
