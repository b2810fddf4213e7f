//! Turn-transit advance functions from integrable quadrature.
//!
//! On the unperturbed surface the angular advance of a transit through the
//! cap or the region is a first integral expression: with Clairaut value
//! c = rho sin(phi) and turning latitude r(l*) = |c|,
//! `advance(c) = 2 int (c / r^2) / sqrt(1 - c^2 / r^2) dl`
//! taken from the boundary circle to the turning point. The integrand has a
//! square-root singularity at the turning point, removed by the
//! substitution l = l* - u^2. The smooth real-valued representative with
//! advance(0) = pi (the meridian passes over the pole) adds 2 pi on the
//! negative-phi side; a transit and its mirror always satisfy
//! a(phi) + a(-phi) = 2 pi.

use crate::error::{Error, Result};
use crate::numeric::{adaptive_gauss, brent, ChebyshevTable};
use crate::surface::ProfileSurface;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Which turn the function describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TurnKind {
    /// Through the cap (S2 -> S3).
    Cap,
    /// Through the region (S4 -> S1).
    Region,
}

/// Tabulated smooth advance function for a turn transit, interpolated at
/// Chebyshev nodes over [-phi_max, phi_max].
#[derive(Debug, Clone)]
pub struct TransitFunction {
    pub kind: TurnKind,
    table: ChebyshevTable,
}

impl TransitFunction {
    /// Tabulate with the default 64-node grid up to |phi| = 1.35.
    pub fn tabulate(surface: &ProfileSurface, kind: TurnKind) -> Result<TransitFunction> {
        TransitFunction::tabulate_with(surface, kind, 1.35, 64)
    }

    pub fn tabulate_with(
        surface: &ProfileSurface,
        kind: TurnKind,
        phi_max: f64,
        nodes: usize,
    ) -> Result<TransitFunction> {
        if surface.marks().is_none() {
            return Err(Error::Configuration(
                "turn transits require a dumbbell surface".into(),
            ));
        }
        let table = ChebyshevTable::build(phi_max, nodes, |phi| {
            transit_advance(surface, kind, phi).expect("transit quadrature")
        });
        Ok(TransitFunction { kind, table })
    }

    /// Smooth advance a(phi); errors outside the tabulated window.
    pub fn advance(&self, phi: f64) -> Result<f64> {
        if !self.table.in_range(phi) {
            return Err(Error::domain(format!(
                "phi = {phi} outside tabulated window [{}, {}]",
                -self.table.half_width, self.table.half_width
            )));
        }
        Ok(self.table.eval(phi))
    }

    pub fn phi_max(&self) -> f64 {
        self.table.half_width
    }
}

/// Decomposition of the region transit into its integrable legs: the
/// descent from the boundary circle to the band edge, the straight band
/// chords, and the neck-side excursion below the band (turning point
/// included). Used by the return map to shortcut transits whose band
/// chords miss the bump support.
#[derive(Debug, Clone)]
pub struct RegionLegs {
    /// One-way advance from the boundary circle down to the band edge.
    boundary_leg: ChebyshevTable,
    /// Excursion below the band: down to the turning latitude and back.
    neck_leg: ChebyshevTable,
    band_halfwidth: f64,
    r_band: f64,
}

impl RegionLegs {
    pub fn tabulate(surface: &ProfileSurface) -> Result<RegionLegs> {
        let marks = *surface
            .marks()
            .ok_or_else(|| Error::Configuration("region legs require a dumbbell".into()))?;
        let base = surface.unperturbed();
        let phi_max = 1.35;
        let boundary_leg = ChebyshevTable::build(phi_max, 64, |phi| {
            if phi == 0.0 {
                return 0.0;
            }
            let c = marks.r_waist * phi.sin();
            adaptive_gauss(
                |l| {
                    let r = base.radius(l);
                    let w = 1.0 - (c * c) / (r * r);
                    (c / (r * r)) / w.sqrt()
                },
                marks.band_hi,
                marks.l_alpha,
                1e-13,
            )
        });
        let neck_leg = ChebyshevTable::build(phi_max, 64, |phi| {
            neck_excursion_advance(&base, phi).expect("neck excursion quadrature")
        });
        Ok(RegionLegs {
            boundary_leg,
            neck_leg,
            band_halfwidth: marks.band_halfwidth(),
            r_band: marks.r_band,
        })
    }

    /// Angular advance of one straight band chord (edge to edge).
    pub fn band_chord_advance(&self, phi: f64, r_waist: f64) -> f64 {
        let c = r_waist * phi.sin();
        let s = c / self.r_band;
        2.0 * self.band_halfwidth * (s / self.r_band) / (1.0 - s * s).sqrt()
    }

    pub fn boundary_advance(&self, phi: f64) -> Result<f64> {
        if !self.boundary_leg.in_range(phi) {
            return Err(Error::domain(format!("phi = {phi} outside tabulated window")));
        }
        Ok(self.boundary_leg.eval(phi))
    }

    pub fn neck_advance(&self, phi: f64) -> Result<f64> {
        if !self.neck_leg.in_range(phi) {
            return Err(Error::domain(format!("phi = {phi} outside tabulated window")));
        }
        Ok(self.neck_leg.eval(phi))
    }
}

impl crate::surface::Marks {
    pub(crate) fn band_halfwidth(&self) -> f64 {
        0.5 * (self.band_hi - self.band_lo)
    }
}

/// Advance of the excursion below the band (smooth representative: pi + odd
/// at phi = 0, where the excursion passes over the pole).
fn neck_excursion_advance(surface: &ProfileSurface, phi: f64) -> Result<f64> {
    let marks = *surface.marks().unwrap();
    if phi == 0.0 {
        return Ok(PI);
    }
    let rho = marks.r_waist;
    let c = rho * phi.sin();
    let c_abs = c.abs();
    let turn = brent(|l| surface.radius(l) - c_abs, 1e-12, marks.l_hump, 1e-14);
    let advance = split_turn_quadrature(surface, c, turn, marks.band_lo, 1.0)?;
    if phi > 0.0 {
        Ok(advance)
    } else {
        Ok(advance + 2.0 * PI)
    }
}

/// 2 * integral of the advance density from the turning latitude to l_out,
/// with the square-root singularity removed; `away` = +1 when the allowed
/// side is l > turn, -1 otherwise.
fn split_turn_quadrature(
    surface: &ProfileSurface,
    c: f64,
    l_turn: f64,
    l_out: f64,
    away: f64,
) -> Result<f64> {
    let c_abs = c.abs();
    let integrand = |l: f64| {
        let r = surface.radius(l);
        let w = 1.0 - (c * c) / (r * r);
        (c / (r * r)) / w.sqrt()
    };
    let span = (l_out - l_turn).abs();
    let split = 0.25 * span.min(1.0);
    let (smooth_lo, smooth_hi) = if away > 0.0 {
        (l_turn + split, l_out)
    } else {
        (l_out, l_turn - split)
    };
    let outer = adaptive_gauss(
        integrand,
        smooth_lo.min(smooth_hi),
        smooth_lo.max(smooth_hi),
        1e-13,
    );
    let q_limit = surface.radius_d1(l_turn).abs();
    let inner = adaptive_gauss(
        |u| {
            let l = l_turn + away * u * u;
            let r = surface.radius(l);
            let q = if u > 1e-6 {
                ((r - c_abs) / (u * u)).max(1e-300)
            } else {
                q_limit
            };
            2.0 * c / (r * (q * (r + c_abs)).sqrt())
        },
        0.0,
        split.sqrt(),
        1e-13,
    );
    Ok(2.0 * (outer + inner))
}

/// Direct quadrature of the advance (no interpolation): smooth
/// representative with value pi at phi = 0.
pub fn transit_advance(surface: &ProfileSurface, kind: TurnKind, phi: f64) -> Result<f64> {
    let marks = surface
        .marks()
        .ok_or_else(|| Error::Configuration("turn transits require a dumbbell".into()))?;
    if phi == 0.0 {
        return Ok(PI);
    }
    let rho = marks.r_waist;
    let c = rho * phi.sin();
    let c_abs = c.abs();
    if c_abs >= rho {
        return Err(Error::domain(format!(
            "transit is tangent to the boundary circle at phi = {phi}"
        )));
    }

    // Locate the turning latitude r(l) = |c| on the far side of the
    // transit and integrate outward from it.
    let advance = match kind {
        TurnKind::Cap => {
            // r decreases from rho to 0 across the cap.
            let total = surface.total_length();
            let turn = brent(
                |l| surface.radius(l) - c_abs,
                marks.l_beta,
                total - 1e-12,
                1e-14,
            );
            split_turn_quadrature(surface, c, turn, marks.l_beta, -1.0)?
        }
        TurnKind::Region => {
            // Entering at alpha and descending, the first latitude with
            // r = |c| < rho lies on the bottom lobe below the hump.
            let turn = brent(|l| surface.radius(l) - c_abs, 1e-12, marks.l_hump, 1e-14);
            split_turn_quadrature(surface, c, turn, marks.l_alpha, 1.0)?
        }
    };
    // Smooth real-valued representative: pi + odd, so the negative side is
    // shifted up by a full turn.
    if phi > 0.0 {
        Ok(advance)
    } else {
        Ok(advance + 2.0 * PI)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::DumbbellParams;

    #[test]
    fn advance_at_zero_is_pi_and_reflection_identity_holds() {
        let s = DumbbellParams::default().build().unwrap();
        for kind in [TurnKind::Cap, TurnKind::Region] {
            let a = TransitFunction::tabulate(&s, kind).unwrap();
            let a0 = a.advance(0.0).unwrap();
            assert!((a0 - PI).abs() < 1e-8, "{kind:?}: a(0) = {a0}");
            for &phi in &[0.05, 0.3, 0.9, 1.2] {
                let plus = a.advance(phi).unwrap();
                let minus = a.advance(-phi).unwrap();
                assert!(
                    (plus + minus - 2.0 * PI).abs() < 1e-8,
                    "{kind:?}: a({phi}) + a(-{phi}) = {}",
                    plus + minus
                );
            }
        }
    }

    #[test]
    fn interpolation_matches_direct_quadrature() {
        let s = DumbbellParams::default().build().unwrap();
        let a = TransitFunction::tabulate(&s, TurnKind::Region).unwrap();
        for &phi in &[-1.1, -0.42, 0.013, 0.2, 0.77, 1.3] {
            let direct = transit_advance(&s, TurnKind::Region, phi).unwrap();
            let interp = a.advance(phi).unwrap();
            assert!(
                (direct - interp).abs() < 1e-9,
                "phi = {phi}: {direct} vs {interp}"
            );
        }
    }

    #[test]
    fn near_meridian_limit_approaches_pi() {
        let s = DumbbellParams::default().build().unwrap();
        let a1 = transit_advance(&s, TurnKind::Cap, 1e-4).unwrap();
        let a2 = transit_advance(&s, TurnKind::Cap, 1e-6).unwrap();
        assert!((a1 - PI).abs() < 1e-2, "a(1e-4) = {a1}");
        assert!((a2 - PI).abs() < 1e-4, "a(1e-6) = {a2}");
        assert!((a2 - PI).abs() < (a1 - PI).abs());
    }

    #[test]
    fn domain_error_outside_window() {
        let s = DumbbellParams::default().build().unwrap();
        let a = TransitFunction::tabulate(&s, TurnKind::Cap).unwrap();
        assert!(a.advance(1.4).is_err());
    }
}
