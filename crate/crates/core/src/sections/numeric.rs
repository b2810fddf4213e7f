//! Flow-integrated section transits and the composed return map.

use crate::error::{Error, Result};
use crate::flow::driver::{FlowTask, StopRule};
use crate::flow::ode::IntegrationOptions;
use crate::flow::trajectory::EventKind;
use crate::flow::GeodesicState;
use crate::sections::transit::{TransitFunction, TurnKind};
use crate::sections::{psi_cylinder, SectionId, SectionPoint};
use crate::surface::ProfileSurface;
use std::f64::consts::PI;

/// Flow-integrate one turn transit, returning the exit point with the
/// frame-consistent angle (Clairaut value rho sin(phi) on both ends; the
/// advance of a meridian transit is pi).
pub fn numeric_turn(
    surface: &ProfileSurface,
    kind: TurnKind,
    pt: &SectionPoint,
    opts: IntegrationOptions,
    time_cap: f64,
) -> Result<SectionPoint> {
    let marks = surface
        .marks()
        .ok_or_else(|| Error::Configuration("turn transits require a dumbbell".into()))?;
    let (l_circle, heading_in, stop_upward, out_section) = match kind {
        // Into the region, exit upward through alpha.
        TurnKind::Region => (marks.l_alpha, PI - pt.phi, true, SectionId::S1),
        // Into the cap (upward), exit downward through beta.
        TurnKind::Cap => (marks.l_beta, pt.phi, false, SectionId::S3),
    };
    let mut run_opts = opts;
    run_opts.record_steps = false;
    let task = FlowTask::new(surface)
        .with_options(run_opts)
        .with_stop(StopRule::LatitudeCross {
            l: l_circle,
            upward: Some(stop_upward),
            after_s: 1e-6,
        });
    let v0 = GeodesicState::from_heading(pt.theta, l_circle, heading_in);
    let traj = task.run(&v0, time_cap, &[])?;
    if !traj.events.iter().any(|e| e.kind == EventKind::Stop) {
        return Err(Error::Escape {
            cap: time_cap,
            theta: pt.theta,
            phi: pt.phi,
        });
    }
    let end = traj.final_state();
    // Frame-consistent exit angle: chi for upward exits, pi - chi downward.
    let phi_out = match kind {
        TurnKind::Region => end.heading_principal(),
        TurnKind::Cap => PI - end.heading(),
    };
    // The raw winding of a turn is negative for phi < 0; shift to the
    // phi-continuous lift (advance = pi + odd), matching the tabulated
    // representative.
    let lift = if pt.phi < 0.0 { 2.0 * PI } else { 0.0 };
    Ok(SectionPoint {
        theta: end.theta + lift,
        phi: normalize_phi(phi_out),
        section: out_section,
    })
}

/// The transit from S4 to S1 induced by the (possibly perturbed) flow, in
/// the published turn-map convention: for zero bump amplitude it matches
/// psi_turn with the tabulated region advance to integration accuracy.
pub fn numeric_section_map(
    surface: &ProfileSurface,
    pt: &SectionPoint,
    opts: IntegrationOptions,
    time_cap: f64,
) -> Result<SectionPoint> {
    if pt.section != SectionId::S4 {
        return Err(Error::domain(format!(
            "numeric section map starts on S4, got {:?}",
            pt.section
        )));
    }
    let out = numeric_turn(surface, TurnKind::Region, pt, opts, time_cap)?;
    Ok(SectionPoint {
        theta: out.theta,
        phi: -out.phi,
        section: out.section,
    })
}

fn normalize_phi(phi: f64) -> f64 {
    let mut p = phi;
    while p > PI {
        p -= 2.0 * PI;
    }
    while p < -PI {
        p += 2.0 * PI;
    }
    p
}

impl GeodesicState {
    /// Heading wrapped to (-pi, pi].
    pub(crate) fn heading_principal(&self) -> f64 {
        normalize_phi(self.heading())
    }
}

/// The full first-return map on S1, composed from the two cylinder
/// transits, the analytic cap turn, and the region turn. Theta is
/// accumulated without reduction so rotation numbers can be read off.
///
/// On a perturbed surface the region turn is flow-integrated only when one
/// of the two straight band chords actually meets the bump's chart box;
/// every other transit is integrable and evaluated from the tabulated
/// advance, which keeps long confinement runs cheap.
pub struct ReturnMap<'a> {
    pub surface: &'a ProfileSurface,
    pub d: f64,
    cap: TransitFunction,
    region: TransitFunction,
    legs: Option<crate::sections::transit::RegionLegs>,
    opts: IntegrationOptions,
    pub transit_time_cap: f64,
}

impl<'a> ReturnMap<'a> {
    pub fn new(surface: &'a ProfileSurface, opts: IntegrationOptions) -> Result<ReturnMap<'a>> {
        let marks = surface
            .marks()
            .ok_or_else(|| Error::Configuration("return map requires a dumbbell".into()))?;
        let base = surface.unperturbed();
        let cap = TransitFunction::tabulate(&base, TurnKind::Cap)?;
        let region = TransitFunction::tabulate(&base, TurnKind::Region)?;
        let legs = if surface.bump().is_some() {
            Some(crate::sections::transit::RegionLegs::tabulate(surface)?)
        } else {
            None
        };
        Ok(ReturnMap {
            surface,
            d: marks.cylinder_length,
            cap,
            region,
            legs,
            opts,
            transit_time_cap: 60.0 + 6.0 * marks.l_alpha,
        })
    }

    pub fn with_tolerance(mut self, rtol: f64) -> Self {
        self.opts = self.opts.with_tolerance(rtol);
        self
    }

    /// One full return S1 -> S1.
    pub fn apply(&self, pt: &SectionPoint) -> Result<SectionPoint> {
        let marks = self.surface.marks().unwrap();
        let rho = marks.r_waist;
        let s2 = psi_cylinder(self.d, rho, pt)?;
        // Cap turn, frame-consistent: advance theta, keep phi.
        let s3 = SectionPoint {
            theta: s2.theta + self.cap.advance(s2.phi)?,
            phi: s2.phi,
            section: SectionId::S3,
        };
        let s4 = psi_cylinder(self.d, rho, &s3)?;
        let analytic = |theta: f64| -> Result<SectionPoint> {
            Ok(SectionPoint {
                theta: theta + self.region.advance(s4.phi)?,
                phi: s4.phi,
                section: SectionId::S1,
            })
        };
        let Some(bump) = self.surface.bump() else {
            return analytic(s4.theta);
        };
        let legs = self.legs.as_ref().expect("legs tabulated with bump");
        // Leg-by-leg composition: only band chords meeting the bump's
        // chart box are flow-integrated (the band is flat elsewhere and
        // everything outside it is rotationally invariant).
        let mut phi = s4.phi;
        // Descent from the boundary circle to the upper band edge.
        let mut theta = s4.theta + legs.boundary_advance(phi)?;
        // Downward band chord.
        (theta, phi) = self.band_leg(bump, legs, theta, phi, false)?;
        // Neck excursion below the band (raw winding; the smooth lift is
        // restored at the end from the sign of the entry angle).
        let neck = legs.neck_advance(phi)?;
        theta += if phi < 0.0 {
            neck - 2.0 * std::f64::consts::PI
        } else {
            neck
        };
        // Upward band chord.
        (theta, phi) = self.band_leg(bump, legs, theta, phi, true)?;
        // Ascent back to the boundary circle.
        theta += legs.boundary_advance(phi)?;
        // Smooth lift: a turn advance is pi + odd, with + 2 pi on the
        // negative-angle side.
        if s4.phi < 0.0 {
            theta += 2.0 * std::f64::consts::PI;
        }
        Ok(SectionPoint {
            theta,
            phi,
            section: SectionId::S1,
        })
    }

    /// One straight crossing of the flat band, flow-integrated exactly when
    /// it meets the bump's chart box. Takes and returns section-normalized
    /// angles (Clairaut value rho sin(phi)); theta is the unwrapped angle at
    /// the entry edge and the return value is at the exit edge.
    fn band_leg(
        &self,
        bump: &crate::surface::PerturbationBump,
        legs: &crate::sections::transit::RegionLegs,
        theta: f64,
        phi: f64,
        upward: bool,
    ) -> Result<(f64, f64)> {
        let marks = self.surface.marks().unwrap();
        let rho = marks.r_waist;
        let (l_from, l_to) = if upward {
            (marks.band_lo, marks.band_hi)
        } else {
            (marks.band_hi, marks.band_lo)
        };
        let chord = legs.band_chord_advance(phi, rho);
        if !bump.chord_hits_chart(theta, l_from, chord, l_to) {
            return Ok((theta + chord, phi));
        }
        // In-band direction angle from the Clairaut value.
        let c = rho * phi.sin();
        let sin_band = c / marks.r_band;
        let chi = if upward {
            sin_band.asin()
        } else {
            std::f64::consts::PI - sin_band.asin()
        };
        let mut run_opts = self.opts;
        run_opts.record_steps = false;
        let task = FlowTask::new(self.surface)
            .with_options(run_opts)
            .with_stop(StopRule::LatitudeCross {
                l: l_to,
                upward: Some(upward),
                after_s: 1e-9,
            });
        let v0 = GeodesicState::from_heading(theta, l_from, chi);
        let traj = task.run(&v0, 8.0 * (marks.band_hi - marks.band_lo).max(1.0), &[])?;
        if !traj.events.iter().any(|e| e.kind == EventKind::Stop) {
            return Err(Error::Escape {
                cap: self.transit_time_cap,
                theta,
                phi,
            });
        }
        let end = traj.final_state();
        let c_out = self.surface.clairaut_raw(end.l, end.heading());
        let phi_out = (c_out / rho).asin();
        Ok((end.theta, phi_out))
    }
}

/// One-shot composition of the four transits starting from S1.
pub fn compose_return(
    surface: &ProfileSurface,
    pt: &SectionPoint,
    opts: IntegrationOptions,
) -> Result<SectionPoint> {
    ReturnMap::new(surface, opts)?.apply(pt)
}
