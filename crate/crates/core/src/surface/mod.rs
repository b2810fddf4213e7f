//! Surfaces of revolution: radius profiles, the dumbbell family, and the
//! local non-rotational metric bump.

pub mod bump;
pub mod dumbbell;
pub mod profile;

use serde::{Deserialize, Serialize};

pub use bump::{BumpChristoffel, MetricCoefficients, PerturbationBump};
pub use dumbbell::DumbbellParams;
pub use profile::{PoleEnd, Profile};

use crate::error::{Error, Result};
use crate::flow::GeodesicState;

/// Marked latitudes of a dumbbell surface.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Marks {
    pub l_hump: f64,
    /// Hyperbolic neck circle (the closed geodesic gamma_0).
    pub l_neck: f64,
    pub r_neck: f64,
    /// Flat band [l1 - b, l1 + b] with r identically r_band.
    pub band_lo: f64,
    pub band_hi: f64,
    pub l_band_center: f64,
    pub r_band: f64,
    /// Boundary circle of the region (alpha) and of the cap (beta).
    pub l_alpha: f64,
    pub l_beta: f64,
    pub r_waist: f64,
    pub cylinder_length: f64,
}

impl Marks {
    /// Direction angle of the neck-asymptotic geodesics inside the flat
    /// band: sin(phi) = r_neck / r_band.
    pub fn separatrix_angle(&self) -> f64 {
        (self.r_neck / self.r_band).asin()
    }

    /// Shear of the band frame carried along such a geodesic.
    pub fn separatrix_shear(&self) -> f64 {
        self.separatrix_angle().cos()
    }
}

/// A surface of revolution defined by a radius profile, with optional
/// marked dumbbell latitudes and an optional metric bump supported inside
/// the flat band. Immutable after construction.
#[derive(Debug, Clone)]
pub struct ProfileSurface {
    profile: Profile,
    total_length: f64,
    marks: Option<Marks>,
    bump: Option<PerturbationBump>,
    params: Option<DumbbellParams>,
}

impl ProfileSurface {
    pub(crate) fn new(
        profile: Profile,
        marks: Option<Marks>,
        params: Option<DumbbellParams>,
    ) -> Self {
        let total_length = profile.total_length();
        ProfileSurface {
            profile,
            total_length,
            marks,
            bump: None,
            params,
        }
    }

    /// The unit round sphere (r(l) = sin l).
    pub fn unit_sphere() -> Self {
        ProfileSurface::new(Profile::sphere(1.0), None, None)
    }

    pub fn sphere(radius: f64) -> Self {
        ProfileSurface::new(Profile::sphere(radius), None, None)
    }

    /// Attach a perturbation bump (validated against this surface).
    pub fn with_bump(mut self, bump: PerturbationBump) -> Result<Self> {
        bump.validate(&self)?;
        self.bump = Some(bump);
        Ok(self)
    }

    /// The same surface with any bump removed.
    pub fn unperturbed(&self) -> Self {
        let mut s = self.clone();
        s.bump = None;
        s
    }

    pub fn bump(&self) -> Option<&PerturbationBump> {
        self.bump.as_ref()
    }

    pub fn marks(&self) -> Option<&Marks> {
        self.marks.as_ref()
    }

    pub fn params(&self) -> Option<&DumbbellParams> {
        self.params.as_ref()
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    /// Profile radius r(l). Errors outside [0, R].
    pub fn profile_eval(&self, l: f64) -> Result<f64> {
        if !(0.0..=self.total_length).contains(&l) {
            return Err(Error::domain(format!(
                "arc length {l} outside [0, {}]",
                self.total_length
            )));
        }
        Ok(self.profile.radius(l))
    }

    /// r(l) without the domain check (hot path; callers stay in range).
    #[inline]
    pub fn radius(&self, l: f64) -> f64 {
        self.profile.radius(l)
    }

    #[inline]
    pub fn radius_d1(&self, l: f64) -> f64 {
        self.profile.radius_d1(l)
    }

    #[inline]
    pub fn radius_d2(&self, l: f64) -> f64 {
        self.profile.radius_d2(l)
    }

    /// Gaussian curvature of the unperturbed surface at latitude l,
    /// K = -r''/r, continuously extended through the poles.
    pub fn gaussian_curvature(&self, l: f64) -> f64 {
        self.profile.curvature(l)
    }

    /// Gaussian curvature at a point, including the bump contribution when
    /// the point lies in its support.
    pub fn curvature_at(&self, theta: f64, l: f64) -> f64 {
        if let Some(bump) = &self.bump {
            if let Some((t, x)) = bump.chart_coords(self, theta, l) {
                if bump.in_support(t, x) {
                    return bump.curvature(t, x);
                }
            }
        }
        self.gaussian_curvature(l)
    }

    /// The Clairaut integral r(l) sin(phi) of a unit tangent vector.
    /// Errors at the poles, where the chart angle is undefined.
    pub fn clairaut(&self, state: &GeodesicState) -> Result<f64> {
        let eps = 1e-12;
        if state.l < eps || state.l > self.total_length - eps {
            return Err(Error::Chart(format!(
                "clairaut undefined at a pole (l = {})",
                state.l
            )));
        }
        Ok(self.radius(state.l) * state.heading().sin())
    }

    /// Clairaut value without the pole check.
    #[inline]
    pub fn clairaut_raw(&self, l: f64, heading: f64) -> f64 {
        self.radius(l) * heading.sin()
    }

    /// Smallest radius among the geodesic circles of latitude; used as the
    /// injectivity scale for counting thresholds.
    pub fn injectivity_scale(&self) -> f64 {
        match &self.marks {
            Some(m) => m.r_waist,
            None => match &self.profile {
                Profile::Sphere { radius } => *radius,
                Profile::Piecewise { .. } => 1.0,
            },
        }
    }

    /// Machine-check the profile invariants (pole conditions, neck minimum,
    /// band and cylinder constancy, piece monotonicity).
    pub fn validate(&self) -> Result<()> {
        let fail = |inv: &str, detail: String| Err(Error::construction(inv, detail));
        let r = |l: f64| self.profile.radius(l);
        let d1 = |l: f64| self.profile.radius_d1(l);
        let total = self.total_length;

        if r(0.0) != 0.0 || r(total) != 0.0 {
            return fail("r(0) = r(R) = 0", format!("{} {}", r(0.0), r(total)));
        }
        if (d1(0.0) - 1.0).abs() > 1e-12 || (d1(total) + 1.0).abs() > 1e-12 {
            return fail(
                "r'(0) = 1, r'(R) = -1",
                format!("{} {}", d1(0.0), d1(total)),
            );
        }
        for i in 1..1000 {
            let l = total * i as f64 / 1000.0;
            if r(l) <= 0.0 {
                return fail("r > 0 on (0, R)", format!("r({l}) = {}", r(l)));
            }
        }

        if let Some(m) = &self.marks {
            if d1(m.l_neck).abs() > 1e-10 {
                return fail("r'(l0) = 0", format!("{}", d1(m.l_neck)));
            }
            if self.profile.radius_d2(m.l_neck) <= 0.0 {
                return fail(
                    "r''(l0) > 0",
                    format!("{}", self.profile.radius_d2(m.l_neck)),
                );
            }
            for i in 0..=50 {
                let l = m.band_lo + (m.band_hi - m.band_lo) * i as f64 / 50.0;
                if (r(l) - m.r_band).abs() > 1e-14 {
                    return fail("r constant on the flat band", format!("r({l}) = {}", r(l)));
                }
                let l = m.l_alpha + m.cylinder_length * i as f64 / 50.0;
                if (r(l) - m.r_waist).abs() > 1e-14 {
                    return fail("r constant on the cylinder", format!("r({l}) = {}", r(l)));
                }
            }
            // Strict monotonicity between the neck and the band.
            for i in 1..200 {
                let l = m.l_neck + (m.band_lo - m.l_neck) * i as f64 / 200.0;
                if i < 200 && d1(l) < 0.0 {
                    return fail("r strictly increasing on (l0, l1-b)", format!("r'({l}) < 0"));
                }
            }
            // Monotone segments: bottom lobe up, hump to neck down,
            // band to waist down, cap radius decreasing toward the pole.
            let segs: [(f64, f64, f64); 4] = [
                (1e-6, m.l_hump, 1.0),
                (m.l_hump, m.l_neck, -1.0),
                (m.band_hi, m.l_alpha, -1.0),
                (m.l_beta, total - 1e-6, -1.0),
            ];
            for (lo, hi, sign) in segs {
                for i in 1..400 {
                    let l = lo + (hi - lo) * i as f64 / 400.0;
                    if sign * d1(l) < -1e-9 {
                        return fail(
                            "piece monotonicity",
                            format!("segment [{lo}, {hi}]: r'({l}) = {}", d1(l)),
                        );
                    }
                }
            }
        }
        Ok(())
    }

    /// sup |K| over the region and cap (excluding the flat cylinder), plus
    /// the bump contribution; used for the Lyapunov bound constant.
    pub fn curvature_bound(&self) -> f64 {
        let mut sup: f64 = 0.0;
        let scan = |sup: &mut f64, lo: f64, hi: f64| {
            for i in 0..=2000 {
                let l = lo + (hi - lo) * i as f64 / 2000.0;
                let k = self.gaussian_curvature(l).abs();
                if k > *sup {
                    *sup = k;
                }
            }
        };
        match &self.marks {
            Some(m) => {
                scan(&mut sup, 0.0, m.l_alpha);
                scan(&mut sup, m.l_beta, self.total_length);
            }
            None => scan(&mut sup, 0.0, self.total_length),
        }
        if let Some(b) = &self.bump {
            sup = sup.max(b.curvature_sup());
        }
        sup
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI};

    fn fd_second(surface: &ProfileSurface, l: f64, h: f64) -> f64 {
        (surface.radius(l + h) - 2.0 * surface.radius(l) + surface.radius(l - h)) / (h * h)
    }

    #[test]
    fn profile_eval_examples() {
        let s = DumbbellParams::default().build().unwrap();
        let m = *s.marks().unwrap();
        // Flat band center -> r1.
        assert_eq!(s.profile_eval(m.l_band_center).unwrap(), m.r_band);
        // Pole.
        assert_eq!(s.profile_eval(0.0).unwrap(), 0.0);
        // Unit sphere equator.
        let sph = ProfileSurface::unit_sphere();
        assert!((sph.profile_eval(FRAC_PI_2).unwrap() - 1.0).abs() < 1e-15);
        // Out of range.
        assert!(s.profile_eval(-0.1).is_err());
        assert!(s.profile_eval(s.total_length() + 0.1).is_err());
    }

    #[test]
    fn profile_is_c2_at_piece_boundaries() {
        let s = DumbbellParams::default().build().unwrap();
        let h = 1e-5;
        for &l in &s.profile().piece_boundaries() {
            if l >= s.total_length() - 1e-9 {
                continue;
            }
            let left = (s.radius(l) - s.radius(l - h)) / h;
            let right = (s.radius(l + h) - s.radius(l)) / h;
            assert!(
                (left - right).abs() < 1e-4,
                "first derivative jump at {l}: {left} vs {right}"
            );
            let sl = fd_second(&s, l - 2.0 * h, h);
            let sr = fd_second(&s, l + 2.0 * h, h);
            assert!(
                (sl - s.radius_d2(l - 2.0 * h)).abs() < 1e-4,
                "second derivative off at {l}"
            );
            assert!(
                (sr - s.radius_d2(l + 2.0 * h)).abs() < 1e-4,
                "second derivative off at {l}"
            );
        }
    }

    #[test]
    fn curvature_examples() {
        let s = DumbbellParams::default().build().unwrap();
        let m = *s.marks().unwrap();
        // Flat band: K = 0.
        assert_eq!(s.gaussian_curvature(m.l_band_center), 0.0);
        assert_eq!(s.gaussian_curvature(m.band_lo + 0.01), 0.0);
        // Round sphere: K = 1 everywhere.
        let sph = ProfileSurface::unit_sphere();
        assert!((sph.gaussian_curvature(0.7) - 1.0).abs() < 1e-15);
        // Neck: K < 0, matches finite differences of the coded profile.
        // The neck sits on a piece junction (C^2 only), so the centered
        // difference is taken just inside the adjacent smooth piece.
        let k_neck = s.gaussian_curvature(m.l_neck);
        assert!(k_neck < 0.0);
        let probe = m.l_neck + 0.02;
        let fd = -fd_second(&s, probe, 1e-4) / s.radius(probe);
        assert!(
            (s.gaussian_curvature(probe) - fd).abs() < 1e-6,
            "{} vs {fd}",
            s.gaussian_curvature(probe)
        );
        // Frozen reference value for the default neck: -neck_d2 / r_neck.
        assert!((k_neck - (-0.5 / 0.92)).abs() < 1e-12);
    }

    #[test]
    fn curvature_continuous_through_poles() {
        let s = DumbbellParams::default().build().unwrap();
        // Approach the bottom pole: expansion and direct formula agree.
        for &l in &[1e-6, 1e-4, 1e-2, 0.05, 0.2] {
            let k_pole = s.profile().pole_curvature(PoleEnd::Bottom, l);
            let direct = if l > 1e-3 {
                -s.radius_d2(l) / s.radius(l)
            } else {
                k_pole
            };
            assert!(
                (k_pole - direct).abs() < 1e-9,
                "pole curvature mismatch at {l}: {k_pole} vs {direct}"
            );
        }
        let k0 = s.gaussian_curvature(0.0);
        assert!(k0.is_finite() && k0 > 0.0, "bottom pole curvature {k0}");
        let ktop = s.gaussian_curvature(s.total_length());
        assert!(ktop.is_finite() && ktop > 0.0, "top pole curvature {ktop}");
    }

    #[test]
    fn clairaut_examples() {
        use crate::flow::GeodesicState;
        let sph = ProfileSurface::unit_sphere();
        // Equator tangent: r sin(pi/2) = 1.
        let v = GeodesicState::new(0.0, FRAC_PI_2, FRAC_PI_2);
        assert!((sph.clairaut(&v).unwrap() - 1.0).abs() < 1e-15);
        // Meridian direction: 0.
        let v = GeodesicState::new(1.0, 0.8, 0.0);
        assert_eq!(sph.clairaut(&v).unwrap(), 0.0);
        // Flat band (r = 1), phi = pi/6 -> 0.5.
        let s = DumbbellParams::default().build().unwrap();
        let m = *s.marks().unwrap();
        let v = GeodesicState::new(0.0, m.l_band_center, FRAC_PI_6);
        assert!((s.clairaut(&v).unwrap() - 0.5).abs() < 1e-14);
        // Pole -> chart error.
        let v = GeodesicState::new(0.0, 0.0, 0.3);
        assert!(sph.clairaut(&v).is_err());
        let _ = PI;
    }

    #[test]
    fn validate_passes_for_default() {
        let s = DumbbellParams::default().build().unwrap();
        s.validate().unwrap();
    }

    #[test]
    fn curvature_bound_is_moderate() {
        let s = DumbbellParams::default().build().unwrap();
        let sup = s.curvature_bound();
        assert!(sup > 0.5 && sup < 4.0, "sup |K| = {sup}");
    }
}
