//! Construction of the dumbbell family: a two-lobed sphere of revolution
//! with a hyperbolic waist circle, an exactly flat band, a flat connecting
//! cylinder of adjustable length, and a cap whose boundary is its only
//! geodesic circle of latitude.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Poly;
use crate::surface::profile::{Piece, Profile};
use crate::surface::{Marks, ProfileSurface};

/// Geometry of the region and cap; the cylinder length `d` is the family
/// parameter. All lengths in the same unit as arc length.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DumbbellParams {
    /// Radius at the hyperbolic neck circle (r0).
    pub r_neck: f64,
    /// Radius on the flat band (r1 > r0).
    pub r_band: f64,
    /// Radius of the connecting cylinder (rho < r0).
    pub r_waist: f64,
    /// Radius of the local maximum between the bottom pole and the neck.
    pub r_hump: f64,
    /// Arc-length position of that maximum.
    pub l_hump: f64,
    /// Arc-length position of the neck (l0).
    pub l_neck: f64,
    /// Center of the flat band (l1).
    pub l_band_center: f64,
    /// Half-width of the flat band (b).
    pub band_halfwidth: f64,
    /// Position of the boundary circle of the region (l_alpha).
    pub l_alpha: f64,
    /// Cylinder length (d > 0).
    pub cylinder_length: f64,
    /// Meridian length of the cap from the cylinder end to the top pole.
    pub cap_height: f64,
    /// Second derivative of r at the hump (negative).
    pub hump_d2: f64,
    /// Second derivative of r at the neck (positive).
    pub neck_d2: f64,
}

impl Default for DumbbellParams {
    /// The reference geometry ("figure1-default").
    fn default() -> Self {
        DumbbellParams {
            r_neck: 0.92,
            r_band: 1.0,
            r_waist: 0.8,
            r_hump: 0.95,
            l_hump: 1.49,
            l_neck: 2.2,
            l_band_center: 3.3,
            band_halfwidth: 0.5,
            l_alpha: 5.0,
            cylinder_length: 10.0,
            cap_height: 1.26,
            hump_d2: -1.05,
            neck_d2: 0.5,
        }
    }
}

impl DumbbellParams {
    pub fn with_cylinder_length(mut self, d: f64) -> Self {
        self.cylinder_length = d;
        self
    }

    pub fn band_lo(&self) -> f64 {
        self.l_band_center - self.band_halfwidth
    }

    pub fn band_hi(&self) -> f64 {
        self.l_band_center + self.band_halfwidth
    }

    pub fn l_beta(&self) -> f64 {
        self.l_alpha + self.cylinder_length
    }

    pub fn total_length(&self) -> f64 {
        self.l_beta() + self.cap_height
    }

    fn check(&self) -> Result<()> {
        let fail = |inv: &str, detail: String| Err(Error::construction(inv, detail));
        if self.cylinder_length <= 0.0 {
            return fail("d > 0", format!("d = {}", self.cylinder_length));
        }
        if !(self.r_waist < self.r_neck && self.r_neck < self.r_band) {
            return fail(
                "rho < r0 < r1 (boundary circle shortest geodesic latitude)",
                format!(
                    "rho = {}, r0 = {}, r1 = {}",
                    self.r_waist, self.r_neck, self.r_band
                ),
            );
        }
        if self.r_waist >= self.r_hump {
            return fail(
                "rho < r_hump",
                format!("rho = {}, r_hump = {}", self.r_waist, self.r_hump),
            );
        }
        if self.hump_d2 >= 0.0 {
            return fail("r''(l_hump) < 0", format!("{}", self.hump_d2));
        }
        if self.neck_d2 <= 0.0 {
            return fail(
                "r''(l0) > 0 (nondegenerate hyperbolic neck)",
                format!("{}", self.neck_d2),
            );
        }
        let order = [
            0.0,
            self.l_hump,
            self.l_neck,
            self.band_lo(),
            self.band_hi(),
            self.l_alpha,
        ];
        if order.windows(2).any(|w| w[0] >= w[1]) {
            return fail("0 < l_hump < l0 < l1-b < l1+b < l_alpha", format!("{order:?}"));
        }
        if self.cap_height <= self.r_waist {
            return fail(
                "cap tall enough to close smoothly",
                format!("cap_height = {} <= rho = {}", self.cap_height, self.r_waist),
            );
        }
        Ok(())
    }

    /// Build the surface, machine-checking the profile invariants.
    pub fn build(&self) -> Result<ProfileSurface> {
        self.check()?;
        let band_lo = self.band_lo();
        let band_hi = self.band_hi();
        let l_beta = self.l_beta();
        let total = self.total_length();

        // Bottom lobe: odd polynomial in m = l through the pole, matched to
        // (r_hump, 0, hump_d2) at l_hump.
        let bottom_q = solve_odd_septic(self.l_hump, self.r_hump, 0.0, self.hump_d2)?;
        let piece_a = Piece::new(0.0, self.l_hump, bottom_q.clone());

        // Hump -> neck and neck -> band quintic Hermite pieces.
        let piece_b = hermite_piece(
            self.l_hump,
            self.l_neck,
            (self.r_hump, 0.0, self.hump_d2),
            (self.r_neck, 0.0, self.neck_d2),
        );
        let piece_c = hermite_piece(
            self.l_neck,
            band_lo,
            (self.r_neck, 0.0, self.neck_d2),
            (self.r_band, 0.0, 0.0),
        );

        // Flat band, exactly constant.
        let piece_d = Piece::new(band_lo, band_hi, Poly::new(vec![self.r_band]));

        // Band -> waist quintic smoothstep (zero first and second
        // derivatives at both ends, so the cylinder junction is C^2).
        let piece_e = hermite_piece(
            band_hi,
            self.l_alpha,
            (self.r_band, 0.0, 0.0),
            (self.r_waist, 0.0, 0.0),
        );

        // Connecting cylinder, exactly constant.
        let piece_f = Piece::new(self.l_alpha, l_beta, Poly::new(vec![self.r_waist]));

        // Cap: odd polynomial in m = total - l.
        let top_q = solve_odd_septic(self.cap_height, self.r_waist, 0.0, 0.0)?;
        let cap_poly = reflect_poly(&top_q, self.cap_height);
        let piece_g = Piece::new(l_beta, total, cap_poly);

        let pieces = vec![
            piece_a, piece_b, piece_c, piece_d, piece_e, piece_f, piece_g,
        ];
        let profile = Profile::from_pieces(pieces, bottom_q, top_q)?;

        let marks = Marks {
            l_hump: self.l_hump,
            l_neck: self.l_neck,
            r_neck: self.r_neck,
            band_lo,
            band_hi,
            l_band_center: self.l_band_center,
            r_band: self.r_band,
            l_alpha: self.l_alpha,
            l_beta,
            r_waist: self.r_waist,
            cylinder_length: self.cylinder_length,
        };
        let surface = ProfileSurface::new(profile, Some(marks), Some(self.clone()));
        surface.validate()?;
        Ok(surface)
    }
}

/// Solve r(m) = m + c3 m^3 + c5 m^5 + c7 m^7 with r(extent) = value,
/// r'(extent) = d1, r''(extent) = d2.
fn solve_odd_septic(extent: f64, value: f64, d1: f64, d2: f64) -> Result<Poly> {
    let el = extent;
    let a = [
        [el.powi(3), el.powi(5), el.powi(7)],
        [3.0 * el.powi(2), 5.0 * el.powi(4), 7.0 * el.powi(6)],
        [6.0 * el, 20.0 * el.powi(3), 42.0 * el.powi(5)],
    ];
    let b = [value - el, d1 - 1.0, d2];
    let c = solve3(a, b).ok_or_else(|| {
        Error::construction("pole piece solvable", format!("singular system, extent {el}"))
    })?;
    Ok(Poly::new(vec![0.0, 1.0, 0.0, c[0], 0.0, c[1], 0.0, c[2]]))
}

/// Quintic Hermite piece matching (value, slope, curvature) at both ends.
fn hermite_piece(start: f64, end: f64, left: (f64, f64, f64), right: (f64, f64, f64)) -> Piece {
    let w = end - start;
    let (f0, d0, s0) = left;
    let (f1, d1, s1) = right;
    let a = f1 - (f0 + d0 * w + 0.5 * s0 * w * w);
    let b = d1 - (d0 + s0 * w);
    let c = s1 - s0;
    let p = a / (w * w * w);
    let q = b / (w * w);
    let r = c / w;
    let c3 = 10.0 * p - 4.0 * q + 0.5 * r;
    let c4 = (-15.0 * p + 7.0 * q - r) / w;
    let c5 = (6.0 * p - 3.0 * q + 0.5 * r) / (w * w);
    Piece::new(
        start,
        end,
        Poly::new(vec![f0, d0, 0.5 * s0, c3, c4, c5]),
    )
}

/// r(u) = q(h - u): recenter at h, then negate odd coefficients.
fn reflect_poly(q: &Poly, h: f64) -> Poly {
    let mut shifted = q.recenter(h);
    for (k, c) in shifted.coeffs.iter_mut().enumerate() {
        if k % 2 == 1 {
            *c = -*c;
        }
    }
    shifted
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [
        [a[0][0], a[0][1], a[0][2], b[0]],
        [a[1][0], a[1][1], a[1][2], b[1]],
        [a[2][0], a[2][1], a[2][2], b[2]],
    ];
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| {
            m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap()
        })?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        for row in 0..3 {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in col..4 {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_smoothstep_recovers_classic_coefficients() {
        let p = hermite_piece(0.0, 1.0, (0.0, 0.0, 0.0), (1.0, 0.0, 0.0));
        let expect = [0.0, 0.0, 0.0, 10.0, -15.0, 6.0];
        for (c, e) in p.poly.coeffs.iter().zip(expect) {
            assert!((c - e).abs() < 1e-12);
        }
    }

    #[test]
    fn odd_septic_matches_end_conditions() {
        let q = solve_odd_septic(1.49, 0.95, 0.0, -1.05).unwrap();
        let d1 = q.derivative();
        let d2 = d1.derivative();
        assert!((q.eval(1.49) - 0.95).abs() < 1e-12);
        assert!(d1.eval(1.49).abs() < 1e-12);
        assert!((d2.eval(1.49) + 1.05).abs() < 1e-12);
        assert_eq!(q.eval(0.0), 0.0);
        assert_eq!(d1.eval(0.0), 1.0);
        assert_eq!(d2.eval(0.0), 0.0);
    }

    #[test]
    fn reflect_poly_evaluates_mirrored() {
        let q = Poly::new(vec![0.0, 1.0, 0.0, -0.2]);
        let r = reflect_poly(&q, 1.26);
        for &u in &[0.0, 0.3, 0.9, 1.26] {
            assert!((r.eval(u) - q.eval(1.26 - u)).abs() < 1e-13);
        }
    }

    #[test]
    fn default_params_build() {
        let surface = DumbbellParams::default().build().unwrap();
        let marks = surface.marks().unwrap();
        assert!((surface.radius(marks.l_band_center) - 1.0).abs() < 1e-12);
        assert!((surface.radius(marks.l_alpha + 1.0) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn region_geometry_independent_of_cylinder_length() {
        let p = DumbbellParams::default();
        let s10 = p.clone().with_cylinder_length(10.0).build().unwrap();
        let s20 = p.with_cylinder_length(20.0).build().unwrap();
        // Same region: profiles agree on [0, l_alpha].
        for i in 0..=100 {
            let l = 5.0 * i as f64 / 100.0;
            assert_eq!(s10.radius(l), s20.radius(l));
        }
        // Cap shifted by the extra 10.
        assert!((s20.total_length() - s10.total_length() - 10.0).abs() < 1e-12);
        let m = 0.4;
        assert!(
            (s20.radius(s20.total_length() - m) - s10.radius(s10.total_length() - m)).abs()
                < 1e-12
        );
    }

    #[test]
    fn invalid_params_name_the_invariant() {
        let mut p = DumbbellParams::default();
        p.cylinder_length = -1.0;
        match p.build() {
            Err(crate::Error::Construction { invariant, .. }) => {
                assert!(invariant.contains("d > 0"))
            }
            other => panic!("expected construction error, got {other:?}"),
        }
        let mut p = DumbbellParams::default();
        p.r_waist = 0.95; // >= r_neck
        assert!(p.build().is_err());
    }
}
