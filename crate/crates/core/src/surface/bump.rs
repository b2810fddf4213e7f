//! The local metric perturbation: a compactly supported bump in a sheared
//! band chart (t, x), where t runs along a fixed band-crossing geodesic and
//! x along the meridians.
//!
//! In this chart the unperturbed band metric is (1, a, 1) with a constant
//! shear a. The perturbed metric multiplies only g11:
//!
//!   g11 = 1 + alpha(t, x) x^2,   g12 = a,   g22 = 1,
//!
//! which keeps every meridian {t = const} and the axis {x = 0} geodesic, and
//! changes the Gaussian curvature on the axis to -alpha(t,0)/(1 - a^2).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surface::ProfileSurface;

/// Metric entries in the (t, x) chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricCoefficients {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
}

impl MetricCoefficients {
    pub fn det(&self) -> f64 {
        self.g11 * self.g22 - self.g12 * self.g12
    }
}

/// Christoffel symbols of the bump metric; the x-x symbols vanish
/// identically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpChristoffel {
    pub t_tt: f64,
    pub x_tt: f64,
    pub t_tx: f64,
    pub x_tx: f64,
    pub t_xx: f64,
    pub x_xx: f64,
}

/// Arc-length offset of the default anchor along the carrier geodesic,
/// measured from its band-center crossing. The carrier loop returns to the
/// band after a near-full turn and crosses its own support region; this
/// offset moves the support clear of the returning pass so the carrier
/// meets the bump exactly once.
const DEFAULT_ANCHOR_OFFSET: f64 = -0.5;

/// Compactly supported perturbation anchored on a band-crossing geodesic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationBump {
    /// Peak of the amplitude function (sign selects the curvature sign:
    /// positive amplitude makes the on-axis curvature negative).
    pub amplitude: f64,
    /// Support half-width along the carrier geodesic.
    pub half_width_t: f64,
    /// Support half-width along the meridians.
    pub half_width_x: f64,
    /// Arc-length position of the bump center along the carrier geodesic,
    /// from its band-center crossing.
    pub anchor_offset: f64,
    /// Surface coordinates of the bump center.
    pub anchor_theta: f64,
    pub anchor_l: f64,
    /// Shear a = cos(angle between the carrier and the meridians).
    pub shear: f64,
    sin_sep: f64,
    cos_sep: f64,
    r_band: f64,
    chart_margin: f64,
}

impl PerturbationBump {
    /// Anchor the bump on the geodesic whose Clairaut value equals the
    /// neck radius, crossing the band center at angle `theta0`, at the
    /// default arc-length offset along it.
    pub fn new(
        surface: &ProfileSurface,
        amplitude: f64,
        half_width_t: f64,
        half_width_x: f64,
        theta0: f64,
    ) -> Result<Self> {
        PerturbationBump::with_anchor_offset(
            surface,
            amplitude,
            half_width_t,
            half_width_x,
            theta0,
            DEFAULT_ANCHOR_OFFSET,
        )
    }

    pub fn with_anchor_offset(
        surface: &ProfileSurface,
        amplitude: f64,
        half_width_t: f64,
        half_width_x: f64,
        theta0: f64,
        anchor_offset: f64,
    ) -> Result<Self> {
        let marks = surface
            .marks()
            .ok_or_else(|| Error::Configuration("bump requires a dumbbell surface".into()))?;
        let phi = marks.separatrix_angle();
        let bump = PerturbationBump {
            amplitude,
            half_width_t,
            half_width_x,
            anchor_offset,
            anchor_theta: theta0 + anchor_offset * phi.sin() / marks.r_band,
            anchor_l: marks.l_band_center + anchor_offset * phi.cos(),
            shear: phi.cos(),
            sin_sep: phi.sin(),
            cos_sep: phi.cos(),
            r_band: marks.r_band,
            chart_margin: 1.12,
        };
        bump.validate(surface)?;
        Ok(bump)
    }

    pub fn with_amplitude(&self, amplitude: f64) -> Self {
        let mut b = self.clone();
        b.amplitude = amplitude;
        b
    }

    pub fn validate(&self, surface: &ProfileSurface) -> Result<()> {
        let marks = surface
            .marks()
            .ok_or_else(|| Error::Configuration("bump requires a dumbbell surface".into()))?;
        if self.shear.abs() >= 1.0 {
            return Err(Error::Configuration(format!(
                "shear a = {} outside (-1, 1)",
                self.shear
            )));
        }
        // Chart box must stay inside the flat band.
        let margin = self.chart_margin;
        let v_extent = margin * (self.half_width_t * self.cos_sep + self.half_width_x);
        if self.anchor_l - v_extent <= marks.band_lo || self.anchor_l + v_extent >= marks.band_hi {
            return Err(Error::Configuration(format!(
                "bump support spills out of the flat band: l in [{}, {}] vs band [{}, {}]",
                self.anchor_l - v_extent,
                self.anchor_l + v_extent,
                marks.band_lo,
                marks.band_hi
            )));
        }
        // Injectivity around the band circle.
        if margin * self.half_width_t * self.sin_sep >= std::f64::consts::PI * self.r_band {
            return Err(Error::Configuration(
                "bump support wraps around the band circle".into(),
            ));
        }
        // Positive definiteness of the perturbed metric over the support.
        let a2 = self.shear * self.shear;
        for i in 0..=40 {
            for j in 0..=40 {
                let t = self.half_width_t * (i as f64 / 20.0 - 1.0);
                let x = self.half_width_x * (j as f64 / 20.0 - 1.0);
                let det = 1.0 + self.alpha(t, x) * x * x - a2;
                if det <= 0.0 {
                    return Err(Error::Configuration(format!(
                        "perturbed metric not positive definite at (t, x) = ({t}, {x}): det = {det}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Smooth compactly supported amplitude alpha(t, x).
    pub fn alpha(&self, t: f64, x: f64) -> f64 {
        self.amplitude * window(t / self.half_width_t) * window(x / self.half_width_x)
    }

    fn alpha_partials(&self, t: f64, x: f64) -> (f64, f64, f64, f64) {
        let st = t / self.half_width_t;
        let sx = x / self.half_width_x;
        let wt = window(st);
        let wx = window(sx);
        let a = self.amplitude;
        let a_t = a * dwindow(st) * wx / self.half_width_t;
        let a_x = a * wt * dwindow(sx) / self.half_width_x;
        let a_xx = a * wt * d2window(sx) / (self.half_width_x * self.half_width_x);
        (a * wt * wx, a_t, a_x, a_xx)
    }

    pub fn in_support(&self, t: f64, x: f64) -> bool {
        t.abs() < self.half_width_t && x.abs() < self.half_width_x
    }

    /// The slightly enlarged chart box; transitions happen in the flat
    /// collar where both charts describe the identical metric.
    pub fn in_chart(&self, t: f64, x: f64) -> bool {
        t.abs() < self.half_width_t * self.chart_margin
            && x.abs() < self.half_width_x * self.chart_margin
    }

    pub fn chart_half_widths(&self) -> (f64, f64) {
        (
            self.half_width_t * self.chart_margin,
            self.half_width_x * self.chart_margin,
        )
    }

    /// Metric coefficients in the (t, x) chart (unperturbed values outside
    /// the support).
    pub fn metric(&self, t: f64, x: f64) -> MetricCoefficients {
        MetricCoefficients {
            g11: 1.0 + self.alpha(t, x) * x * x,
            g12: self.shear,
            g22: 1.0,
        }
    }

    /// Christoffel symbols of the perturbed metric.
    pub fn christoffel(&self, t: f64, x: f64) -> BumpChristoffel {
        let (alpha, a_t, a_x, _) = self.alpha_partials(t, x);
        let e_t = a_t * x * x;
        let e_x = a_x * x * x + 2.0 * alpha * x;
        let e = 1.0 + alpha * x * x;
        let a = self.shear;
        let det = e - a * a;
        BumpChristoffel {
            t_tt: (0.5 * e_t + 0.5 * a * e_x) / det,
            x_tt: (-0.5 * a * e_t - 0.5 * e * e_x) / det,
            t_tx: 0.5 * e_x / det,
            x_tx: -0.5 * a * e_x / det,
            t_xx: 0.0,
            x_xx: 0.0,
        }
    }

    /// Gaussian curvature on the carrier axis: -alpha(t, 0)/(1 - a^2).
    pub fn curvature_on_axis(&self, t: f64) -> f64 {
        -self.amplitude * window(t / self.half_width_t) / (1.0 - self.shear * self.shear)
    }

    /// Gaussian curvature anywhere in the chart, from the closed form
    /// K = (-E_xx (E - a^2)/2 + E_x^2/4) / (E - a^2)^2 for a metric
    /// (E(t,x), a, 1).
    pub fn curvature(&self, t: f64, x: f64) -> f64 {
        let (alpha, _, a_x, a_xx) = self.alpha_partials(t, x);
        let e = 1.0 + alpha * x * x;
        let e_x = a_x * x * x + 2.0 * alpha * x;
        let e_xx = a_xx * x * x + 4.0 * a_x * x + 2.0 * alpha;
        let det = e - self.shear * self.shear;
        (-0.5 * e_xx * det + 0.25 * e_x * e_x) / (det * det)
    }

    pub fn curvature_sup(&self) -> f64 {
        let mut sup: f64 = 0.0;
        for i in 0..=60 {
            for j in 0..=60 {
                let t = self.half_width_t * (i as f64 / 30.0 - 1.0);
                let x = self.half_width_x * (j as f64 / 30.0 - 1.0);
                sup = sup.max(self.curvature(t, x).abs());
            }
        }
        sup
    }

    /// Chart coordinates of a surface point, or None when the point is
    /// outside the chart box. theta is reduced around the anchor.
    pub fn chart_coords(&self, _surface: &ProfileSurface, theta: f64, l: f64) -> Option<(f64, f64)> {
        let (t, x) = self.chart_coords_unchecked(theta, l);
        if self.in_chart(t, x) {
            Some((t, x))
        } else {
            None
        }
    }

    /// Chart coordinates without the box test; the affine chart is valid on
    /// the whole flat band.
    pub fn chart_coords_unchecked(&self, theta: f64, l: f64) -> (f64, f64) {
        let du = self.r_band * wrap_angle(theta - self.anchor_theta);
        let dv = l - self.anchor_l;
        let t = du / self.sin_sep;
        let x = dv - t * self.cos_sep;
        (t, x)
    }

    /// Map chart position back to (theta, l).
    pub fn surface_coords(&self, t: f64, x: f64) -> (f64, f64) {
        let du = t * self.sin_sep;
        let dv = t * self.cos_sep + x;
        (self.anchor_theta + du / self.r_band, self.anchor_l + dv)
    }

    /// Velocity (theta_dot, l_dot) -> (t_dot, x_dot).
    pub fn chart_velocity(&self, theta_dot: f64, l_dot: f64) -> (f64, f64) {
        let u_dot = self.r_band * theta_dot;
        let t_dot = u_dot / self.sin_sep;
        let x_dot = l_dot - t_dot * self.cos_sep;
        (t_dot, x_dot)
    }

    /// Velocity (t_dot, x_dot) -> (theta_dot, l_dot).
    pub fn surface_velocity(&self, t_dot: f64, x_dot: f64) -> (f64, f64) {
        let u_dot = t_dot * self.sin_sep;
        let l_dot = t_dot * self.cos_sep + x_dot;
        (u_dot / self.r_band, l_dot)
    }

    /// Whether the straight band chord from (theta_a, l_a) to
    /// (theta_a + dtheta, l_b) meets the (slightly padded) chart box.
    /// Exact for the flat band, where geodesic chords are affine in the
    /// chart.
    pub fn chord_hits_chart(&self, theta_a: f64, l_a: f64, dtheta: f64, l_b: f64) -> bool {
        let (t0, x0) = self.chart_coords_unchecked(theta_a, l_a);
        // Preserve the chord's true angular extent across the wrap.
        let du = self.r_band * dtheta;
        let t1 = t0 + du / self.sin_sep;
        let x1 = (l_b - self.anchor_l) - t1 * self.cos_sep;
        let (tb, xb) = self.chart_half_widths();
        segment_meets_rect(t0, x0, t1, x1, tb * 1.001, xb * 1.001)
    }
}

/// Liang–Barsky clip of a segment against |t| <= tb, |x| <= xb.
fn segment_meets_rect(t0: f64, x0: f64, t1: f64, x1: f64, tb: f64, xb: f64) -> bool {
    let (dt, dx) = (t1 - t0, x1 - x0);
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for (p, q) in [
        (-dt, t0 + tb),
        (dt, tb - t0),
        (-dx, x0 + xb),
        (dx, xb - x0),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                lo = lo.max(r);
            } else {
                hi = hi.min(r);
            }
            if lo > hi {
                return false;
            }
        }
    }
    true
}

/// Compactly supported polynomial window (1 - s^2)^4 on |s| < 1.
fn window(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        return 0.0;
    }
    let w = 1.0 - s * s;
    w * w * w * w
}

fn dwindow(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        return 0.0;
    }
    let w = 1.0 - s * s;
    -8.0 * s * w * w * w
}

fn d2window(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        return 0.0;
    }
    let w = 1.0 - s * s;
    -8.0 * w * w * w + 48.0 * s * s * w * w
}

pub(crate) fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut t = theta % two_pi;
    if t > std::f64::consts::PI {
        t -= two_pi;
    } else if t <= -std::f64::consts::PI {
        t += two_pi;
    }
    t
}

/// Finite-difference Brioschi curvature of a metric field; diagnostic
/// cross-check for the closed-form curvature formulas.
pub fn brioschi_fd(metric: &dyn Fn(f64, f64) -> MetricCoefficients, t: f64, x: f64, h: f64) -> f64 {
    let g = |dt: f64, dx: f64| metric(t + dt, x + dx);
    let e = g(0.0, 0.0).g11;
    let f = g(0.0, 0.0).g12;
    let gg = g(0.0, 0.0).g22;
    let e_t = (g(h, 0.0).g11 - g(-h, 0.0).g11) / (2.0 * h);
    let e_x = (g(0.0, h).g11 - g(0.0, -h).g11) / (2.0 * h);
    let e_xx = (g(0.0, h).g11 - 2.0 * e + g(0.0, -h).g11) / (h * h);
    let f_t = (g(h, 0.0).g12 - g(-h, 0.0).g12) / (2.0 * h);
    let f_x = (g(0.0, h).g12 - g(0.0, -h).g12) / (2.0 * h);
    let f_tx = (g(h, h).g12 - g(h, -h).g12 - g(-h, h).g12 + g(-h, -h).g12) / (4.0 * h * h);
    let g_t = (g(h, 0.0).g22 - g(-h, 0.0).g22) / (2.0 * h);
    let g_x = (g(0.0, h).g22 - g(0.0, -h).g22) / (2.0 * h);
    let g_tt = (g(h, 0.0).g22 - 2.0 * gg + g(-h, 0.0).g22) / (h * h);
    let m1 = [
        [-0.5 * e_xx + f_tx - 0.5 * g_tt, 0.5 * e_t, f_t - 0.5 * e_x],
        [f_x - 0.5 * g_t, e, f],
        [0.5 * g_x, f, gg],
    ];
    let m2 = [
        [0.0, 0.5 * e_x, 0.5 * g_t],
        [0.5 * e_x, e, f],
        [0.5 * g_t, f, gg],
    ];
    let det3 = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let denom = e * gg - f * f;
    (det3(m1) - det3(m2)) / (denom * denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::DumbbellParams;

    fn reference_bump() -> (ProfileSurface, PerturbationBump) {
        let surface = DumbbellParams::default().build().unwrap();
        let bump = PerturbationBump::new(&surface, 0.05, 0.35, 0.09, 0.0).unwrap();
        (surface, bump)
    }

    #[test]
    fn metric_outside_support_is_unperturbed() {
        let (_, b) = reference_bump();
        let m = b.metric(b.half_width_t * 1.5, 0.0);
        assert_eq!(m.g11, 1.0);
        assert_eq!(m.g12, b.shear);
        assert_eq!(m.g22, 1.0);
        // x = 0 on the axis: also unperturbed entries.
        let m = b.metric(0.0, 0.0);
        assert_eq!(m.g11, 1.0);
    }

    #[test]
    fn christoffel_meridian_and_axis_conditions() {
        let (_, b) = reference_bump();
        for i in 0..20 {
            let t = b.half_width_t * (i as f64 / 10.0 - 0.95);
            let c = b.christoffel(t, 0.0);
            assert_eq!(c.t_tt, 0.0, "t_tt at ({t}, 0)");
            assert_eq!(c.x_tt, 0.0, "x_tt at ({t}, 0)");
            for j in 0..10 {
                let x = b.half_width_x * (j as f64 / 5.0 - 0.95);
                let c = b.christoffel(t, x);
                assert_eq!(c.t_xx, 0.0);
                assert_eq!(c.x_xx, 0.0);
            }
        }
    }

    #[test]
    fn zero_amplitude_means_flat() {
        let (_, b) = reference_bump();
        let b0 = b.with_amplitude(0.0);
        let c = b0.christoffel(0.1, 0.05);
        assert_eq!(
            c,
            BumpChristoffel {
                t_tt: 0.0,
                x_tt: 0.0,
                t_tx: 0.0,
                x_tx: 0.0,
                t_xx: 0.0,
                x_xx: 0.0
            }
        );
        assert_eq!(b0.curvature(0.1, 0.05), 0.0);
        assert_eq!(b0.curvature_on_axis(0.0), 0.0);
    }

    #[test]
    fn axis_curvature_formula() {
        let (_, b) = reference_bump();
        // At the anchor alpha(0,0) = amplitude.
        let expect = -b.amplitude / (1.0 - b.shear * b.shear);
        assert!((b.curvature_on_axis(0.0) - expect).abs() < 1e-15);
        // Fixed numbers: alpha = 0.1, a = 0 -> K = -0.1; alpha = 0.12,
        // a = 0.5 -> -0.16.
        assert!((-0.1f64 / (1.0 - 0.0) - (-0.1)).abs() < 1e-15);
        assert!((-0.12f64 / (1.0 - 0.25) - (-0.16)).abs() < 1e-15);
        // General-point formula agrees with the axis formula at x = 0.
        for i in 0..10 {
            let t = b.half_width_t * (i as f64 / 5.0 - 0.9);
            assert!(
                (b.curvature(t, 0.0) - b.curvature_on_axis(t)).abs() < 1e-14,
                "t = {t}"
            );
        }
    }

    #[test]
    fn curvature_matches_finite_difference_brioschi() {
        let (_, b) = reference_bump();
        let metric = |t: f64, x: f64| b.metric(t, x);
        let h = 1e-3;
        for i in 0..=8 {
            for j in 0..=8 {
                let t = b.half_width_t * (i as f64 / 4.0 - 1.0) * 0.9;
                let x = b.half_width_x * (j as f64 / 4.0 - 1.0) * 0.9;
                let exact = b.curvature(t, x);
                let fd = brioschi_fd(&metric, t, x, h);
                assert!(
                    (exact - fd).abs() < 1e-4,
                    "K mismatch at ({t}, {x}): {exact} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn chart_roundtrip() {
        let (s, b) = reference_bump();
        let (theta, l) = b.surface_coords(0.21, -0.07);
        let (t, x) = b.chart_coords(&s, theta, l).unwrap();
        assert!((t - 0.21).abs() < 1e-12 && (x + 0.07).abs() < 1e-12);
        let (td, xd) = b.chart_velocity(0.3, -0.4);
        let (thd, ld) = b.surface_velocity(td, xd);
        assert!((thd - 0.3).abs() < 1e-12 && (ld + 0.4).abs() < 1e-12);
    }

    #[test]
    fn indefinite_metric_rejected() {
        let surface = DumbbellParams::default().build().unwrap();
        // Enormous negative amplitude drives the determinant negative.
        let r = PerturbationBump::new(&surface, -2000.0, 0.35, 0.09, 0.0);
        match r {
            Err(crate::Error::Configuration(msg)) => {
                assert!(msg.contains("positive definite"), "{msg}")
            }
            other => panic!("expected configuration error, got {other:?}"),
        }
    }
}
