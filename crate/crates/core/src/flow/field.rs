//! Chart vector fields for the geodesic flow with optional Jacobi, Riccati
//! and |y|-quadrature passenger blocks.
//!
//! State layouts (passengers always follow the chart coordinates):
//!   Main: [theta, l, chi]
//!   Pole: [x, y, vx, vy]          (Cartesian normal chart at a pole)
//!   Band: [t, x, vt, vx]          (sheared bump chart)
//! Passengers: [y1, y1', y2, y2'][..jacobi*2], [u or w][..riccati],
//! [integral of |y1|][..accumulate].

use crate::flow::ode::VectorField;
use crate::surface::profile::PoleEnd;
use crate::surface::ProfileSurface;

/// Which chart the raw state currently lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    Main,
    Pole(PoleEnd),
    Band,
}

impl Chart {
    pub fn coord_dim(&self) -> usize {
        match self {
            Chart::Main => 3,
            Chart::Pole(_) | Chart::Band => 4,
        }
    }
}

/// Passenger configuration carried through every chart.
#[derive(Debug, Clone, Copy, Default)]
pub struct Passengers {
    /// Number of Jacobi pairs (0, 1 or 2).
    pub jacobi_pairs: usize,
    pub riccati: bool,
    /// Accumulate the integral of |y1| (first Jacobi amplitude).
    pub abs_y_integral: bool,
}

impl Passengers {
    pub fn dim(&self) -> usize {
        2 * self.jacobi_pairs + usize::from(self.riccati) + usize::from(self.abs_y_integral)
    }

    pub fn riccati_index(&self, chart: Chart) -> usize {
        chart.coord_dim() + 2 * self.jacobi_pairs
    }

    pub fn abs_index(&self, chart: Chart) -> usize {
        chart.coord_dim() + 2 * self.jacobi_pairs + usize::from(self.riccati)
    }
}

/// The chart field: geodesic equations plus passenger dynamics driven by
/// the Gaussian curvature along the base geodesic.
pub struct ChartField<'a> {
    pub surface: &'a ProfileSurface,
    pub chart: Chart,
    pub passengers: Passengers,
    /// Riccati state is stored inverted (w = 1/u).
    pub riccati_inverted: bool,
}

impl ChartField<'_> {
    fn curvature(&self, y: &[f64]) -> f64 {
        match self.chart {
            Chart::Main => self.surface.gaussian_curvature(y[1]),
            Chart::Pole(end) => {
                let m = (y[0] * y[0] + y[1] * y[1]).sqrt();
                self.surface.profile().pole_curvature(end, m)
            }
            Chart::Band => {
                let bump = self.surface.bump().expect("band chart requires a bump");
                bump.curvature(y[0], y[1])
            }
        }
    }
}

impl VectorField for ChartField<'_> {
    fn dim(&self) -> usize {
        self.chart.coord_dim() + self.passengers.dim()
    }

    fn eval(&self, y: &[f64], dy: &mut [f64]) {
        let nc = self.chart.coord_dim();
        match self.chart {
            Chart::Main => {
                let (l, chi) = (y[1], y[2]);
                let r = self.surface.radius(l);
                let r1 = self.surface.radius_d1(l);
                let (sin_chi, cos_chi) = chi.sin_cos();
                if sin_chi == 0.0 {
                    // Exact meridian: theta and chi frozen.
                    dy[0] = 0.0;
                    dy[1] = cos_chi;
                    dy[2] = 0.0;
                } else {
                    dy[0] = sin_chi / r;
                    dy[1] = cos_chi;
                    dy[2] = -(r1 / r) * sin_chi;
                }
            }
            Chart::Pole(end) => {
                let (x, yy, vx, vy) = (y[0], y[1], y[2], y[3]);
                let sigma = x * x + yy * yy;
                let (w, dw) = self.surface.profile().pole_w(end, sigma);
                // Metric g = I + w * (y dx - x dy)-squared block:
                // gxx = 1 + w y^2, gxy = -w x y, gyy = 1 + w x^2.
                let wx = 2.0 * x * dw;
                let wy = 2.0 * yy * dw;
                let gxx = 1.0 + w * yy * yy;
                let gxy = -w * x * yy;
                let gyy = 1.0 + w * x * x;
                let dx_gxx = wx * yy * yy;
                let dy_gxx = wy * yy * yy + 2.0 * w * yy;
                let dx_gxy = -(wx * x * yy + w * yy);
                let dy_gxy = -(wy * x * yy + w * x);
                let dx_gyy = wx * x * x + 2.0 * w * x;
                let dy_gyy = wy * x * x;
                let det = gxx * gyy - gxy * gxy;
                let ixx = gyy / det;
                let ixy = -gxy / det;
                let iyy = gxx / det;
                // Lower Christoffel symbols Gamma_{ij,k}.
                let g_xx_x = 0.5 * dx_gxx;
                let g_xx_y = dx_gxy - 0.5 * dy_gxx;
                let g_xy_x = 0.5 * dy_gxx;
                let g_xy_y = 0.5 * dx_gyy;
                let g_yy_x = dy_gxy - 0.5 * dx_gyy;
                let g_yy_y = 0.5 * dy_gyy;
                let cxxx = ixx * g_xx_x + ixy * g_xx_y;
                let cyxx = ixy * g_xx_x + iyy * g_xx_y;
                let cxxy = ixx * g_xy_x + ixy * g_xy_y;
                let cyxy = ixy * g_xy_x + iyy * g_xy_y;
                let cxyy = ixx * g_yy_x + ixy * g_yy_y;
                let cyyy = ixy * g_yy_x + iyy * g_yy_y;
                dy[0] = vx;
                dy[1] = vy;
                dy[2] = -(cxxx * vx * vx + 2.0 * cxxy * vx * vy + cxyy * vy * vy);
                dy[3] = -(cyxx * vx * vx + 2.0 * cyxy * vx * vy + cyyy * vy * vy);
            }
            Chart::Band => {
                let bump = self.surface.bump().expect("band chart requires a bump");
                let (t, x, vt, vx) = (y[0], y[1], y[2], y[3]);
                let c = bump.christoffel(t, x);
                dy[0] = vt;
                dy[1] = vx;
                dy[2] = -(c.t_tt * vt * vt + 2.0 * c.t_tx * vt * vx);
                dy[3] = -(c.x_tt * vt * vt + 2.0 * c.x_tx * vt * vx);
            }
        }

        let p = self.passengers;
        if p.dim() == 0 {
            return;
        }
        let k = self.curvature(y);
        let mut idx = nc;
        for _ in 0..p.jacobi_pairs {
            dy[idx] = y[idx + 1];
            dy[idx + 1] = -k * y[idx];
            idx += 2;
        }
        if p.riccati {
            let v = y[idx];
            // u' = -u^2 - K; in the inverted chart w = 1/u: w' = 1 + K w^2.
            dy[idx] = if self.riccati_inverted {
                1.0 + k * v * v
            } else {
                -v * v - k
            };
            idx += 1;
        }
        if p.abs_y_integral {
            dy[idx] = y[nc].abs();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::ode::{IntegrationOptions, StepOutcome, Stepper, MAX_DIM};

    /// Integrate the raw main-chart field on the unit sphere without the
    /// driver, as a field-level sanity check.
    #[test]
    fn equator_is_a_fixed_latitude_of_the_field() {
        let s = ProfileSurface::unit_sphere();
        let field = ChartField {
            surface: &s,
            chart: Chart::Main,
            passengers: Passengers::default(),
            riccati_inverted: false,
        };
        let mut y = [0.0; MAX_DIM];
        y[0] = 0.0;
        y[1] = std::f64::consts::FRAC_PI_2;
        y[2] = std::f64::consts::FRAC_PI_2; // tangent to the equator
        let opts = IntegrationOptions::default();
        let mut st = Stepper::new(&opts);
        st.init_h(&field, &y);
        let mut t = 0.0;
        while t < 1.0 {
            match st.step(&field, t, &mut y, 1.0, true) {
                StepOutcome::Accepted(d) => t = d.s1(),
                StepOutcome::Failed { .. } => panic!(),
            }
        }
        assert!((y[1] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!((y[0] - 1.0).abs() < 1e-10, "theta should advance at unit rate");
    }

    #[test]
    fn pole_chart_field_is_straight_on_flat_caps() {
        // Sphere pole chart: radial lines stay radial.
        let s = ProfileSurface::unit_sphere();
        let field = ChartField {
            surface: &s,
            chart: Chart::Pole(PoleEnd::Bottom),
            passengers: Passengers::default(),
            riccati_inverted: false,
        };
        let mut y = [0.0; MAX_DIM];
        y[0] = 0.005;
        y[1] = 0.0;
        y[2] = 1.0;
        y[3] = 0.0;
        let mut dy = [0.0; MAX_DIM];
        field.eval(&y, &mut dy);
        assert!(dy[2].abs() < 1e-12 && dy[3].abs() < 1e-12, "radial geodesic accelerates");
    }
}
