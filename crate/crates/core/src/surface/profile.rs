//! Radius profiles r(l) for surfaces of revolution, parametrized by arc
//! length along the meridian.
//!
//! Piecewise profiles keep every piece as a polynomial in a local variable.
//! Pieces that touch a pole are stored odd in the pole distance m, so that
//! the polar-chart metric function w = (r^2 - m^2)/m^4 and the deflated
//! curvature ratio r''/r are available as exact polynomial data with no
//! cancellation near the pole.

use crate::error::{Error, Result};
use crate::numeric::Poly;
use serde::{Deserialize, Serialize};

/// Which pole of the surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoleEnd {
    /// l = 0.
    Bottom,
    /// l = R.
    Top,
}

/// Pole-adjacent expansion data, all in the pole distance m.
#[derive(Debug, Clone)]
pub struct PoleData {
    /// r as a function of m (r = m + c3 m^3 + ...).
    pub q: Poly,
    pub q_d1: Poly,
    pub q_d2: Poly,
    /// w(sigma) = (r^2 - m^2)/m^4 with sigma = m^2.
    pub w_sigma: Poly,
    /// dw/dsigma.
    pub dw_dsigma: Poly,
    /// r/m as a polynomial in m.
    pub r_over_m: Poly,
    /// (d^2 r/dm^2)/m as a polynomial in m.
    pub d2_over_m: Poly,
    /// Extent of validity in m.
    pub extent: f64,
}

impl PoleData {
    fn from_odd_poly(q: Poly, extent: f64) -> Self {
        let m_sq = Poly::new(vec![0.0, 0.0, 1.0]);
        let p = q.mul(&q).sub(&m_sq); // r^2 - m^2, starts at m^4
        let p4 = p.shift_down(4, 1e-9);
        // q is odd, so p4 contains only even powers: rewrite in sigma = m^2.
        let mut w_coeffs = Vec::new();
        for (k, &c) in p4.coeffs.iter().enumerate() {
            if k % 2 == 0 {
                w_coeffs.push(c);
            } else {
                debug_assert!(c.abs() < 1e-9, "odd coefficient {c} in w");
            }
        }
        let w_sigma = Poly::new(w_coeffs);
        let dw_dsigma = w_sigma.derivative();
        let r_over_m = q.shift_down(1, 0.0);
        let q_d1 = q.derivative();
        let q_d2 = q_d1.derivative();
        let d2_over_m = q_d2.shift_down(1, 1e-9);
        PoleData {
            q,
            q_d1,
            q_d2,
            w_sigma,
            dw_dsigma,
            r_over_m,
            d2_over_m,
            extent,
        }
    }

    /// Polar-chart metric weight and its sigma-derivative at sigma = m^2.
    pub fn w(&self, sigma: f64) -> (f64, f64) {
        (self.w_sigma.eval(sigma), self.dw_dsigma.eval(sigma))
    }

    /// Gaussian curvature at pole distance m (valid through m = 0).
    pub fn curvature(&self, m: f64) -> f64 {
        -self.d2_over_m.eval(m) / self.r_over_m.eval(m)
    }
}

/// One polynomial piece of a profile, in u = l - start.
#[derive(Debug, Clone)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub poly: Poly,
    d1: Poly,
    d2: Poly,
}

impl Piece {
    pub fn new(start: f64, end: f64, poly: Poly) -> Self {
        let d1 = poly.derivative();
        let d2 = d1.derivative();
        Piece {
            start,
            end,
            poly,
            d1,
            d2,
        }
    }
}

/// A radius profile on [0, R].
#[derive(Debug, Clone)]
pub enum Profile {
    /// Round sphere of the given radius: r(l) = a sin(l/a), R = pi a.
    Sphere { radius: f64 },
    /// C^2 piecewise polynomial profile.
    Piecewise {
        pieces: Vec<Piece>,
        bottom: PoleData,
        top: PoleData,
    },
}

impl Profile {
    pub fn sphere(radius: f64) -> Profile {
        Profile::Sphere { radius }
    }

    /// Build a piecewise profile; the first and last pieces must be odd
    /// polynomials in the pole distance (pole ends supplied in m-form).
    pub fn from_pieces(pieces: Vec<Piece>, bottom_q: Poly, top_q: Poly) -> Result<Profile> {
        if pieces.is_empty() {
            return Err(Error::construction("profile", "no pieces"));
        }
        let first = &pieces[0];
        let last = &pieces[pieces.len() - 1];
        let bottom = PoleData::from_odd_poly(bottom_q, first.end - first.start);
        let top = PoleData::from_odd_poly(top_q, last.end - last.start);
        Ok(Profile::Piecewise {
            pieces,
            bottom,
            top,
        })
    }

    pub fn total_length(&self) -> f64 {
        match self {
            Profile::Sphere { radius } => std::f64::consts::PI * radius,
            Profile::Piecewise { pieces, .. } => pieces.last().unwrap().end,
        }
    }

    fn piece_at(&self, l: f64) -> &Piece {
        match self {
            Profile::Sphere { .. } => unreachable!("sphere has no pieces"),
            Profile::Piecewise { pieces, .. } => {
                let idx = pieces.partition_point(|p| p.end < l);
                &pieces[idx.min(pieces.len() - 1)]
            }
        }
    }

    pub fn radius(&self, l: f64) -> f64 {
        match self {
            Profile::Sphere { radius } => radius * (l / radius).sin(),
            Profile::Piecewise {
                pieces,
                bottom,
                top,
            } => {
                // Pole pieces evaluate in the pole variable, which is exact
                // at the poles themselves.
                if l <= bottom.extent {
                    return bottom.q.eval(l);
                }
                let m = pieces.last().unwrap().end - l;
                if m <= top.extent {
                    return top.q.eval(m);
                }
                let p = self.piece_at(l);
                p.poly.eval(l - p.start)
            }
        }
    }

    pub fn radius_d1(&self, l: f64) -> f64 {
        match self {
            Profile::Sphere { radius } => (l / radius).cos(),
            Profile::Piecewise {
                pieces,
                bottom,
                top,
            } => {
                if l <= bottom.extent {
                    return bottom.q_d1.eval(l);
                }
                let m = pieces.last().unwrap().end - l;
                if m <= top.extent {
                    return -top.q_d1.eval(m);
                }
                let p = self.piece_at(l);
                p.d1.eval(l - p.start)
            }
        }
    }

    pub fn radius_d2(&self, l: f64) -> f64 {
        match self {
            Profile::Sphere { radius } => -(l / radius).sin() / radius,
            Profile::Piecewise {
                pieces,
                bottom,
                top,
            } => {
                if l <= bottom.extent {
                    return bottom.q_d2.eval(l);
                }
                let m = pieces.last().unwrap().end - l;
                if m <= top.extent {
                    return top.q_d2.eval(m);
                }
                let p = self.piece_at(l);
                p.d2.eval(l - p.start)
            }
        }
    }

    /// Gaussian curvature K = -r''/r, continuously extended through poles.
    pub fn curvature(&self, l: f64) -> f64 {
        match self {
            Profile::Sphere { radius } => 1.0 / (radius * radius),
            Profile::Piecewise {
                pieces,
                bottom,
                top,
            } => {
                let total = pieces.last().unwrap().end;
                if l <= bottom.extent {
                    return bottom.curvature(l);
                }
                let m_top = total - l;
                if m_top <= top.extent {
                    return top.curvature(m_top);
                }
                -self.radius_d2(l) / self.radius(l)
            }
        }
    }

    /// Polar-chart weight w = (r^2 - m^2)/m^4 and dw/d(sigma) at pole
    /// distance m, sigma = m^2.
    pub fn pole_w(&self, end: PoleEnd, sigma: f64) -> (f64, f64) {
        match self {
            Profile::Sphere { radius } => sphere_w(*radius, sigma),
            Profile::Piecewise { bottom, top, .. } => match end {
                PoleEnd::Bottom => bottom.w(sigma),
                PoleEnd::Top => top.w(sigma),
            },
        }
    }

    /// Curvature as a function of pole distance m.
    pub fn pole_curvature(&self, end: PoleEnd, m: f64) -> f64 {
        match self {
            Profile::Sphere { radius } => 1.0 / (radius * radius),
            Profile::Piecewise { bottom, top, .. } => match end {
                PoleEnd::Bottom => bottom.curvature(m),
                PoleEnd::Top => top.curvature(m),
            },
        }
    }

    /// Pole-distance extent over which the pole expansion is valid.
    pub fn pole_extent(&self, end: PoleEnd) -> f64 {
        match self {
            Profile::Sphere { radius } => 0.5 * radius,
            Profile::Piecewise { bottom, top, .. } => match end {
                PoleEnd::Bottom => bottom.extent,
                PoleEnd::Top => top.extent,
            },
        }
    }

    pub fn piece_boundaries(&self) -> Vec<f64> {
        match self {
            Profile::Sphere { .. } => Vec::new(),
            Profile::Piecewise { pieces, .. } => pieces.iter().map(|p| p.end).collect(),
        }
    }
}

/// w(sigma) for the sphere r = a sin(m/a): (a^2 sin^2(m/a) - m^2)/m^4.
///
/// Uses the sin^2 series for small m to avoid cancellation; direct formula
/// otherwise.
fn sphere_w(a: f64, sigma: f64) -> (f64, f64) {
    let a2 = a * a;
    if sigma < 0.01 * a2 {
        // a^2 sin^2(m/a) = m^2 - m^4/(3a^2) + 2m^6/(45a^4) - m^8/(315 a^6) + ...
        let s = sigma / a2;
        let w = (-1.0 / 3.0 + s * (2.0 / 45.0 + s * (-1.0 / 315.0 + s * (2.0 / 14175.0)))) / a2;
        let dw = (2.0 / 45.0 + s * (-2.0 / 315.0 + s * (6.0 / 14175.0))) / (a2 * a2);
        (w, dw)
    } else {
        let m = sigma.sqrt();
        let r = a * (m / a).sin();
        let w = (r * r - sigma) / (sigma * sigma);
        // dw/dsigma = d/dsigma [(r^2 - sigma)/sigma^2]
        // dr^2/dsigma = 2 r r' * dm/dsigma = r r' / m, r' = cos(m/a)
        let dr2 = r * (m / a).cos() / m;
        let dw = (dr2 - 1.0) / (sigma * sigma) - 2.0 * (r * r - sigma) / (sigma * sigma * sigma);
        (w, dw)
    }
}
