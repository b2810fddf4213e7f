//! Finite-time expansion exponents from Jacobi growth, and the analytic
//! bound that controls them on the oscillating invariant set.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flow::driver::FlowTask;
use crate::flow::ode::IntegrationOptions;
use crate::flow::GeodesicState;
use crate::surface::ProfileSurface;

/// Parameters of the Jacobi-energy bound: with L > 1, L^2 >= sup K^2 over
/// the region and cap, t0 the maximal sojourn there, and cylinder length d,
/// the finite-time exponent of any oscillating orbit is below
/// L^2 t0/(d eps) + eps/2 once d exceeds 2 L^2 t0 / eps^2.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LyapunovBoundParams {
    pub epsilon: f64,
    pub l_bound: f64,
    pub t0: f64,
    pub d: f64,
}

impl LyapunovBoundParams {
    pub fn new(epsilon: f64, l_bound: f64, t0: f64, d: f64) -> Self {
        assert!(epsilon > 0.0 && epsilon < 1.0, "need 0 < eps < 1");
        assert!(l_bound > 1.0, "need L > 1");
        LyapunovBoundParams {
            epsilon,
            l_bound,
            t0,
            d,
        }
    }

    /// The exponent bound L^2 t0 / (d eps) + eps / 2.
    pub fn bound(&self) -> f64 {
        self.l_bound * self.l_bound * self.t0 / (self.d * self.epsilon) + 0.5 * self.epsilon
    }

    /// The cylinder-length threshold d(eps) = 2 L^2 t0 / eps^2.
    pub fn d_threshold(&self) -> f64 {
        2.0 * self.l_bound * self.l_bound * self.t0 / (self.epsilon * self.epsilon)
    }
}

/// Finite-time exponent proxy: integrate the two basis Jacobi solutions
/// along the geodesic of v0 and return the larger of
/// (1/2T) log( y_eps(T) / y_eps(0) ),  y_eps = eps^2 y^2 + y'^2.
pub fn finite_time_exponent(
    surface: &ProfileSurface,
    v0: &GeodesicState,
    t: f64,
    epsilon: f64,
    opts: IntegrationOptions,
) -> Result<f64> {
    assert!(epsilon > 0.0 && epsilon < 1.0, "need 0 < eps < 1");
    let mut run_opts = opts;
    run_opts.record_steps = false;
    let traj = FlowTask::new(surface)
        .with_options(run_opts)
        .with_jacobi(2)
        .run(v0, t, &[1.0, 0.0, 0.0, 1.0])?;
    let last = traj.last();
    let e2 = epsilon * epsilon;
    let y_eps = |y: f64, yp: f64| e2 * y * y + yp * yp;
    let (y1, y1p) = last.jacobi(0);
    let (y2, y2p) = last.jacobi(1);
    let g1 = y_eps(y1, y1p) / e2; // y_eps(0) for (1, 0)
    let g2 = y_eps(y2, y2p); // y_eps(0) = 1 for (0, 1)
    Ok((g1.max(g2)).ln() / (2.0 * t))
}
