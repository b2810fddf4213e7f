//! Event-driven integration: chart handovers, latitude crossings, Riccati
//! blow-up handling, and stop rules, with bisection-located event times.

use crate::error::{Error, Result};
use crate::flow::field::{Chart, ChartField, Passengers};
use crate::flow::ode::{DenseStep, IntegrationOptions, StepOutcome, Stepper, MAX_DIM};
use crate::flow::trajectory::{Event, EventKind, Sample, Trajectory};
use crate::flow::{GeodesicState, JacobiState, RiccatiState};
use crate::surface::bump::wrap_angle;
use crate::surface::profile::PoleEnd;
use crate::surface::ProfileSurface;
use std::f64::consts::PI;

/// Terminate integration at a located crossing.
#[derive(Debug, Clone, Copy)]
pub enum StopRule {
    /// Stop when l crosses the given latitude; `upward` restricts the real
    /// direction of motion (None accepts both). Armed after `after_s` of
    /// integrated time.
    LatitudeCross {
        l: f64,
        upward: Option<bool>,
        after_s: f64,
    },
}

/// A configured integration task over one surface.
#[derive(Clone, Copy)]
pub struct FlowTask<'a> {
    pub surface: &'a ProfileSurface,
    pub passengers: Passengers,
    pub opts: IntegrationOptions,
    pub stop: Option<StopRule>,
    pub forward: bool,
}

impl<'a> FlowTask<'a> {
    pub fn new(surface: &'a ProfileSurface) -> Self {
        FlowTask {
            surface,
            passengers: Passengers::default(),
            opts: IntegrationOptions::default(),
            stop: None,
            forward: true,
        }
    }

    pub fn with_options(mut self, opts: IntegrationOptions) -> Self {
        self.opts = opts;
        self
    }

    pub fn with_jacobi(mut self, pairs: usize) -> Self {
        self.passengers.jacobi_pairs = pairs;
        self
    }

    pub fn with_riccati(mut self) -> Self {
        self.passengers.riccati = true;
        self
    }

    pub fn with_abs_y(mut self) -> Self {
        self.passengers.abs_y_integral = true;
        self
    }

    pub fn with_stop(mut self, stop: StopRule) -> Self {
        self.stop = Some(stop);
        self
    }

    pub fn backward(mut self) -> Self {
        self.forward = false;
        self
    }

    /// Integrate from a chart state for duration `t` (arc length), with the
    /// given passenger initial values (packed: Jacobi pairs, Riccati value,
    /// abs-y accumulator).
    pub fn run(&self, v0: &GeodesicState, t: f64, passenger_init: &[f64]) -> Result<Trajectory> {
        if t <= 0.0 {
            return Err(Error::domain(format!("duration {t} must be positive")));
        }
        let mut driver = Driver::new(self, v0, passenger_init)?;
        driver.integrate(t)?;
        Ok(driver.finish())
    }

    /// Integrate a geodesic leaving a pole along the meridian at angle
    /// `theta_dir`.
    pub fn run_from_pole(
        &self,
        end: PoleEnd,
        theta_dir: f64,
        t: f64,
        passenger_init: &[f64],
    ) -> Result<Trajectory> {
        if t <= 0.0 {
            return Err(Error::domain(format!("duration {t} must be positive")));
        }
        let mut driver = Driver::new_at_pole(self, end, theta_dir, passenger_init)?;
        driver.integrate(t)?;
        Ok(driver.finish())
    }
}

/// Integrate a geodesic for time `t`; the event list records region,
/// cap, neck, flat-band, chart and pole events with interpolated data.
pub fn integrate_geodesic(
    surface: &ProfileSurface,
    v0: &GeodesicState,
    t: f64,
    opts: IntegrationOptions,
) -> Result<Trajectory> {
    FlowTask::new(surface).with_options(opts).run(v0, t, &[])
}

/// Co-integrate the normal Jacobi equation y'' + K y = 0 along the geodesic
/// of `traj`, returning (s, JacobiState) at every accepted step.
pub fn integrate_jacobi(
    surface: &ProfileSurface,
    traj: &Trajectory,
    y0: f64,
    y0_prime: f64,
    opts: IntegrationOptions,
) -> Result<Vec<(f64, JacobiState)>> {
    let start = traj.samples[0].state();
    let rerun = FlowTask::new(surface)
        .with_options(opts)
        .with_jacobi(1)
        .run(&start, traj.duration(), &[y0, y0_prime])?;
    Ok(rerun
        .samples
        .iter()
        .map(|p| {
            (
                p.s,
                JacobiState {
                    y: p.extras[0],
                    y_prime: p.extras[1],
                },
            )
        })
        .collect())
}

/// Riccati run output: wavefront curvature samples plus conjugate-point
/// passages (u blowing up through infinity, located as zeros of w = 1/u).
#[derive(Debug, Clone)]
pub struct RiccatiRun {
    pub samples: Vec<(f64, RiccatiState)>,
    pub conjugate_passages: Vec<f64>,
}

/// Co-integrate u' = -u^2 - K along the geodesic of `traj`, switching to
/// the inverted representation across blow-ups.
pub fn integrate_riccati(
    surface: &ProfileSurface,
    traj: &Trajectory,
    u0: f64,
    opts: IntegrationOptions,
) -> Result<RiccatiRun> {
    let start = traj.samples[0].state();
    let rerun = FlowTask::new(surface)
        .with_options(opts)
        .with_riccati()
        .run(&start, traj.duration(), &[u0])?;
    let samples = rerun
        .samples
        .iter()
        .map(|p| {
            (
                p.s,
                RiccatiState {
                    value: p.extras[4],
                    inverted: false,
                },
            )
        })
        .collect();
    let conjugate_passages = rerun
        .events
        .iter()
        .filter(|e| e.kind == EventKind::ConjugatePoint)
        .map(|e| e.s)
        .collect();
    Ok(RiccatiRun {
        samples,
        conjugate_passages,
    })
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum EvKind {
    Latitude {
        l: f64,
        up: Option<EventKind>,
        down: Option<EventKind>,
        stop: bool,
        stop_upward: Option<bool>,
        after_s: f64,
    },
    PoleEnter(PoleEnd),
    PoleExit,
    PoleApproach,
    BumpEnter,
    BumpExit,
    JacobiZero,
    RiccatiInvert,
    RiccatiRestore,
    ConjugatePassage,
    /// Safety net: the state left the flat band while still in the bump
    /// chart (can only happen after a missed exit at the box boundary).
    BandChartEscape,
}

impl EvKind {
    /// Whether handling this event rewrites the state (chart switches and
    /// Riccati representation flips).
    fn is_transform(&self) -> bool {
        matches!(
            self,
            EvKind::PoleEnter(_)
                | EvKind::PoleExit
                | EvKind::BumpEnter
                | EvKind::BumpExit
                | EvKind::RiccatiInvert
                | EvKind::RiccatiRestore
                | EvKind::BandChartEscape
        )
    }

    /// Required crossing direction: Some(true) fires only on rising values,
    /// Some(false) only on falling, None on both. Chart handovers are
    /// one-directional so that boundary rounding after a transition cannot
    /// refire the opposite switch.
    fn direction(&self) -> Option<bool> {
        match self {
            EvKind::PoleEnter(_) => Some(false),
            EvKind::PoleExit => Some(true),
            EvKind::BumpEnter => Some(false),
            EvKind::BumpExit => Some(true),
            EvKind::RiccatiInvert => Some(true),
            EvKind::RiccatiRestore => Some(true),
            EvKind::PoleApproach => Some(true),
            EvKind::BandChartEscape => Some(true),
            _ => None,
        }
    }
}

struct Driver<'a> {
    task: FlowTask<'a>,
    chart: Chart,
    v: [f64; MAX_DIM],
    s: f64,
    theta: f64,
    heading: f64,
    /// Clairaut value at the last chart conversion (unwrap disambiguation).
    clairaut_ref: f64,
    riccati_inverted: bool,
    samples: Vec<Sample>,
    events: Vec<Event>,
    stopped: bool,
    steps_taken: usize,
}

impl<'a> Driver<'a> {
    fn new(task: &FlowTask<'a>, v0: &GeodesicState, pinit: &[f64]) -> Result<Driver<'a>> {
        let total = task.surface.total_length();
        if v0.l < 0.0 || v0.l > total {
            return Err(Error::domain(format!("l = {} outside [0, {total}]", v0.l)));
        }
        if v0.l < 1e-12 {
            return Driver::new_at_pole(task, PoleEnd::Bottom, v0.theta, pinit);
        }
        if v0.l > total - 1e-12 {
            return Driver::new_at_pole(task, PoleEnd::Top, v0.theta, pinit);
        }
        let mut d = Driver {
            task: *task,
            chart: Chart::Main,
            v: [0.0; MAX_DIM],
            s: v0.s,
            theta: v0.theta,
            heading: v0.heading(),
            clairaut_ref: task.surface.clairaut_raw(v0.l, v0.heading()),
            riccati_inverted: false,
            samples: Vec::new(),
            events: Vec::new(),
            stopped: false,
            steps_taken: 0,
        };
        d.v[0] = v0.theta;
        d.v[1] = v0.l;
        d.v[2] = v0.heading();
        d.load_passengers(pinit, 3);
        // Hand over to the pole or bump chart if the start lies inside one.
        let enter = d.task.opts.pole_enter;
        if v0.l < enter {
            d.switch_to_pole(PoleEnd::Bottom);
        } else if v0.l > total - enter {
            d.switch_to_pole(PoleEnd::Top);
        } else if let Some(bump) = task.surface.bump() {
            if let Some((t, x)) = bump.chart_coords(task.surface, v0.theta, v0.l) {
                let (tb, xb) = bump.chart_half_widths();
                if t.abs() < 0.98 * tb && x.abs() < 0.98 * xb {
                    d.switch_to_band();
                }
            }
        }
        d.record_sample();
        Ok(d)
    }

    fn new_at_pole(
        task: &FlowTask<'a>,
        end: PoleEnd,
        theta_dir: f64,
        pinit: &[f64],
    ) -> Result<Driver<'a>> {
        let mut d = Driver {
            task: *task,
            chart: Chart::Pole(end),
            v: [0.0; MAX_DIM],
            s: 0.0,
            theta: theta_dir,
            heading: match end {
                PoleEnd::Bottom => 0.0,
                PoleEnd::Top => PI,
            },
            clairaut_ref: 0.0,
            riccati_inverted: false,
            samples: Vec::new(),
            events: Vec::new(),
            stopped: false,
            steps_taken: 0,
        };
        d.v[0] = 0.0;
        d.v[1] = 0.0;
        d.v[2] = theta_dir.cos();
        d.v[3] = theta_dir.sin();
        d.load_passengers(pinit, 4);
        d.record_sample();
        Ok(d)
    }

    fn load_passengers(&mut self, pinit: &[f64], nc: usize) {
        let p = self.task.passengers;
        let expect = p.dim();
        assert_eq!(
            pinit.len(),
            expect,
            "passenger initial values: expected {expect}, got {}",
            pinit.len()
        );
        self.v[nc..nc + expect].copy_from_slice(pinit);
        // Large Riccati seeds start in the inverted representation.
        if p.riccati {
            let idx = p.riccati_index(self.chart);
            if self.v[idx].abs() > 10.0 {
                self.v[idx] = 1.0 / self.v[idx];
                self.riccati_inverted = true;
            }
        }
    }

    fn field(&self) -> ChartField<'a> {
        ChartField {
            surface: self.task.surface,
            chart: self.chart,
            passengers: self.task.passengers,
            riccati_inverted: self.riccati_inverted,
        }
    }

    fn dir(&self) -> f64 {
        if self.task.forward {
            1.0
        } else {
            -1.0
        }
    }

    // -- event functions --------------------------------------------------

    fn active_events(&self) -> Vec<EvKind> {
        let mut evs = Vec::with_capacity(12);
        let total = self.task.surface.total_length();
        match self.chart {
            Chart::Main => {
                if let Some(m) = self.task.surface.marks() {
                    evs.push(EvKind::Latitude {
                        l: m.l_alpha,
                        up: Some(EventKind::AlphaOut),
                        down: Some(EventKind::AlphaIn),
                        stop: false,
                        stop_upward: None,
                        after_s: 0.0,
                    });
                    evs.push(EvKind::Latitude {
                        l: m.l_beta,
                        up: Some(EventKind::BetaIn),
                        down: Some(EventKind::BetaOut),
                        stop: false,
                        stop_upward: None,
                        after_s: 0.0,
                    });
                    evs.push(EvKind::Latitude {
                        l: m.l_neck,
                        up: Some(EventKind::NeckCross),
                        down: Some(EventKind::NeckCross),
                        stop: false,
                        stop_upward: None,
                        after_s: 0.0,
                    });
                    evs.push(EvKind::Latitude {
                        l: m.band_lo,
                        up: Some(EventKind::BandEnter),
                        down: Some(EventKind::BandExit),
                        stop: false,
                        stop_upward: None,
                        after_s: 0.0,
                    });
                    evs.push(EvKind::Latitude {
                        l: m.band_hi,
                        up: Some(EventKind::BandExit),
                        down: Some(EventKind::BandEnter),
                        stop: false,
                        stop_upward: None,
                        after_s: 0.0,
                    });
                }
                evs.push(EvKind::PoleEnter(PoleEnd::Bottom));
                evs.push(EvKind::PoleEnter(PoleEnd::Top));
                if self.task.surface.bump().is_some() {
                    evs.push(EvKind::BumpEnter);
                }
                if let Some(StopRule::LatitudeCross { l, upward, after_s }) = self.task.stop {
                    evs.push(EvKind::Latitude {
                        l,
                        up: None,
                        down: None,
                        stop: true,
                        stop_upward: upward,
                        after_s,
                    });
                }
                let _ = total;
            }
            Chart::Pole(_) => {
                evs.push(EvKind::PoleExit);
                evs.push(EvKind::PoleApproach);
            }
            Chart::Band => {
                evs.push(EvKind::BumpExit);
                evs.push(EvKind::BandChartEscape);
            }
        }
        let p = self.task.passengers;
        if p.jacobi_pairs >= 1 {
            evs.push(EvKind::JacobiZero);
        }
        if p.riccati {
            if self.riccati_inverted {
                evs.push(EvKind::RiccatiRestore);
                evs.push(EvKind::ConjugatePassage);
            } else {
                evs.push(EvKind::RiccatiInvert);
            }
        }
        evs
    }

    fn ev_value(&self, ev: &EvKind, v: &[f64]) -> f64 {
        let task = &self.task;
        match (ev, self.chart) {
            (EvKind::Latitude { l, .. }, Chart::Main) => v[1] - l,
            (EvKind::PoleEnter(end), Chart::Main) => match end {
                PoleEnd::Bottom => v[1] - task.opts.pole_enter,
                PoleEnd::Top => (task.surface.total_length() - v[1]) - task.opts.pole_enter,
            },
            (EvKind::PoleExit, Chart::Pole(_)) => {
                (v[0] * v[0] + v[1] * v[1]).sqrt() - task.opts.pole_exit
            }
            (EvKind::PoleApproach, Chart::Pole(_)) => v[0] * v[2] + v[1] * v[3],
            (EvKind::BumpEnter, Chart::Main) => {
                let bump = task.surface.bump().unwrap();
                let (tb, xb) = bump.chart_half_widths();
                match bump.chart_coords(task.surface, v[0], v[1]) {
                    Some((t, x)) => (t / tb).abs().max((x / xb).abs()) - 1.0,
                    None => 1.0,
                }
            }
            (EvKind::BumpExit, Chart::Band) => {
                let bump = task.surface.bump().unwrap();
                let (tb, xb) = bump.chart_half_widths();
                (v[0] / tb).abs().max((v[1] / xb).abs()) - 1.0
            }
            (EvKind::BandChartEscape, Chart::Band) => {
                let bump = task.surface.bump().unwrap();
                let marks = task.surface.marks().unwrap();
                let (_, l) = bump.surface_coords(v[0], v[1]);
                let mid = 0.5 * (marks.band_lo + marks.band_hi);
                let half = 0.5 * (marks.band_hi - marks.band_lo);
                (l - mid).abs() - 0.98 * half
            }
            (EvKind::JacobiZero, chart) => v[chart.coord_dim()],
            (EvKind::RiccatiInvert, chart) => {
                let u = v[task.passengers.riccati_index(chart)];
                u * u - 100.0
            }
            (EvKind::RiccatiRestore, chart) => {
                let w = v[task.passengers.riccati_index(chart)];
                w * w - 0.04
            }
            (EvKind::ConjugatePassage, chart) => v[task.passengers.riccati_index(chart)],
            _ => 1.0,
        }
    }

    // -- chart conversions -------------------------------------------------

    fn current_geodesic_velocity(&self) -> (f64, f64) {
        // Returns (theta_dot, l_dot) in the global chart.
        match self.chart {
            Chart::Main => {
                let r = self.task.surface.radius(self.v[1]);
                let (sc, cc) = self.v[2].sin_cos();
                (sc / r, cc)
            }
            Chart::Pole(end) => {
                let (x, y, vx, vy) = (self.v[0], self.v[1], self.v[2], self.v[3]);
                let sigma = (x * x + y * y).max(1e-300);
                let m = sigma.sqrt();
                let theta_dot = (x * vy - y * vx) / sigma;
                let m_dot = (x * vx + y * vy) / m;
                match end {
                    PoleEnd::Bottom => (theta_dot, m_dot),
                    PoleEnd::Top => (theta_dot, -m_dot),
                }
            }
            Chart::Band => {
                let bump = self.task.surface.bump().unwrap();
                bump.surface_velocity(self.v[2], self.v[3])
            }
        }
    }

    fn current_l(&self) -> f64 {
        match self.chart {
            Chart::Main => self.v[1],
            Chart::Pole(end) => {
                let m = (self.v[0] * self.v[0] + self.v[1] * self.v[1]).sqrt();
                match end {
                    PoleEnd::Bottom => m,
                    PoleEnd::Top => self.task.surface.total_length() - m,
                }
            }
            Chart::Band => {
                let bump = self.task.surface.bump().unwrap();
                bump.surface_coords(self.v[0], self.v[1]).1
            }
        }
    }

    /// Update the unwrapped theta and heading trackers from the raw chart
    /// state; `snap` disambiguates near-pi jumps (pole passages).
    fn refresh_angles(&mut self) {
        match self.chart {
            Chart::Main => {
                self.theta = self.v[0];
                self.heading = self.v[2];
            }
            Chart::Pole(end) => {
                let (x, y) = (self.v[0], self.v[1]);
                let raw_theta = y.atan2(x);
                // Exact meridians carry rounding noise in the conserved
                // value; snap those to the positive branch so the lift of a
                // straight pole passage is always +pi.
                let c = self.clairaut_ref;
                let theta_snap = if c.abs() > 1e-13 { c.signum() } else { 1.0 };
                self.theta = unwrap_towards(self.theta, raw_theta, theta_snap);
                let (theta_dot, l_dot) = self.current_geodesic_velocity();
                let r = self.task.surface.radius(self.current_l());
                let raw_heading = (r * theta_dot).atan2(l_dot);
                let heading_snap = match end {
                    PoleEnd::Bottom => -theta_snap,
                    PoleEnd::Top => theta_snap,
                };
                self.heading = unwrap_towards(self.heading, raw_heading, heading_snap);
            }
            Chart::Band => {
                let bump = self.task.surface.bump().unwrap();
                let (raw_theta, l) = bump.surface_coords(self.v[0], self.v[1]);
                self.theta = unwrap_towards(self.theta, wrap_angle(raw_theta), 0.0);
                let (theta_dot, l_dot) = bump.surface_velocity(self.v[2], self.v[3]);
                let r = self.task.surface.radius(l);
                let raw_heading = (r * theta_dot).atan2(l_dot);
                self.heading = unwrap_towards(self.heading, raw_heading, 0.0);
            }
        }
    }

    fn move_passengers(&mut self, from: Chart, to: Chart) {
        let pdim = self.task.passengers.dim();
        if pdim == 0 {
            return;
        }
        let a = from.coord_dim();
        let b = to.coord_dim();
        if a == b {
            return;
        }
        let mut buf = [0.0; MAX_DIM];
        buf[..pdim].copy_from_slice(&self.v[a..a + pdim]);
        self.v[b..b + pdim].copy_from_slice(&buf[..pdim]);
    }

    fn switch_to_pole(&mut self, end: PoleEnd) {
        debug_assert_eq!(self.chart, Chart::Main);
        let (theta, l, chi) = (self.v[0], self.v[1], self.v[2]);
        let surface = self.task.surface;
        let r = surface.radius(l);
        self.clairaut_ref = surface.clairaut_raw(l, chi);
        let m = match end {
            PoleEnd::Bottom => l,
            PoleEnd::Top => surface.total_length() - l,
        };
        let theta_dot = chi.sin() / r;
        let l_dot = chi.cos();
        let m_dot = match end {
            PoleEnd::Bottom => l_dot,
            PoleEnd::Top => -l_dot,
        };
        let (st, ct) = theta.sin_cos();
        let x = m * ct;
        let y = m * st;
        let vx = m_dot * ct - m * st * theta_dot;
        let vy = m_dot * st + m * ct * theta_dot;
        self.move_passengers(Chart::Main, Chart::Pole(end));
        self.v[0] = x;
        self.v[1] = y;
        self.v[2] = vx;
        self.v[3] = vy;
        self.chart = Chart::Pole(end);
    }

    fn switch_pole_to_main(&mut self) {
        let Chart::Pole(end) = self.chart else {
            unreachable!()
        };
        self.refresh_angles();
        let l = self.current_l();
        // Heading from the tracked unwrapped value; renormalizes speed.
        let chi = self.heading;
        self.move_passengers(Chart::Pole(end), Chart::Main);
        self.v[0] = self.theta;
        self.v[1] = l;
        self.v[2] = chi;
        self.chart = Chart::Main;
    }

    fn switch_to_band(&mut self) {
        debug_assert_eq!(self.chart, Chart::Main);
        let bump = self.task.surface.bump().unwrap();
        let (theta, l, chi) = (self.v[0], self.v[1], self.v[2]);
        let r = self.task.surface.radius(l);
        self.clairaut_ref = self.task.surface.clairaut_raw(l, chi);
        let (t, x) = bump.chart_coords_unchecked(theta, l);
        let (vt, vx) = bump.chart_velocity(chi.sin() / r, chi.cos());
        self.move_passengers(Chart::Main, Chart::Band);
        self.v[0] = t;
        self.v[1] = x;
        self.v[2] = vt;
        self.v[3] = vx;
        self.chart = Chart::Band;
    }

    fn switch_band_to_main(&mut self) {
        debug_assert_eq!(self.chart, Chart::Band);
        self.refresh_angles();
        let bump = self.task.surface.bump().unwrap();
        let (_, l) = bump.surface_coords(self.v[0], self.v[1]);
        let (theta_dot, l_dot) = bump.surface_velocity(self.v[2], self.v[3]);
        let r = self.task.surface.radius(l);
        // Renormalize to unit speed (chart transit drift is ~1e-12).
        let chi_raw = (r * theta_dot).atan2(l_dot);
        let chi = self.heading + wrap_angle(chi_raw - self.heading);
        self.move_passengers(Chart::Band, Chart::Main);
        self.v[0] = self.theta;
        self.v[1] = l;
        self.v[2] = chi;
        self.chart = Chart::Main;
    }

    // -- recording ----------------------------------------------------------

    fn passenger_extras(&self) -> [f64; 6] {
        let mut extras = [0.0; 6];
        let p = self.task.passengers;
        let nc = self.chart.coord_dim();
        for i in 0..2 * p.jacobi_pairs {
            extras[i] = self.v[nc + i];
        }
        if p.riccati {
            let raw = self.v[p.riccati_index(self.chart)];
            extras[4] = if self.riccati_inverted { 1.0 / raw } else { raw };
        }
        if p.abs_y_integral {
            extras[5] = self.v[p.abs_index(self.chart)];
        }
        extras
    }

    fn record_sample(&mut self) {
        self.refresh_angles();
        let sample = Sample {
            s: self.s,
            theta: self.theta,
            l: self.current_l(),
            heading: self.heading,
            extras: self.passenger_extras(),
        };
        self.samples.push(sample);
    }

    fn record_event(&mut self, kind: EventKind) {
        self.refresh_angles();
        let e = Event {
            kind,
            s: self.s,
            theta: self.theta,
            l: self.current_l(),
            heading: self.heading,
        };
        self.events.push(e);
    }

    // -- main loop -----------------------------------------------------------

    fn integrate(&mut self, t: f64) -> Result<()> {
        let s_start = self.s;
        let s_end = s_start + self.dir() * t;
        let mut stepper = Stepper::new(&self.task.opts);
        let field = self.field();
        stepper.init_h(&field, &self.v);
        let mut events = self.active_events();
        let mut ev_start: Vec<f64> = events.iter().map(|e| self.ev_value(e, &self.v)).collect();

        while !self.stopped && (s_end - self.s) * self.dir() > 1e-13 * (1.0 + self.s.abs()) {
            self.steps_taken += 1;
            if self.steps_taken > self.task.opts.max_steps {
                return Err(Error::Integration {
                    s: self.s,
                    detail: format!("exceeded {} steps", self.task.opts.max_steps),
                });
            }
            let field = self.field();
            let s0 = self.s;
            let mut y = self.v;
            let dense = match stepper.step(&field, s0, &mut y, s_end, self.task.forward) {
                StepOutcome::Accepted(d) => d,
                StepOutcome::Failed { s } => {
                    return Err(Error::Integration {
                        s,
                        detail: format!(
                            "step size collapse at theta={:.6}, l={:.6}",
                            self.theta,
                            self.current_l()
                        ),
                    });
                }
            };
            let s1 = dense.s1();

            // Scan for event crossings within the step (first crossing per
            // event function).
            let mut hits: Vec<(f64, usize)> = Vec::new();
            let nsub = 8;
            let mut buf = [0.0; MAX_DIM];
            for (ei, ev) in events.iter().enumerate() {
                let mut prev_s = s0;
                let mut prev_f = ev_start[ei];
                for j in 1..=nsub {
                    let sj = s0 + (s1 - s0) * j as f64 / nsub as f64;
                    dense.eval(sj, &mut buf);
                    let fj = self.ev_value(ev, &buf);
                    if prev_f == 0.0 {
                        prev_f = fj;
                        prev_s = sj;
                        continue;
                    }
                    if fj != 0.0 && (fj < 0.0) != (prev_f < 0.0) {
                        // Direction filter in integration order: chart
                        // handovers track where the integration is heading,
                        // for forward and backward runs alike.
                        let rising = fj > prev_f;
                        let wanted = ev.direction();
                        if wanted.is_none() || wanted == Some(rising) {
                            let s_cross = self.bisect_event(ev, &dense, prev_s, sj, prev_f);
                            hits.push((s_cross, ei));
                            break;
                        }
                    }
                    prev_f = fj;
                    prev_s = sj;
                }
            }

            if hits.is_empty() {
                self.s = s1;
                self.v = y;
                if self.task.opts.record_steps {
                    self.record_sample();
                } else {
                    self.refresh_angles();
                }
                for (ei, ev) in events.iter().enumerate() {
                    ev_start[ei] = self.ev_value(ev, &self.v);
                }
            } else {
                // Land exactly on the earliest crossing. Recording events
                // that fire at (numerically) the same time are all handled
                // there -- distinct functions can cross at the same
                // latitude, e.g. a stop rule on a marked circle -- but a
                // state-transforming event only runs when it is itself the
                // earliest: a transform executed a hair before its own
                // boundary would act on the wrong side, and it simply
                // refires on the next step.
                let (s_first, first_idx) = hits.iter().fold(hits[0], |acc, &(s, ei)| {
                    if (s - acc.0) * self.dir() < 0.0 {
                        (s, ei)
                    } else {
                        acc
                    }
                });
                let window = 64.0 * self.task.opts.event_time_tol * (1.0 + s_first.abs());
                dense.eval(s_first, &mut buf);
                self.s = s_first;
                self.v = buf;
                let fired: Vec<usize> = hits
                    .iter()
                    .filter(|(s, ei)| {
                        (s - s_first).abs() <= window
                            && (!events[*ei].is_transform() || *ei == first_idx)
                    })
                    .map(|(_, ei)| *ei)
                    .collect();
                for ei in fired {
                    let ev = events[ei];
                    self.handle_event(&ev)?;
                    if self.stopped {
                        break;
                    }
                }
                if self.task.opts.record_steps && !self.stopped {
                    self.record_sample();
                }
                events = self.active_events();
                ev_start = events.iter().map(|e| self.ev_value(e, &self.v)).collect();
                let field = self.field();
                stepper.init_h(&field, &self.v);
            }
        }
        Ok(())
    }

    fn bisect_event(&self, ev: &EvKind, dense: &DenseStep, a: f64, b: f64, fa: f64) -> f64 {
        let tol = self.task.opts.event_time_tol;
        let mut buf = [0.0; MAX_DIM];
        let (mut lo, mut hi, mut flo) = (a, b, fa);
        while (hi - lo).abs() > tol {
            let mid = 0.5 * (lo + hi);
            dense.eval(mid, &mut buf);
            let fm = self.ev_value(ev, &buf);
            if fm == 0.0 {
                return mid;
            }
            if (fm < 0.0) == (flo < 0.0) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        // Return the side past the crossing so the restart does not refire.
        hi
    }

    fn handle_event(&mut self, ev: &EvKind) -> Result<()> {
        match *ev {
            EvKind::Latitude {
                up,
                down,
                stop,
                stop_upward,
                after_s,
                ..
            } => {
                self.refresh_angles();
                let upward = self.heading.cos() >= 0.0;
                if stop {
                    let progressed = (self.s - self.samples[0].s) * self.dir();
                    if progressed >= after_s && (stop_upward.is_none() || stop_upward == Some(upward))
                    {
                        self.record_event(EventKind::Stop);
                        self.record_sample();
                        self.stopped = true;
                    }
                    return Ok(());
                }
                let kind = if upward { up } else { down };
                if let Some(kind) = kind {
                    self.record_event(kind);
                }
            }
            EvKind::PoleEnter(end) => {
                self.record_event(EventKind::PoleChartEnter);
                self.switch_to_pole(end);
            }
            EvKind::PoleExit => {
                self.switch_pole_to_main();
                self.record_event(EventKind::PoleChartExit);
            }
            EvKind::PoleApproach => {
                let m = (self.v[0] * self.v[0] + self.v[1] * self.v[1]).sqrt();
                if m < 0.2 * self.task.opts.pole_enter {
                    self.record_event(EventKind::PolePassage);
                }
            }
            EvKind::BumpEnter => {
                self.record_event(EventKind::BumpChartEnter);
                self.switch_to_band();
            }
            EvKind::BumpExit => {
                self.switch_band_to_main();
                self.record_event(EventKind::BumpChartExit);
            }
            EvKind::JacobiZero => {
                self.record_event(EventKind::JacobiZero);
            }
            EvKind::RiccatiInvert => {
                let idx = self.task.passengers.riccati_index(self.chart);
                self.v[idx] = 1.0 / self.v[idx];
                self.riccati_inverted = true;
                self.record_event(EventKind::RiccatiInvert);
            }
            EvKind::RiccatiRestore => {
                let idx = self.task.passengers.riccati_index(self.chart);
                self.v[idx] = 1.0 / self.v[idx];
                self.riccati_inverted = false;
                self.record_event(EventKind::RiccatiRestore);
            }
            EvKind::ConjugatePassage => {
                self.record_event(EventKind::ConjugatePoint);
            }
            EvKind::BandChartEscape => {
                self.switch_band_to_main();
                self.record_event(EventKind::BumpChartExit);
            }
        }
        Ok(())
    }

    fn finish(mut self) -> Trajectory {
        // Always include the terminal state.
        let last_s = self.samples.last().map(|p| p.s);
        if last_s != Some(self.s) {
            self.record_sample();
        }
        Trajectory {
            samples: self.samples,
            events: self.events,
            jacobi_pairs: self.task.passengers.jacobi_pairs,
            carried_riccati: self.task.passengers.riccati,
            carried_abs_y: self.task.passengers.abs_y_integral,
        }
    }
}

/// Continue `prev` by the wrapped difference to `raw`; when the jump is
/// near +-pi, `snap` (+1/-1) selects the branch, 0 keeps the wrapped value.
fn unwrap_towards(prev: f64, raw: f64, snap: f64) -> f64 {
    let mut delta = wrap_angle(raw - prev);
    if snap != 0.0 && delta.abs() > 2.6 && delta.signum() != snap {
        delta -= delta.signum() * 2.0 * PI;
    }
    prev + delta
}
