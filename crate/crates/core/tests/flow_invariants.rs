//! Flow-level invariants: conservation, reversibility, linearized
//! consistency, and event bookkeeping on the reference surfaces.

use geodlab_core::flow::{
    integrate_geodesic, integrate_jacobi, integrate_riccati, EventKind, FlowTask,
    GeodesicState, IntegrationOptions,
};
use geodlab_core::surface::{DumbbellParams, ProfileSurface};
use std::f64::consts::{FRAC_PI_2, PI};

fn opts() -> IntegrationOptions {
    IntegrationOptions::default()
}

fn wrap(x: f64) -> f64 {
    let mut v = x % (2.0 * PI);
    if v > PI {
        v -= 2.0 * PI;
    } else if v < -PI {
        v += 2.0 * PI;
    }
    v
}

#[test]
fn sphere_equator_closes_after_full_period() {
    let s = ProfileSurface::unit_sphere();
    let v0 = GeodesicState::new(0.0, FRAC_PI_2, FRAC_PI_2);
    let traj = integrate_geodesic(&s, &v0, 2.0 * PI, opts()).unwrap();
    let end = traj.final_state();
    assert!((end.l - FRAC_PI_2).abs() < 1e-8, "l drift {}", end.l);
    assert!(wrap(end.theta).abs() < 1e-8, "theta = {}", end.theta);
    assert!((end.phi - FRAC_PI_2).abs() < 1e-8);
}

#[test]
fn meridians_stay_meridians() {
    // Short meridian arc on the dumbbell: theta and phi frozen.
    let s = DumbbellParams::default().build().unwrap();
    let v0 = GeodesicState::new(1.2, 1.0, 0.0);
    let traj = integrate_geodesic(&s, &v0, 3.0, opts()).unwrap();
    for p in &traj.samples {
        assert!((p.theta - 1.2).abs() < 1e-10, "theta drift {}", p.theta);
        assert!(p.heading.abs() < 1e-10, "heading drift {}", p.heading);
    }
    assert!((traj.final_state().l - 4.0).abs() < 1e-8);
}

#[test]
fn meridian_closes_through_both_poles() {
    // A full meridian loop has length 2R and passes both poles.
    let s = DumbbellParams::default().build().unwrap();
    let total = s.total_length();
    let v0 = GeodesicState::new(0.7, 2.5, 0.0);
    let traj = integrate_geodesic(&s, &v0, 2.0 * total, opts()).unwrap();
    let end = traj.final_state();
    assert!((end.l - 2.5).abs() < 1e-6, "l = {}", end.l);
    // Through two poles: theta comes back around (unwrapped shift 2 pi).
    assert!(
        wrap(end.theta - 0.7).abs() < 1e-6,
        "theta = {} vs 0.7",
        end.theta
    );
    assert!(end.upward, "direction restored");
    assert!(end.phi.abs() < 1e-6);
    let pole_visits = traj
        .events
        .iter()
        .filter(|e| e.kind == EventKind::PoleChartEnter)
        .count();
    assert_eq!(pole_visits, 2, "expected two pole-cap passages");
}

#[test]
fn clairaut_conserved_to_1e8_over_t100() {
    let dumbbell = DumbbellParams::default().build().unwrap();
    let sphere = ProfileSurface::unit_sphere();
    let cases: Vec<(&ProfileSurface, GeodesicState)> = vec![
        (&sphere, GeodesicState::new(0.0, 1.0, 0.4)),
        (&sphere, GeodesicState::new(2.0, 2.3, -1.2)),
        // Near-meridian on the sphere: crosses the pole caps repeatedly.
        (&sphere, GeodesicState::new(0.5, 1.5, 0.004)),
        (&dumbbell, GeodesicState::new(0.0, 6.0, 0.9)),
        (&dumbbell, GeodesicState::new(1.0, 3.3, -0.5)),
        (&dumbbell, GeodesicState::new(0.3, 8.0, 0.02)),
    ];
    for (surface, v0) in cases {
        let traj = integrate_geodesic(surface, &v0, 100.0, opts()).unwrap();
        let drift = traj.clairaut_drift(surface);
        assert!(
            drift <= 1e-8,
            "clairaut drift {drift} from start {v0:?}"
        );
    }
}

#[test]
fn time_reversal_returns_within_1e6() {
    let s = DumbbellParams::default().build().unwrap();
    for v0 in [
        GeodesicState::new(0.0, 4.0, 0.7),
        GeodesicState::new(1.0, 7.5, -0.3),
        GeodesicState::new(2.0, 2.0, 0.05),
    ] {
        let t = 40.0;
        let fwd = integrate_geodesic(&s, &v0, t, opts()).unwrap();
        let back_start = fwd.final_state().flip().with_time(0.0);
        let back = integrate_geodesic(&s, &back_start, t, opts()).unwrap();
        let end = back.final_state();
        let expect = v0.flip();
        assert!(
            wrap(end.theta - expect.theta).abs() < 1e-6,
            "theta {} vs {}",
            end.theta,
            expect.theta
        );
        assert!((end.l - expect.l).abs() < 1e-6);
        assert!(
            wrap(end.heading() - expect.heading()).abs() < 1e-6,
            "heading {} vs {}",
            end.heading(),
            expect.heading()
        );
    }
}

#[test]
fn jacobi_on_flat_band_grows_linearly() {
    let s = DumbbellParams::default().build().unwrap();
    let m = s.marks().unwrap();
    // Circle of latitude inside the flat band is a geodesic with K = 0.
    let v0 = GeodesicState::new(0.0, m.l_band_center, FRAC_PI_2);
    let traj = integrate_geodesic(&s, &v0, 0.9, opts()).unwrap();
    let jac = integrate_jacobi(&s, &traj, 0.0, 1.0, opts()).unwrap();
    for (t, j) in &jac {
        assert!((j.y - t).abs() < 1e-10, "y({t}) = {}", j.y);
        assert!((j.y_prime - 1.0).abs() < 1e-10);
    }
}

#[test]
fn jacobi_on_sphere_is_sine() {
    let s = ProfileSurface::unit_sphere();
    let v0 = GeodesicState::new(0.0, FRAC_PI_2, 0.9);
    let traj = integrate_geodesic(&s, &v0, 10.0, opts()).unwrap();
    let jac = integrate_jacobi(&s, &traj, 0.0, 1.0, opts()).unwrap();
    for (t, j) in &jac {
        assert!((j.y - t.sin()).abs() < 1e-9, "y({t}) = {} vs {}", j.y, t.sin());
    }
}

#[test]
fn wronskian_constant_to_1e9() {
    let s = DumbbellParams::default().build().unwrap();
    let v0 = GeodesicState::new(0.4, 4.4, 0.55);
    let run = FlowTask::new(&s)
        .with_jacobi(2)
        .run(&v0, 10.0, &[1.0, 0.0, 0.0, 1.0])
        .unwrap();
    for p in &run.samples {
        let (y1, y1p) = p.jacobi(0);
        let (y2, y2p) = p.jacobi(1);
        let w = y1 * y2p - y2 * y1p;
        assert!((w - 1.0).abs() < 1e-9, "wronskian {w} at s = {}", p.s);
    }
}

#[test]
fn riccati_flat_band_closed_form() {
    let s = DumbbellParams::default().build().unwrap();
    let m = s.marks().unwrap();
    let v0 = GeodesicState::new(0.0, m.l_band_center, FRAC_PI_2);
    let traj = integrate_geodesic(&s, &v0, 0.9, opts()).unwrap();
    let run = integrate_riccati(&s, &traj, 1.0, opts()).unwrap();
    for (t, u) in &run.samples {
        let expect = 1.0 / (1.0 + t);
        assert!(
            (u.curvature() - expect).abs() < 1e-9,
            "u({t}) = {} vs {expect}",
            u.curvature()
        );
    }
    assert!(run.conjugate_passages.is_empty());
}

#[test]
fn riccati_sphere_blows_up_at_quarter_period() {
    let s = ProfileSurface::unit_sphere();
    let v0 = GeodesicState::new(0.0, FRAC_PI_2, FRAC_PI_2);
    let traj = integrate_geodesic(&s, &v0, 3.0, opts()).unwrap();
    let run = integrate_riccati(&s, &traj, 0.0, opts()).unwrap();
    // u(t) = -tan t, conjugate passage at pi/2.
    for (t, u) in &run.samples {
        if *t < 1.2 {
            assert!(
                (u.curvature() + t.tan()).abs() < 1e-7,
                "u({t}) = {} vs {}",
                u.curvature(),
                -t.tan()
            );
        }
    }
    assert_eq!(run.conjugate_passages.len(), 1);
    assert!(
        (run.conjugate_passages[0] - FRAC_PI_2).abs() < 1e-9,
        "conjugate at {}",
        run.conjugate_passages[0]
    );
}

#[test]
fn riccati_converges_to_neck_fixed_point() {
    let s = DumbbellParams::default().build().unwrap();
    let m = s.marks().unwrap();
    // Along the neck circle K = K(l0) < 0; u' = -u^2 - K has the attracting
    // fixed point +sqrt(-K).
    let k_neck = s.gaussian_curvature(m.l_neck);
    assert!(k_neck < 0.0);
    let target = (-k_neck).sqrt();
    // The neck circle is hyperbolic, so round-off leaves it like e^(mu t);
    // the window is chosen so both the seed transient and that drift are
    // below the tolerance.
    let v0 = GeodesicState::new(0.0, m.l_neck, FRAC_PI_2);
    let traj = integrate_geodesic(&s, &v0, 15.0, opts()).unwrap();
    let run = integrate_riccati(&s, &traj, 0.3 * target, opts()).unwrap();
    let (_, last) = run.samples.last().unwrap();
    assert!(
        (last.curvature() - target).abs() < 1e-8,
        "u(end) = {} vs {target}",
        last.curvature()
    );
}

#[test]
fn jacobi_matches_finite_difference_of_flow() {
    // Perturb the initial direction by h and compare the flow difference
    // against the Jacobi field with y(0) = 0, y'(0) = 1.
    let s = DumbbellParams::default().build().unwrap();
    let v0 = GeodesicState::new(0.0, 4.2, 0.35);
    let t = 10.0;
    let h = 1e-6;
    let base = FlowTask::new(&s)
        .with_jacobi(1)
        .run(&v0, t, &[0.0, 1.0])
        .unwrap();
    let plus = integrate_geodesic(
        &s,
        &GeodesicState::new(0.0, 4.2, 0.35 + h),
        t,
        opts(),
    )
    .unwrap();
    let minus = integrate_geodesic(
        &s,
        &GeodesicState::new(0.0, 4.2, 0.35 - h),
        t,
        opts(),
    )
    .unwrap();
    let pe = plus.final_state();
    let me = minus.final_state();
    let be = base.final_state();
    // Normal displacement: the variation of (theta, l) projected on the
    // unit normal (cos chi * r dtheta - sin chi * dl ... with the normal
    // N = (cos chi / r) d_theta - sin chi d_l).
    let r = s.radius(be.l);
    let dtheta = (pe.theta - me.theta) / (2.0 * h);
    let dl = (pe.l - me.l) / (2.0 * h);
    let chi = be.heading();
    let y_fd = chi.cos() * r * dtheta - chi.sin() * dl;
    let (y, _) = base.last().jacobi(0);
    assert!(
        (y_fd - y).abs() <= 1e-4 * (1.0 + y.abs()),
        "flow derivative {y_fd} vs jacobi {y}"
    );
}

#[test]
fn riccati_equals_jacobi_log_derivative() {
    // Carry a Jacobi pair and the Riccati value in one run: where y is away
    // from zero, u must equal y'/y.
    let s = DumbbellParams::default().build().unwrap();
    let v0 = GeodesicState::new(0.2, 4.3, 0.5);
    let u0 = 0.8;
    let run = FlowTask::new(&s)
        .with_jacobi(1)
        .with_riccati()
        .run(&v0, 8.0, &[1.0, u0, u0])
        .unwrap();
    let mut checked = 0;
    for p in &run.samples {
        let (y, yp) = p.jacobi(0);
        if y.abs() < 0.2 {
            continue;
        }
        let u = p.extras[4];
        assert!(
            (u - yp / y).abs() < 1e-6,
            "u = {u} vs y'/y = {} at s = {}",
            yp / y,
            p.s
        );
        checked += 1;
    }
    assert!(checked > 10, "too few comparable samples ({checked})");
}

#[test]
fn region_entry_alternates_boundary_crossings() {
    // Start on the region boundary pointing inward: the orbit bounces
    // between the region and the cap, so boundary events come in pairs
    // alpha-in/alpha-out then beta-in/beta-out.
    let s = DumbbellParams::default().build().unwrap();
    let m = s.marks().unwrap();
    let phi0 = 0.35;
    let v0 = GeodesicState::from_heading(0.0, m.l_alpha - 1e-9, PI - 0.5 * phi0);
    let traj = integrate_geodesic(&s, &v0, 120.0, opts()).unwrap();
    let boundary: Vec<EventKind> = traj
        .events
        .iter()
        .filter(|e| {
            matches!(
                e.kind,
                EventKind::AlphaIn | EventKind::AlphaOut | EventKind::BetaIn | EventKind::BetaOut
            )
        })
        .map(|e| e.kind)
        .collect();
    assert!(boundary.len() >= 6, "events: {boundary:?}");
    // Expected cycle starting inside the region: out, beta-in, beta-out,
    // alpha-in, alpha-out, ...
    let expect = [
        EventKind::AlphaOut,
        EventKind::BetaIn,
        EventKind::BetaOut,
        EventKind::AlphaIn,
    ];
    for (i, kind) in boundary.iter().enumerate() {
        assert_eq!(*kind, expect[i % 4], "event {i} of {boundary:?}");
    }
}

#[test]
fn pole_chart_handover_is_seamless() {
    // The same near-pole geodesic integrated with two different handover
    // radii must end in the same state.
    let s = DumbbellParams::default().build().unwrap();
    let v0 = GeodesicState::new(0.0, 0.5, 0.012);
    let t = 12.0;
    let a = integrate_geodesic(&s, &v0, t, opts()).unwrap();
    let mut wide = opts();
    wide.pole_enter = 3e-2;
    wide.pole_exit = 6e-2;
    let b = integrate_geodesic(&s, &v0, t, wide).unwrap();
    let (ea, eb) = (a.final_state(), b.final_state());
    assert!(
        wrap(ea.theta - eb.theta).abs() < 1e-8,
        "theta {} vs {}",
        ea.theta,
        eb.theta
    );
    assert!((ea.l - eb.l).abs() < 1e-8, "l {} vs {}", ea.l, eb.l);
    assert!(wrap(ea.heading() - eb.heading()).abs() < 1e-8);
}

#[test]
fn pole_start_shoots_along_meridian() {
    let s = ProfileSurface::unit_sphere();
    let traj = FlowTask::new(&s)
        .run_from_pole(geodlab_core::surface::profile::PoleEnd::Bottom, 1.1, 1.0, &[])
        .unwrap();
    let end = traj.final_state();
    assert!((end.l - 1.0).abs() < 1e-9);
    assert!(wrap(end.theta - 1.1).abs() < 1e-9);
    assert!(end.phi.abs() < 1e-9);
}
