//! Counting against closed-form oracles on the round sphere, plus the
//! front-length identities.

use geodlab_core::counting::{
    count_segments, count_segments_bundle, front_length, integral_count, ShotBundle, SourcePoint,
};
use geodlab_core::flow::IntegrationOptions;
use geodlab_core::surface::ProfileSurface;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn opts() -> IntegrationOptions {
    IntegrationOptions::default()
}

/// Great-circle distance on the unit sphere in (theta, l) chart
/// coordinates (l is the polar distance from the bottom pole).
fn sphere_distance(p: (f64, f64), q: (f64, f64)) -> f64 {
    let pos = |(theta, l): (f64, f64)| {
        (
            l.sin() * theta.cos(),
            l.sin() * theta.sin(),
            -l.cos(),
        )
    };
    let a = pos(p);
    let b = pos(q);
    let dot = a.0 * b.0 + a.1 * b.1 + a.2 * b.2;
    dot.clamp(-1.0, 1.0).acos()
}

/// Closed-form count of geodesic segments on the unit sphere: lengths
/// g + 2 pi k and (2 pi - g) + 2 pi k.
fn sphere_count_oracle(dist: f64, t: f64) -> usize {
    let mut count = 0;
    let mut k = 0.0;
    loop {
        let short = dist + 2.0 * PI * k;
        let long = 2.0 * PI - dist + 2.0 * PI * k;
        let any = short <= t + 1e-9 || long <= t + 1e-9;
        if short <= t + 1e-9 {
            count += 1;
        }
        if long <= t + 1e-9 {
            count += 1;
        }
        if !any {
            break;
        }
        k += 1.0;
    }
    count
}

#[test]
fn sphere_counts_match_the_great_circle_oracle() {
    let s = ProfileSurface::unit_sphere();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let t = 5.0 * PI;
    for case in 0..6 {
        let p = (
            2.0 * PI * rng.random::<f64>(),
            0.3 + 2.5 * rng.random::<f64>(),
        );
        let q = (
            2.0 * PI * rng.random::<f64>(),
            0.3 + 2.5 * rng.random::<f64>(),
        );
        let expect = sphere_count_oracle(sphere_distance(p, q), t);
        let result = count_segments(
            &s,
            SourcePoint::Interior {
                theta: p.0,
                l: p.1,
            },
            q,
            t,
            256,
            1e-6,
            opts(),
        )
        .unwrap();
        assert_eq!(
            result.count, expect,
            "case {case}: p = {p:?}, q = {q:?}: got {} segments {:?}",
            result.count, result.segments
        );
        // Segment lengths match the oracle ladder.
        let mut lengths: Vec<f64> = result.segments.iter().map(|s| s.length).collect();
        lengths.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let g = sphere_distance(p, q);
        let mut expect_lengths = Vec::new();
        let mut k = 0.0;
        while g + 2.0 * PI * k <= t + 1e-9 || 2.0 * PI - g + 2.0 * PI * k <= t + 1e-9 {
            if g + 2.0 * PI * k <= t + 1e-9 {
                expect_lengths.push(g + 2.0 * PI * k);
            }
            if 2.0 * PI - g + 2.0 * PI * k <= t + 1e-9 {
                expect_lengths.push(2.0 * PI - g + 2.0 * PI * k);
            }
            k += 1.0;
        }
        expect_lengths.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in lengths.iter().zip(&expect_lengths) {
            assert!(
                (got - want).abs() < 1e-5,
                "case {case}: length {got} vs {want}"
            );
        }
    }
}

#[test]
fn no_segments_shorter_than_the_distance() {
    let s = ProfileSurface::unit_sphere();
    let p = (0.0, 1.2);
    let q = (1.0, 1.7);
    let d = sphere_distance(p, q);
    let result = count_segments(
        &s,
        SourcePoint::Interior {
            theta: p.0,
            l: p.1,
        },
        q,
        0.9 * d,
        128,
        1e-6,
        opts(),
    )
    .unwrap();
    assert_eq!(result.count, 0);
}

#[test]
fn antipodal_target_raises_the_conjugate_flag() {
    let s = ProfileSurface::unit_sphere();
    let p = (0.3, 1.1);
    let q = (0.3 + PI, PI - 1.1);
    let result = count_segments(
        &s,
        SourcePoint::Interior {
            theta: p.0,
            l: p.1,
        },
        q,
        1.2 * PI,
        128,
        1e-6,
        opts(),
    )
    .unwrap();
    assert!(
        result.conjugate_flag,
        "antipodal focus not flagged: {result:?}"
    );
}

#[test]
fn count_is_monotone_in_t_and_stable_under_halved_tolerance() {
    let s = ProfileSurface::unit_sphere();
    let p = SourcePoint::Interior { theta: 0.1, l: 1.3 };
    let q = (2.0, 2.1);
    let bundle = ShotBundle::shoot(&s, p, 192, 4.0 * PI, opts()).unwrap();
    let mut prev = 0;
    for t in [2.0, 5.0, 9.0, 4.0 * PI] {
        let r = count_segments_bundle(&s, &bundle, q, t, 1e-6).unwrap();
        assert!(r.count >= prev, "count dropped at T = {t}");
        prev = r.count;
    }
    let loose = count_segments_bundle(&s, &bundle, q, 4.0 * PI, 1e-6).unwrap();
    let tight = count_segments_bundle(&s, &bundle, q, 4.0 * PI, 5e-7).unwrap();
    assert_eq!(loose.count, tight.count);
    for (a, b) in loose.segments.iter().zip(&tight.segments) {
        assert!((a.length - b.length).abs() <= 1e-6);
    }
}

#[test]
fn sphere_counting_integral_closed_forms() {
    // int_M n_T(p, q) dq = int_0^T int |sin s| dv ds: 4 pi at T = pi,
    // 8 pi at T = 2 pi.
    let s = ProfileSurface::unit_sphere();
    let p = SourcePoint::Interior { theta: 0.0, l: 1.0 };
    let at_pi = integral_count(&s, p, PI, 256, opts()).unwrap();
    assert!(
        (at_pi.value - 4.0 * PI).abs() < 1e-3 * 4.0 * PI,
        "T = pi: {} vs {}",
        at_pi.value,
        4.0 * PI
    );
    let at_2pi = integral_count(&s, p, 2.0 * PI, 256, opts()).unwrap();
    assert!(
        (at_2pi.value - 8.0 * PI).abs() < 1e-3 * 8.0 * PI,
        "T = 2 pi: {} vs {}",
        at_2pi.value,
        8.0 * PI
    );
    // Flat-disc limit for small T: pi T^2 + O(T^4).
    let small = integral_count(&s, p, 0.1, 64, opts()).unwrap();
    assert!(
        (small.value - PI * 0.01).abs() < 1e-4,
        "small T: {} vs {}",
        small.value,
        PI * 0.01
    );
}

#[test]
fn sphere_front_length_is_constant_2pi() {
    let s = ProfileSurface::unit_sphere();
    let p = SourcePoint::Interior { theta: 0.4, l: 0.9 };
    for t in [1.0, 5.0] {
        let front = front_length(&s, p, t, 1e-3, 64, 4000, opts()).unwrap();
        assert!(
            (front.length_quadrature - 2.0 * PI).abs() < 1e-4,
            "T = {t}: quadrature {}",
            front.length_quadrature
        );
        assert!(front.complete);
        // Quadrature and polygonal lengths agree within the refinement
        // tolerance (relative).
        assert!(
            (front.length_quadrature - front.length_polygonal).abs()
                < front.refine_tol * front.length_quadrature.max(1.0),
            "T = {t}: quad {} vs poly {}",
            front.length_quadrature,
            front.length_polygonal
        );
    }
}

#[test]
fn flat_limit_front_length() {
    // While the front stays inside the flat band (K = 0), y = t and y' = 1
    // exactly, so the front length is 2 pi sqrt(t^2 + 1).
    let s = geodlab_core::surface::DumbbellParams::default()
        .build()
        .unwrap();
    let m = *s.marks().unwrap();
    let p = SourcePoint::Interior {
        theta: 0.0,
        l: m.l_band_center,
    };
    let t = 0.3;
    let front = front_length(&s, p, t, 1e-4, 64, 4000, opts()).unwrap();
    let expect = 2.0 * PI * (t * t + 1.0f64).sqrt();
    assert!(
        (front.length_quadrature - expect).abs() < 1e-6 * expect,
        "quad {} vs {expect}",
        front.length_quadrature
    );
    assert!(
        (front.length_polygonal - expect).abs() < 1e-4 * expect,
        "poly {} vs {expect}",
        front.length_polygonal
    );
}
