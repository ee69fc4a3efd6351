use std::f64::consts::PI;

use catglue::approximation::{build_polygonal_line, build_sigma_k, vertex_angle_sums, ApproxError, Window};
use catglue::scenarios::{build_geometry, builtin};
use catglue::GluedSurface;
use proptest::prelude::*;

fn surface(name: &str) -> (GluedSurface, Option<Window>) {
    let g = build_geometry(&builtin(name).unwrap(), 1e-3).unwrap();
    (g.surface.unwrap(), g.window)
}

/// Hermite sampling of the boundary puts arc points within about 2e-11 of
/// the exact circle.
const CURVE_TOL: f64 = 1e-10;

/// Chord subtending arc length α/k on a circle of radius R.
fn circle_chord(radius: f64, alpha: f64, k: usize) -> f64 {
    2.0 * radius * (alpha / (2.0 * radius * k as f64)).sin()
}

#[test]
fn chord_length_on_the_unit_circle() {
    let (s, w) = surface("concave_convex");
    let w = w.unwrap();
    assert_eq!(w, Window { center: 0.6, radius: 0.4 });
    for k in [1, 2, 4, 8, 64] {
        let line = build_polygonal_line(s.arc_a(), &w, k).unwrap();
        let oracle = circle_chord(1.0, 0.4, k);
        assert!((line.chord_length - oracle).abs() < CURVE_TOL, "k {k}: {} vs {oracle}", line.chord_length);
        assert_eq!(line.vertices.len(), 2 * k + 1);
        assert!(line.chord_spread() < 1e-9);
        // Every vertex is on the unit circle.
        assert!(line.vertices.iter().all(|v| (v.norm() - 1.0).abs() < CURVE_TOL));
    }
}

#[test]
fn chord_length_on_a_straight_seam() {
    let (s, _) = surface("flat_glue");
    let w = Window { center: 1.0, radius: 0.5 };
    for k in [1, 3, 10] {
        let line = build_polygonal_line(s.arc_a(), &w, k).unwrap();
        assert!((line.chord_length - 0.5 / k as f64).abs() < 1e-12);
        assert!(line.total_turning().abs() < 1e-12);
    }
}

#[test]
fn polygon_length_increases_with_k() {
    let (s, w) = surface("concave_convex");
    let w = w.unwrap();
    let lens: Vec<f64> = [1, 2, 4, 8, 16].iter().map(|&k| build_polygonal_line(s.arc_a(), &w, k).unwrap().length()).collect();
    assert!(lens.windows(2).all(|p| p[1] > p[0]), "{lens:?}");
    // L(Pᵏ) = 2k·ℓ_k tends to the window length 0.8.
    for (i, &k) in [1usize, 2, 4, 8, 16].iter().enumerate() {
        assert!((lens[i] - 2.0 * k as f64 * circle_chord(1.0, 0.4, k)).abs() < 2.0 * k as f64 * CURVE_TOL);
    }
    assert!(0.8 - lens[4] < 1e-4);
}

#[test]
fn vertex_angles_exceed_two_pi_on_concave_convex() {
    let (s, w) = surface("concave_convex");
    let ap = build_sigma_k(&s, &w.unwrap(), 4).unwrap();
    assert!((ap.epsilon - 0.5).abs() < 1e-9);
    let sums = vertex_angle_sums(&ap);
    assert_eq!(sums.len(), 7);
    for v in sums {
        assert!(v > 2.0 * PI, "{v}");
    }
}

#[test]
fn vertex_angles_are_flat_on_a_straight_seam() {
    let (s, _) = surface("flat_glue");
    let ap = build_sigma_k(&s, &Window { center: 1.0, radius: 0.5 }, 3).unwrap();
    for v in vertex_angle_sums(&ap) {
        assert!((v - 2.0 * PI).abs() < 1e-12, "{v}");
    }
}

#[test]
fn convex_sides_are_rejected() {
    let (s, _) = surface("two_disks");
    let err = build_sigma_k(&s, &Window { center: 1.0, radius: 0.5 }, 4).unwrap_err();
    assert!(matches!(err, ApproxError::ConditionsViolated { k1: false, .. }), "{err:?}");
}

#[test]
fn bad_windows_and_k() {
    let (s, w) = surface("concave_convex");
    assert!(matches!(build_polygonal_line(s.arc_a(), &w.unwrap(), 0), Err(ApproxError::ZeroK)));
    let outside = Window { center: 1.0, radius: 0.5 };
    assert!(matches!(build_polygonal_line(s.arc_a(), &outside, 2), Err(ApproxError::WindowOutsideArc { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn chord_oracle_holds_for_any_window(center in 0.3f64..0.9, radius in 0.05f64..0.3, k in 1usize..40) {
        prop_assume!(center - radius >= 0.0 && center + radius <= 1.2);
        let (s, _) = surface("concave_convex");
        let line = build_polygonal_line(s.arc_a(), &Window { center, radius }, k).unwrap();
        prop_assert!((line.chord_length - circle_chord(1.0, radius, k)).abs() < CURVE_TOL);
    }
}
