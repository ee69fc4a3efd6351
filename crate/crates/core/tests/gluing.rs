use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use catglue::gluing::{glued_shortest_path, rho_of_angles};
use catglue::{glue, make_domain, BoundaryCurve, BoundaryLoop, GlueArc, GlueError, GluedSurface, LoopPiece, Side, TaggedPoint, Vec2};
use proptest::prelude::*;

const H: f64 = 1e-3;

fn circle(c: Vec2, r: f64) -> BoundaryLoop {
    BoundaryLoop::new(vec![LoopPiece::new(BoundaryCurve::arc(c + Vec2::new(r, 0.0), FRAC_PI_2, r, 2.0 * PI).unwrap())]).unwrap()
}

fn polygon(pts: &[Vec2], glued_edge: usize) -> BoundaryLoop {
    let n = pts.len();
    let pieces = (0..n)
        .map(|i| {
            let c = BoundaryCurve::segment(pts[i], pts[(i + 1) % n]).unwrap();
            if i == glued_edge { LoopPiece::new(c) } else { LoopPiece::clip(c) }
        })
        .collect();
    BoundaryLoop::new(pieces).unwrap()
}

/// Unit disks about (0, 0) and (0, 2), glued along arcs of length 2 centred on
/// w = (0, 1).
fn two_disks(enforce: bool) -> Result<GluedSurface, GlueError> {
    let a = Arc::new(make_domain(vec![circle(Vec2::ZERO, 1.0)], H).unwrap());
    let b = Arc::new(make_domain(vec![circle(Vec2::new(0.0, 2.0), 1.0)], H).unwrap());
    let arc_a = GlueArc::new(a, 0, FRAC_PI_2 - 1.0, 2.0, false).unwrap();
    let arc_b = GlueArc::new(b, 0, 3.0 * FRAC_PI_2 + 1.0, 2.0, true).unwrap();
    glue(arc_a, arc_b, 65, enforce)
}

/// The square [−1, 1]² cut along y = 0.
fn flat_square() -> GluedSurface {
    let a = polygon(&[Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(-1.0, 1.0)], 0);
    let b = polygon(&[Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0), Vec2::new(-1.0, -1.0), Vec2::new(1.0, -1.0)], 0);
    let arc_a = GlueArc::new(Arc::new(make_domain(vec![a], H).unwrap()), 0, 0.0, 2.0, false).unwrap();
    let arc_b = GlueArc::new(Arc::new(make_domain(vec![b], H).unwrap()), 0, 2.0, 2.0, true).unwrap();
    glue(arc_a, arc_b, 65, false).unwrap()
}

fn sigma_a(s: f64) -> Vec2 {
    Vec2::from_angle(FRAC_PI_2 - 1.0 + s)
}

fn sigma_b(s: f64) -> Vec2 {
    Vec2::new(0.0, 2.0) + Vec2::from_angle(3.0 * FRAC_PI_2 + 1.0 - s)
}

/// Defect of the broken path through w = σ(1):
/// ε = 2·|σ(0.5) − σ(1)| − |σ(0.5) − σ(1.5)|.
fn epsilon() -> f64 {
    4.0 * (0.25f64).sin() - 2.0 * (0.5f64).sin()
}

fn probe_points() -> (TaggedPoint, TaggedPoint) {
    let r = 1.0 - epsilon() / 4.0;
    (TaggedPoint::new(Side::A, sigma_a(0.5) * r), TaggedPoint::new(Side::B, Vec2::new(0.0, 2.0) + (sigma_b(1.5) - Vec2::new(0.0, 2.0)) * r))
}

/// f(s) = |x − σ_A(s)| + |σ_B(s) − y|, the length of the path through σ(s).
fn f_oracle(s: f64) -> f64 {
    let (x, y) = probe_points();
    x.p.dist(sigma_a(s)) + sigma_b(s).dist(y.p)
}

/// Local minima of f on a fine grid, refined by ternary search.
fn f_minimizers() -> Vec<(f64, f64)> {
    let n = 20_000;
    let vals: Vec<f64> = (0..=n).map(|i| f_oracle(2.0 * i as f64 / n as f64)).collect();
    let mut out = Vec::new();
    for i in 1..n {
        if vals[i] < vals[i - 1] && vals[i] < vals[i + 1] {
            let (mut lo, mut hi) = (2.0 * (i - 1) as f64 / n as f64, 2.0 * (i + 1) as f64 / n as f64);
            for _ in 0..200 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                if f_oracle(m1) < f_oracle(m2) { hi = m2 } else { lo = m1 }
            }
            let s = 0.5 * (lo + hi);
            out.push((s, f_oracle(s)));
        }
    }
    out
}

#[test]
fn f_oracle_matches_frozen_values() {
    assert!((epsilon() - 0.030_764_759_809_685_738).abs() < 1e-15);
    let mins = f_minimizers();
    assert_eq!(mins.len(), 2);
    assert!((mins[0].0 - 0.514_377).abs() < 1e-5 && (mins[1].0 - 1.485_623).abs() < 1e-5, "{mins:?}");
    for (_, f) in &mins {
        assert!((f - 0.958_851_077_208_406).abs() < 1e-13, "{f}");
    }
    // The path through w is strictly longer.
    assert!((f_oracle(1.0) - 0.985_922_83).abs() < 1e-8);
}

#[test]
fn flat_square_crosses_straight() {
    let s = flat_square();
    let x = TaggedPoint::new(Side::A, Vec2::new(0.0, 0.5));
    let y = TaggedPoint::new(Side::B, Vec2::new(0.0, -0.5));
    let p = s.shortest_path(&x, &y).unwrap();
    assert!((p.length - 1.0).abs() < 1e-12);
    let c = s.crossing_angles(&p).unwrap();
    assert_eq!(c.len(), 1);
    assert!((c[0].theta_a - FRAC_PI_2).abs() < 1e-9 && (c[0].theta_b - FRAC_PI_2).abs() < 1e-9);
    assert!((c[0].parameter - 1.0).abs() < 1e-9);
}

#[test]
fn same_side_path_needs_no_crossing() {
    let s = flat_square();
    let x = TaggedPoint::new(Side::A, Vec2::new(-0.5, 0.5));
    let y = TaggedPoint::new(Side::A, Vec2::new(0.5, 0.5));
    let p = s.shortest_path(&x, &y).unwrap();
    assert!((p.length - 1.0).abs() < 1e-12);
    assert!(matches!(s.crossing_angles(&p), Err(GlueError::NoCrossings)));
}

#[test]
fn disk_centres_are_two_apart() {
    let s = two_disks(false).unwrap();
    let oa = TaggedPoint::new(Side::A, Vec2::ZERO);
    let ob = TaggedPoint::new(Side::B, Vec2::new(0.0, 2.0));
    let p = s.shortest_path(&oa, &ob).unwrap();
    assert!((p.length - 2.0).abs() < 1e-6, "{}", p.length);
    // Every portal gives a path of the same length up to the chord sagitta.
    let near = s.portal_path_lengths(&oa, &ob).unwrap().iter().filter(|(_, l)| (l - 2.0).abs() < 1e-6).count();
    assert!(near >= 3, "{near}");
    assert!((glued_shortest_path(&s, &oa, &ob, 2.0 * H).unwrap().length - 2.0).abs() < 1e-5);
    let paths = s.geodesic_multiplicity_probe(&oa, &ob, 1e-9).unwrap();
    assert!(paths.len() >= 3, "{}", paths.len());
    for p in &paths {
        let c = s.crossing_angles(p).unwrap();
        assert!((c[0].theta_a - FRAC_PI_2).abs() < 1e-6 && (c[0].theta_b - FRAC_PI_2).abs() < 1e-6);
    }
}

/// Seam point on the unit circle (A) and on the radius-2 circle (B) of the
/// concave/convex gluing; both pass the top point at s = 0.6.
fn cc_sigma(side: Side, s: f64) -> Vec2 {
    match side {
        Side::A => Vec2::from_angle(FRAC_PI_2 + 0.6 - s),
        Side::B => Vec2::new(0.0, -1.0) + Vec2::from_angle(FRAC_PI_2 + (0.6 - s) / 2.0) * 2.0,
    }
}

#[test]
fn concave_side_is_bypassed_through_the_convex_side() {
    let sc = catglue::scenarios::builtin("concave_convex").unwrap();
    let geo = catglue::scenarios::build_geometry(&sc, H).unwrap();
    let s = geo.surface.unwrap();
    assert!(s.seam_point(Side::A, 0.3).dist(cc_sigma(Side::A, 0.3)) < 1e-9);
    assert!(s.seam_point(Side::B, 0.3).dist(cc_sigma(Side::B, 0.3)) < 1e-9);
    // Hugging the circle over a stretch Δ would cost about Δ³/96 more than
    // the chord through B; here Δ ≈ 0.76.
    let x = cc_sigma(Side::A, 0.02) * 1.02;
    let y = cc_sigma(Side::A, 1.18) * 1.02;
    let p = s.shortest_path(&TaggedPoint::new(Side::A, x), &TaggedPoint::new(Side::A, y)).unwrap();
    assert_eq!(p.crossings.len(), 2);

    // Brute force over crossing pairs: x → σ(s1) in A, straight chord in the
    // convex side B, σ(s2) → y in A. The A legs stay outside the unit disk
    // while the seam point is within the tangency angle acos(1/1.02).
    let reach = (1.0f64 / 1.02).acos();
    let (lo1, hi1, lo2, hi2) = (0.0, 0.02 + reach, 1.18 - reach, 1.2);
    let len = |s1: f64, s2: f64| x.dist(cc_sigma(Side::A, s1)) + cc_sigma(Side::B, s1).dist(cc_sigma(Side::B, s2)) + cc_sigma(Side::A, s2).dist(y);
    let n = 1000;
    let at = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / n as f64;
    let (mut s1, mut s2, mut best) = (0.0, 0.0, f64::INFINITY);
    for i in 0..=n {
        for j in 0..=n {
            let (u, v) = (at(lo1, hi1, i), at(lo2, hi2, j));
            let l = len(u, v);
            if l < best {
                (s1, s2, best) = (u, v, l);
            }
        }
    }
    let tern = |f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64| {
        for _ in 0..100 {
            let (m1, m2) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
            if f(m1) < f(m2) { hi = m2 } else { lo = m1 }
        }
        0.5 * (lo + hi)
    };
    for _ in 0..50 {
        s1 = tern(&|u| len(u, s2), (s1 - 0.01).max(lo1), (s1 + 0.01).min(hi1));
        s2 = tern(&|u| len(s1, u), (s2 - 0.01).max(lo2), (s2 + 0.01).min(hi2));
    }
    // An interior optimum: the legs meet the seam transversally.
    assert!(s1 > lo1 + 1e-3 && s1 < hi1 - 1e-3 && s2 > lo2 + 1e-3 && s2 < hi2 - 1e-3, "{s1} {s2}");
    let oracle = len(s1, s2);
    assert!((p.length - oracle).abs() < 1e-6, "{} vs {oracle}", p.length);
    assert!((p.crossings[0].parameter - s1).abs() < 1e-3 && (p.crossings[1].parameter - s2).abs() < 1e-3, "{s1} {s2}");
    // The two crossings are refined one at a time, so the angle law holds
    // less tightly than on single-crossing paths.
    for c in &p.crossings {
        assert!((c.theta_a + c.theta_b - PI).abs() < 1e-4, "{c:?}");
    }
}

#[test]
fn two_disks_have_two_geodesics() {
    let s = two_disks(false).unwrap();
    let (x, y) = probe_points();
    let mins = f_minimizers();
    let paths = s.geodesic_multiplicity_probe(&x, &y, 1e-6).unwrap();
    assert_eq!(paths.len(), 2);
    let mut params: Vec<f64> = paths.iter().map(|p| p.crossings[0].parameter).collect();
    params.sort_by(f64::total_cmp);
    for p in &paths {
        assert!((p.length - mins[0].1).abs() < 1e-6, "{} vs {}", p.length, mins[0].1);
    }
    assert!((params[0] - mins[0].0).abs() < 1e-4 && (params[1] - mins[1].0).abs() < 1e-4, "{params:?}");
    // Mirror symmetry about w.
    assert!((params[0] + params[1] - 2.0).abs() < 1e-4);
}

#[test]
fn enforcing_conditions_rejects_two_disks() {
    let err = two_disks(true).unwrap_err();
    assert!(matches!(err, GlueError::ConditionsViolated { k1: false, .. }), "{err:?}");
}

#[test]
fn too_few_portals() {
    let a = Arc::new(make_domain(vec![circle(Vec2::ZERO, 1.0)], H).unwrap());
    let arc = GlueArc::new(a.clone(), 0, 0.0, 1.0, false).unwrap();
    let arc_b = GlueArc::new(a, 0, 2.0, 1.0, true).unwrap();
    assert!(matches!(glue(arc, arc_b, 1, false), Err(GlueError::TooFewPortals(1))));
}

#[test]
fn rho_at_known_angles() {
    assert!((rho_of_angles(PI / 6.0, PI / 3.0).unwrap() - 0.732_050_807_568_877_3).abs() < 1e-12);
    assert!(matches!(rho_of_angles(FRAC_PI_2, FRAC_PI_2), Err(GlueError::AngleDomain { .. })));
    assert!(rho_of_angles(0.0, 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rho_of_equal_angles_is_cosine(t in 0.01f64..1.5) {
        prop_assert!((rho_of_angles(t, t).unwrap() - t.cos()).abs() < 1e-12);
    }

    #[test]
    fn rho_is_symmetric_and_at_most_one(a in 0.01f64..1.5, b in 0.01f64..1.5) {
        prop_assume!(a + b < PI - 1e-3);
        let r = rho_of_angles(a, b).unwrap();
        prop_assert!((r - rho_of_angles(b, a).unwrap()).abs() < 1e-12);
        prop_assert!(r > 0.0 && r <= 1.0 + 1e-12);
    }
}
