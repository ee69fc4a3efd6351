use std::f64::consts::PI;

use catglue::curves::{CurvatureProfile, InteriorSide};
use catglue::hyperbolic::*;
use catglue::Vec2;
use proptest::prelude::*;

/// Geodesic flow integrated directly from the Christoffel symbols of the
/// conformal metric λ²|dz|², as an independent check of the exponential map.
fn exp_by_ode(k0: f64, p: Vec2, v: Vec2) -> Vec2 {
    let m = ModelSurface::new(k0).unwrap();
    let grad_phi = |z: Vec2| if k0 == 0.0 { Vec2::ZERO } else { z * (2.0 / (1.0 - z.norm_sq())) };
    // z'' = -2 (∇φ·z') z' + |z'|² ∇φ
    let acc = |z: Vec2, u: Vec2| {
        let g = grad_phi(z);
        u * (-2.0 * g.dot(u)) + g * u.norm_sq()
    };
    let n = 20_000;
    let h = 1.0 / n as f64;
    let mut z = p;
    let mut u = v / m.lambda(p);
    for _ in 0..n {
        let (a1, b1) = (u, acc(z, u));
        let (a2, b2) = (u + b1 * (0.5 * h), acc(z + a1 * (0.5 * h), u + b1 * (0.5 * h)));
        let (a3, b3) = (u + b2 * (0.5 * h), acc(z + a2 * (0.5 * h), u + b2 * (0.5 * h)));
        let (a4, b4) = (u + b3 * h, acc(z + a3 * h, u + b3 * h));
        z += (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0);
        u += (b1 + b2 * 2.0 + b3 * 2.0 + b4) * (h / 6.0);
    }
    z
}

#[test]
fn exp_map_matches_geodesic_ode() {
    for k0 in [0.0, -0.25, -1.0, -4.0] {
        let m = ModelSurface::new(k0).unwrap();
        let p = Vec2::new(0.2, -0.3);
        let v = Vec2::new(0.5, 0.35);
        let q = m.exp_map(p, v).unwrap();
        let r = exp_by_ode(k0, p, v);
        assert!(q.dist(r) < 1e-9, "k0={k0}: {q:?} vs {r:?}");
    }
}

#[test]
fn distance_of_origin_to_radius() {
    let m = ModelSurface::new(-1.0).unwrap();
    let d = m.distance(Vec2::ZERO, Vec2::new(0.5, 0.0)).unwrap();
    assert!((d - 3f64.ln()).abs() < 1e-14);
    let m4 = ModelSurface::new(-4.0).unwrap();
    assert!((m4.distance(Vec2::ZERO, Vec2::new(0.5, 0.0)).unwrap() - 0.5 * 3f64.ln()).abs() < 1e-14);
}

#[test]
fn rejects_bad_inputs() {
    assert!(matches!(ModelSurface::new(0.5), Err(HypError::BadCurvature(_))));
    let m = ModelSurface::new(-1.0).unwrap();
    assert!(matches!(m.distance(Vec2::new(1.0, 0.0), Vec2::ZERO), Err(HypError::OutsideModel(_))));
    assert!(matches!(m.log_map(Vec2::ZERO, Vec2::ZERO), Err(HypError::CoincidentPoints)));
    let c = ModelCurve::Circle { center: Vec2::ZERO, radius: 0.5, phase: 0.0 };
    assert!(matches!(derivative_check(&m, &c, 0.0, &[1e-7]), Err(HypError::StepUnderflow(_))));
    assert!(matches!(derivative_check(&m, &c, 0.0, &[1e-3, 2e-3]), Err(HypError::InvalidSteps)));
}

#[test]
fn circle_and_horocycle_curvatures() {
    for k0 in [0.0, -1.0, -3.0] {
        let m = ModelSurface::new(k0).unwrap();
        for rho in [0.3, 1.0] {
            let c = ModelCurve::Circle { center: Vec2::new(0.1, 0.05), radius: rho, phase: 0.7 };
            let k = signed_geodesic_curvature(&m, &c, 0.2).unwrap();
            let exact = c.analytic_curvature(&m, 0.2);
            assert!((k - exact).abs() < 1e-6, "k0={k0} rho={rho}: {k} vs {exact}");
        }
        let h = ModelCurve::Horocycle;
        let k = signed_geodesic_curvature(&m, &h, 0.1).unwrap();
        assert!((k - m.a()).abs() < 1e-6);
    }
}

#[test]
fn equidistant_curvature() {
    let m = ModelSurface::new(-2.0).unwrap();
    let c = ModelCurve::Equidistant { psi: 0.4 };
    let k = signed_geodesic_curvature(&m, &c, 0.15).unwrap();
    assert!((k - 2f64.sqrt() * 0.4f64.sin()).abs() < 1e-6);
}

#[test]
fn constant_profile_reproduces_circle_curvature() {
    let m = ModelSurface::new(-1.0).unwrap();
    let c = ModelCurve::Profile { start: Vec2::new(0.1, 0.0), angle: 0.3, profile: CurvatureProfile::constant(0.0, 1.0, 1.7).unwrap() };
    let k = signed_geodesic_curvature(&m, &c, 0.5).unwrap();
    assert!((k - 1.7).abs() < 1e-5, "{k}");
    let zero = ModelCurve::Profile { start: Vec2::new(0.1, 0.0), angle: 0.3, profile: CurvatureProfile::constant(0.0, 1.0, 0.0).unwrap() };
    let g = ModelCurve::Geodesic { start: Vec2::new(0.1, 0.0), angle: 0.3 };
    assert!(zero.point(&m, 0.8).unwrap().dist(g.point(&m, 0.8).unwrap()) < 1e-10);
}

#[test]
fn angle_derivatives_match_curvature() {
    let rows = derivative_suite(&[0.0, -0.5, -1.0, -4.0], &[0.25, 0.5, 1.0, 2.0], &DEFAULT_STEPS).unwrap();
    assert_eq!(rows.len(), 4 * 6 * 2);
    for r in &rows {
        assert!(r.err < 1e-4, "{r:?}");
    }
    let mut buf = Vec::new();
    write_derivative_csv(&rows, &mut buf).unwrap();
    assert!(String::from_utf8(buf).unwrap().starts_with("family,rho,k0,fd,analytic,err\n"));
}

#[test]
fn angle_functions_on_a_geodesic_vanish() {
    let m = ModelSurface::new(-1.0).unwrap();
    let g = ModelCurve::Geodesic { start: Vec2::new(-0.2, 0.1), angle: 1.0 };
    let a = angle_functions(&m, &g, 0.4, 0.05).unwrap();
    assert!(a.theta_plus < 1e-8 && a.theta_minus < 1e-8 && a.phi < 1e-8);
}

#[test]
fn more_curved_tangent_circle_has_larger_angles() {
    let m = ModelSurface::new(-1.0).unwrap();
    // Both circles pass through the origin heading in +x with centres on +y.
    let circle = |rho: f64| {
        let re = (0.5 * rho).tanh();
        ModelCurve::Circle { center: Vec2::new(0.0, re), radius: rho, phase: -PI / 2.0 }
    };
    let small = circle(0.5);
    let big = circle(1.5);
    assert!(small.point(&m, 0.0).unwrap().norm() < 1e-12);
    assert!(angle_comparison(&m, &small, 0.0, &big, 0.0, &[0.02, 0.05, 0.1]).unwrap());
    assert!(!angle_comparison(&m, &big, 0.0, &small, 0.0, &[0.02, 0.05, 0.1]).unwrap());
    let off = ModelCurve::Circle { center: Vec2::new(0.3, 0.2), radius: 0.5, phase: 0.0 };
    assert!(matches!(angle_comparison(&m, &small, 0.0, &off, 0.0, &[0.05]), Err(HypError::NotTangent)));
}

#[test]
fn circle_is_locally_geodesically_convex() {
    let m = ModelSurface::new(-1.0).unwrap();
    let c = ModelCurve::Circle { center: Vec2::ZERO, radius: 0.8, phase: 0.0 };
    let eps = local_geodesic_containment(&m, &c, 0.3, InteriorSide::Left, 0.4).unwrap();
    assert!(eps > 0.0);
    assert!(matches!(local_geodesic_containment(&m, &c, 0.3, InteriorSide::Right, 0.4), Err(HypError::NotLocallyConvex(_))));
    let g = ModelCurve::Geodesic { start: Vec2::ZERO, angle: 0.0 };
    assert!(matches!(local_geodesic_containment(&m, &g, 0.3, InteriorSide::Left, 0.4), Err(HypError::NotLocallyConvex(_))));
}

#[test]
fn ideal_like_triangle_area_grows_toward_pi() {
    let m = ModelSurface::new(-1.0).unwrap();
    let r = 0.999;
    let pts: Vec<Vec2> = (0..3).map(|i| Vec2::from_angle(2.0 * PI * i as f64 / 3.0) * r).collect();
    let ang = triangle_angles(&m, pts[0], pts[1], pts[2]).unwrap();
    let area = triangle_area(&m, pts[0], pts[1], pts[2]).unwrap();
    assert!(area < PI && area > 3.0);
    assert!((ang.iter().sum::<f64>() - (PI - area)).abs() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exp_inverts_log(k in -4.0f64..=0.0, px in -0.6f64..0.6, py in -0.6f64..0.6, qx in -0.6f64..0.6, qy in -0.6f64..0.6) {
        prop_assume!((px - qx).abs() + (py - qy).abs() > 1e-6);
        let m = ModelSurface::new(k).unwrap();
        let p = Vec2::new(px, py);
        let q = Vec2::new(qx, qy);
        let v = m.log_map(p, q).unwrap();
        prop_assert!((v.norm() - m.distance(p, q).unwrap()).abs() < 1e-10);
        prop_assert!(m.exp_map(p, v).unwrap().dist(q) < 1e-10);
    }

    #[test]
    fn distance_is_symmetric_and_triangular(k in -4.0f64..=0.0, a in prop::array::uniform6(-0.6f64..0.6)) {
        let m = ModelSurface::new(k).unwrap();
        let (p, q, r) = (Vec2::new(a[0], a[1]), Vec2::new(a[2], a[3]), Vec2::new(a[4], a[5]));
        let d = |x, y| m.distance(x, y).unwrap();
        prop_assert!((d(p, q) - d(q, p)).abs() <= 1e-12 * (1.0 + d(p, q)));
        prop_assert!(d(p, r) <= d(p, q) + d(q, r) + 1e-12);
    }

    #[test]
    fn gauss_bonnet(k in -4.0f64..=0.0, a in prop::array::uniform6(-0.7f64..0.7)) {
        let m = ModelSurface::new(k).unwrap();
        let (p, q, r) = (Vec2::new(a[0], a[1]), Vec2::new(a[2], a[3]), Vec2::new(a[4], a[5]));
        prop_assume!((q - p).cross(r - p).abs() > 1e-3);
        let ang = triangle_angles(&m, p, q, r).unwrap();
        let area = triangle_area(&m, p, q, r).unwrap();
        prop_assert!((ang.iter().sum::<f64>() - (PI + k * area)).abs() < 1e-9);
    }
}
