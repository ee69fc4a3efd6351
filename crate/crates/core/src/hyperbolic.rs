//! Constant-curvature model surface of curvature k₀ ≤ 0.
//!
//! For k₀ < 0 points live in the unit disk with the Poincaré metric rescaled
//! by 1/√(−k₀), `ds = λ(z)|dz|` with `λ(z) = 2 / (√(−k₀)(1 − |z|²))`; for
//! k₀ = 0 the model is the Euclidean plane. Tangent vectors are expressed in
//! the orthonormal frame at their base point, which by conformality is the
//! coordinate frame rescaled by λ.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::{CurvatureProfile, InteriorSide};
use crate::geodesics::fmt_num;
use crate::geom::{adaptive_simpson, angle_between, golden_section_min, Vec2};

/// Default finite-difference steps.
pub const DEFAULT_STEPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

/// Steps below this lose too many digits to cancellation.
pub const MIN_STEP: f64 = 1e-6;

/// Margin for strict angle inequalities.
pub const ANGLE_TOL: f64 = 1e-9;

/// Step of the RK4 integration of profile curves.
const PROFILE_STEP: f64 = 2.5e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HypError {
    #[error("curvature {0} must be finite and ≤ 0")]
    BadCurvature(f64),
    #[error("point {0:?} lies outside the model")]
    OutsideModel(Vec2),
    #[error("base and target coincide")]
    CoincidentPoints,
    #[error("finite-difference step {0} is too small")]
    StepUnderflow(f64),
    #[error("steps must be positive and decreasing")]
    InvalidSteps,
    #[error("parameter {s} outside the curve domain [{lo}, {hi}]")]
    ParameterOutOfRange { s: f64, lo: f64, hi: f64 },
    #[error("curves are not tangent at the comparison point")]
    NotTangent,
    #[error("curve is not locally convex toward the declared side (signed curvature {0})")]
    NotLocallyConvex(f64),
}

type C = Complex64;

fn cx(v: Vec2) -> C {
    C::new(v.x, v.y)
}

fn vx(z: C) -> Vec2 {
    Vec2::new(z.re, z.im)
}

/// Disk isometry sending `b` to the origin.
fn to_origin(b: C, z: C) -> C {
    (z - b) / (C::new(1.0, 0.0) - b.conj() * z)
}

/// Inverse of [`to_origin`].
fn from_origin(b: C, w: C) -> C {
    (w + b) / (C::new(1.0, 0.0) + b.conj() * w)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSurface {
    k0: f64,
}

impl ModelSurface {
    pub fn new(k0: f64) -> Result<Self, HypError> {
        if !(k0.is_finite() && k0 <= 0.0) {
            return Err(HypError::BadCurvature(k0));
        }
        Ok(ModelSurface { k0 })
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn is_flat(&self) -> bool {
        self.k0 == 0.0
    }

    /// √(−k₀).
    pub fn a(&self) -> f64 {
        (-self.k0).sqrt()
    }

    fn check(&self, p: Vec2) -> Result<(), HypError> {
        if !p.is_finite() || (!self.is_flat() && p.norm_sq() >= 1.0) {
            return Err(HypError::OutsideModel(p));
        }
        Ok(())
    }

    /// Conformal factor λ at `p`.
    pub fn lambda(&self, p: Vec2) -> f64 {
        if self.is_flat() {
            1.0
        } else {
            2.0 / (self.a() * (1.0 - p.norm_sq()))
        }
    }

    pub fn distance(&self, p: Vec2, q: Vec2) -> Result<f64, HypError> {
        self.check(p)?;
        self.check(q)?;
        if self.is_flat() {
            return Ok(p.dist(q));
        }
        let r = to_origin(cx(p), cx(q)).norm();
        Ok(2.0 / self.a() * r.atanh())
    }

    /// Initial velocity (orthonormal frame at `base`) of the unit-time
    /// geodesic from `base` to `target`.
    pub fn log_map(&self, base: Vec2, target: Vec2) -> Result<Vec2, HypError> {
        self.check(base)?;
        self.check(target)?;
        if base == target {
            return Err(HypError::CoincidentPoints);
        }
        if self.is_flat() {
            return Ok(target - base);
        }
        let w = to_origin(cx(base), cx(target));
        let r = w.norm();
        if r == 0.0 {
            return Err(HypError::CoincidentPoints);
        }
        let d = 2.0 / self.a() * r.atanh();
        Ok(vx(w / r) * d)
    }

    /// Point reached at unit time by the geodesic with initial velocity `v`.
    pub fn exp_map(&self, base: Vec2, v: Vec2) -> Result<Vec2, HypError> {
        self.check(base)?;
        if self.is_flat() {
            return Ok(base + v);
        }
        let d = v.norm();
        if d == 0.0 {
            return Ok(base);
        }
        let w = cx(v / d) * (0.5 * self.a() * d).tanh();
        Ok(vx(from_origin(cx(base), w)))
    }
}

pub fn hyp_distance(m: &ModelSurface, p: Vec2, q: Vec2) -> Result<f64, HypError> {
    m.distance(p, q)
}

pub fn log_map(m: &ModelSurface, base: Vec2, target: Vec2) -> Result<Vec2, HypError> {
    m.log_map(base, target)
}

pub fn exp_map(m: &ModelSurface, base: Vec2, v: Vec2) -> Result<Vec2, HypError> {
    m.exp_map(base, v)
}

/// Arc-length parametrized model curves.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelCurve {
    /// Unit-speed geodesic leaving `start` in model direction `angle`.
    Geodesic { start: Vec2, angle: f64 },
    /// Metric circle, counterclockwise, starting at polar angle `phase`.
    Circle { center: Vec2, radius: f64, phase: f64 },
    /// Horocycle through the origin, the image of `Im w = 1` in the upper
    /// half-plane (a straight line when flat).
    Horocycle,
    /// Curve at constant distance from a geodesic: the half-plane ray at
    /// angle `psi` from the imaginary axis (a straight line when flat).
    Equidistant { psi: f64 },
    /// Integrated from a signed geodesic-curvature profile.
    Profile { start: Vec2, angle: f64, profile: CurvatureProfile },
}

impl ModelCurve {
    pub fn family(&self) -> &'static str {
        match self {
            ModelCurve::Geodesic { .. } => "geodesic",
            ModelCurve::Circle { .. } => "circle",
            ModelCurve::Horocycle => "horocycle",
            ModelCurve::Equidistant { .. } => "equidistant",
            ModelCurve::Profile { .. } => "profile",
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        match self {
            ModelCurve::Profile { profile, .. } => profile.interval(),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Closed-form signed geodesic curvature (interior normal on the left).
    pub fn analytic_curvature(&self, m: &ModelSurface, s: f64) -> f64 {
        let a = m.a();
        match self {
            ModelCurve::Geodesic { .. } => 0.0,
            ModelCurve::Circle { radius, .. } => {
                if m.is_flat() {
                    1.0 / radius
                } else {
                    a / (a * radius).tanh()
                }
            }
            ModelCurve::Horocycle => a,
            ModelCurve::Equidistant { psi } => a * psi.sin(),
            ModelCurve::Profile { profile, .. } => profile.kappa(s),
        }
    }

    pub fn point(&self, m: &ModelSurface, s: f64) -> Result<Vec2, HypError> {
        let (lo, hi) = self.domain();
        if !(s >= lo && s <= hi) {
            return Err(HypError::ParameterOutOfRange { s, lo, hi });
        }
        let a = m.a();
        let p = match self {
            ModelCurve::Geodesic { start, angle } => m.exp_map(*start, Vec2::from_angle(*angle) * s)?,
            ModelCurve::Circle { center, radius, phase } => {
                if m.is_flat() {
                    *center + Vec2::from_angle(phase + s / radius) * *radius
                } else {
                    let re = (0.5 * a * radius).tanh();
                    let psi = phase + s * a / (a * radius).sinh();
                    vx(from_origin(cx(*center), C::from_polar(re, psi)))
                }
            }
            ModelCurve::Horocycle => {
                if m.is_flat() {
                    Vec2::new(s, 0.0)
                } else {
                    cayley(C::new(a * s, 1.0))
                }
            }
            ModelCurve::Equidistant { psi } => {
                if m.is_flat() {
                    Vec2::new(s, 0.0)
                } else {
                    cayley(C::from_polar((a * psi.cos() * s).exp(), 0.5 * PI - psi))
                }
            }
            ModelCurve::Profile { start, angle, profile } => integrate_profile(m, *start, *angle, profile, s),
        };
        m.check(p)?;
        Ok(p)
    }
}

/// Upper half-plane to disk.
fn cayley(w: C) -> Vec2 {
    let i = C::new(0.0, 1.0);
    vx((w - i) / (w + i))
}

/// RK4 for z' = e^{iθ}/λ, θ' = k + ∂_n log λ / λ.
fn integrate_profile(m: &ModelSurface, start: Vec2, angle: f64, profile: &CurvatureProfile, s: f64) -> Vec2 {
    let (lo, _) = profile.interval();
    let rhs = |u: f64, z: Vec2, th: f64| -> (Vec2, f64) {
        let dir = Vec2::from_angle(th);
        let lam = m.lambda(z);
        let grad = if m.is_flat() { Vec2::ZERO } else { z * (2.0 / (1.0 - z.norm_sq())) };
        (dir / lam, profile.kappa(u) + grad.dot(dir.perp()) / lam)
    };
    let n = ((s - lo) / PROFILE_STEP).ceil().max(0.0) as usize;
    if n == 0 {
        return start;
    }
    let h = (s - lo) / n as f64;
    let (mut z, mut th) = (start, angle);
    for i in 0..n {
        let u = lo + h * i as f64;
        let (k1z, k1t) = rhs(u, z, th);
        let (k2z, k2t) = rhs(u + 0.5 * h, z + k1z * (0.5 * h), th + 0.5 * h * k1t);
        let (k3z, k3t) = rhs(u + 0.5 * h, z + k2z * (0.5 * h), th + 0.5 * h * k2t);
        let (k4z, k4t) = rhs(u + h, z + k3z * h, th + h * k3t);
        z += (k1z + k2z * 2.0 + k3z * 2.0 + k4z) * (h / 6.0);
        th += h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
    }
    z
}

/// γ(t) = exp⁻¹_{r(s)}(r(s + t)), with γ(0) = 0.
fn pullback(m: &ModelSurface, c: &ModelCurve, s: f64, t: f64) -> Result<Vec2, HypError> {
    if t == 0.0 {
        return Ok(Vec2::ZERO);
    }
    m.log_map(c.point(m, s)?, c.point(m, s + t)?)
}

fn check_steps(steps: &[f64]) -> Result<(), HypError> {
    if steps.is_empty() || steps.iter().any(|&t| !(t > 0.0)) || steps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(HypError::InvalidSteps);
    }
    let min = *steps.last().unwrap();
    if min < MIN_STEP {
        return Err(HypError::StepUnderflow(min));
    }
    Ok(())
}

/// Repeated Richardson extrapolation of a central-difference sequence whose
/// error expands in even powers of the step.
fn richardson_even(steps: &[f64], mut vals: Vec<Vec2>) -> Vec2 {
    let mut level = 1;
    while vals.len() > 1 {
        let next = (0..vals.len() - 1)
            .map(|j| {
                let q = (steps[j] / steps[j + level]).powi(2 * level as i32);
                (vals[j + 1] * q - vals[j]) / (q - 1.0)
            })
            .collect();
        vals = next;
        level += 1;
    }
    vals[0]
}

/// γ″(0) = (∇_T T)(s) in the orthonormal frame at r(s).
pub fn covariant_acceleration(m: &ModelSurface, c: &ModelCurve, s: f64, steps: &[f64]) -> Result<Vec2, HypError> {
    check_steps(steps)?;
    let vals = steps
        .iter()
        .map(|&t| Ok((pullback(m, c, s, t)? + pullback(m, c, s, -t)?) / (t * t)))
        .collect::<Result<Vec<_>, HypError>>()?;
    Ok(richardson_even(steps, vals))
}

/// Unit tangent T_s in the orthonormal frame at r(s).
pub fn unit_tangent(m: &ModelSurface, c: &ModelCurve, s: f64) -> Result<Vec2, HypError> {
    let steps = [1e-3, 5e-4];
    let vals = steps
        .iter()
        .map(|&t| Ok((pullback(m, c, s, t)? - pullback(m, c, s, -t)?) / (2.0 * t)))
        .collect::<Result<Vec<_>, HypError>>()?;
    Ok(richardson_even(&steps, vals).normalized())
}

/// k(s) = |∇_T T| by finite differences of the log-map pullback.
pub fn geodesic_curvature(m: &ModelSurface, c: &ModelCurve, s: f64) -> Result<f64, HypError> {
    Ok(covariant_acceleration(m, c, s, &DEFAULT_STEPS)?.norm())
}

/// k̄(s) with (∇_T T) = k̄ n, n the left normal.
pub fn signed_geodesic_curvature(m: &ModelSurface, c: &ModelCurve, s: f64) -> Result<f64, HypError> {
    let acc = covariant_acceleration(m, c, s, &DEFAULT_STEPS)?;
    Ok(unit_tangent(m, c, s)?.cross(acc))
}

/// θ⁺(t), θ⁻(−t) and φ(t) for `t > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleValues {
    pub theta_plus: f64,
    pub theta_minus: f64,
    pub phi: f64,
}

/// Angles between U(0) = T_s and the normalized pullbacks U(±t).
pub fn angle_functions(m: &ModelSurface, c: &ModelCurve, s: f64, t: f64) -> Result<AngleValues, HypError> {
    let t = t.abs();
    let (lo, hi) = c.domain();
    if t == 0.0 || s - t < lo || s + t > hi {
        return Err(HypError::ParameterOutOfRange { s: s + t, lo, hi });
    }
    let u0 = unit_tangent(m, c, s)?;
    let fwd = pullback(m, c, s, t)?.normalized();
    // U(t) for t < 0 is −γ(t)/|γ(t)|, which tends to T_s from behind.
    let back = -pullback(m, c, s, -t)?.normalized();
    Ok(AngleValues { theta_plus: angle_between(u0, fwd), theta_minus: angle_between(u0, back), phi: angle_between(back, fwd) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub fd_slope_theta_plus: f64,
    pub fd_slope_phi: f64,
    pub k_half: f64,
    pub k_full: f64,
}

/// One-level Richardson slope at 0 of a function vanishing there, from the
/// difference quotients at the two finest steps.
fn richardson_slope(steps: &[f64], vals: &[f64]) -> f64 {
    let quot: Vec<f64> = steps.iter().zip(vals).map(|(t, v)| v / t).collect();
    if quot.len() == 1 {
        return quot[0];
    }
    let n = quot.len();
    let q = steps[n - 2] / steps[n - 1];
    (q * quot[n - 1] - quot[n - 2]) / (q - 1.0)
}

/// Finite-difference slopes of θ⁺ and φ at t = 0 next to k(s)/2 and k(s).
pub fn derivative_check(m: &ModelSurface, c: &ModelCurve, s: f64, steps: &[f64]) -> Result<DerivativeCheck, HypError> {
    check_steps(steps)?;
    let angles = steps.iter().map(|&t| angle_functions(m, c, s, t)).collect::<Result<Vec<_>, _>>()?;
    let th: Vec<f64> = angles.iter().map(|a| a.theta_plus).collect();
    let ph: Vec<f64> = angles.iter().map(|a| a.phi).collect();
    let k = covariant_acceleration(m, c, s, steps)?.norm();
    Ok(DerivativeCheck {
        fd_slope_theta_plus: richardson_slope(steps, &th),
        fd_slope_phi: richardson_slope(steps, &ph),
        k_half: 0.5 * k,
        k_full: k,
    })
}

/// True iff θ⁺ and φ of `c1` strictly exceed those of `c2` on `t_grid`.
pub fn angle_comparison(
    m: &ModelSurface,
    c1: &ModelCurve,
    s1: f64,
    c2: &ModelCurve,
    s2: f64,
    t_grid: &[f64],
) -> Result<bool, HypError> {
    let p1 = c1.point(m, s1)?;
    let p2 = c2.point(m, s2)?;
    let gap = if p1 == p2 { 0.0 } else { m.distance(p1, p2)? };
    let t1 = unit_tangent(m, c1, s1)?;
    let t2 = unit_tangent(m, c2, s2)?;
    if gap > 1e-9 || angle_between(t1, t2) > 1e-6 {
        return Err(HypError::NotTangent);
    }
    for &t in t_grid {
        let a1 = angle_functions(m, c1, s1, t)?;
        let a2 = angle_functions(m, c2, s2, t)?;
        if !(a1.theta_plus > a2.theta_plus + ANGLE_TOL && a1.phi > a2.phi + ANGLE_TOL) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest tested ε ≤ `eps_max` such that geodesics between curve points
/// with parameters in (s₀ − ε, s₀ + ε) stay on the declared side.
pub fn local_geodesic_containment(
    m: &ModelSurface,
    c: &ModelCurve,
    s0: f64,
    side: InteriorSide,
    eps_max: f64,
) -> Result<f64, HypError> {
    let sign = match side {
        InteriorSide::Left => 1.0,
        InteriorSide::Right => -1.0,
    };
    let kbar = sign * signed_geodesic_curvature(m, c, s0)?;
    if !(kbar > 1e-7) {
        return Err(HypError::NotLocallyConvex(kbar));
    }
    let grid = 8;
    let mut eps = eps_max;
    for _ in 0..30 {
        let mut ok = true;
        'outer: for i in 0..=grid {
            let s1 = s0 - eps + 2.0 * eps * i as f64 / grid as f64;
            for j in i + 1..=grid {
                let s2 = s0 - eps + 2.0 * eps * j as f64 / grid as f64;
                if !chord_on_side(m, c, s1, s2, sign, eps)? {
                    ok = false;
                    break 'outer;
                }
            }
        }
        if ok {
            return Ok(eps);
        }
        eps *= 0.5;
    }
    Ok(0.0)
}

fn chord_on_side(m: &ModelSurface, c: &ModelCurve, s1: f64, s2: f64, sign: f64, eps: f64) -> Result<bool, HypError> {
    let p = c.point(m, s1)?;
    let v = m.log_map(p, c.point(m, s2)?)?;
    let (lo, hi) = c.domain();
    for tau in [0.25, 0.5, 0.75] {
        let q = m.exp_map(p, v * tau)?;
        let (u, _) = golden_section_min(
            |u| c.point(m, u).and_then(|r| m.distance(r, q)).unwrap_or(f64::INFINITY),
            (s1.min(s2) - eps).max(lo),
            (s1.max(s2) + eps).min(hi),
            1e-12,
        );
        let r = c.point(m, u)?;
        if r == q {
            continue;
        }
        let side = unit_tangent(m, c, u)?.cross(m.log_map(r, q)?);
        if sign * side < -1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Interior angles of the geodesic triangle pqr at p, q and r.
pub fn triangle_angles(m: &ModelSurface, p: Vec2, q: Vec2, r: Vec2) -> Result<[f64; 3], HypError> {
    let at = |a: Vec2, b: Vec2, c: Vec2| -> Result<f64, HypError> { Ok(angle_between(m.log_map(a, b)?, m.log_map(a, c)?)) };
    Ok([at(p, q, r)?, at(q, r, p)?, at(r, p, q)?])
}

/// Area of the geodesic triangle pqr, computed independently of its angles.
///
/// After moving p to the origin the two sides through p are radial, so by
/// Green's theorem with the primitive 2(x dy − y dx)/(a²(1 − r²)) of the
/// area form only the side qr contributes.
pub fn triangle_area(m: &ModelSurface, p: Vec2, q: Vec2, r: Vec2) -> Result<f64, HypError> {
    for v in [p, q, r] {
        m.check(v)?;
    }
    if m.is_flat() {
        return Ok(0.5 * (q - p).cross(r - p).abs());
    }
    let a = m.a();
    let (q0, r0) = (to_origin(cx(p), cx(q)), to_origin(cx(p), cx(r)));
    // Side q0 → r0 as the image of a radial segment from the origin.
    let w = to_origin(q0, r0);
    let d = 2.0 / a * w.norm().atanh();
    if d == 0.0 {
        return Ok(0.0);
    }
    let u = w / w.norm();
    let one = C::new(1.0, 0.0);
    let q0_sq = 1.0 - q0.norm_sqr();
    let integrand = |tau: f64| {
        let th = (0.5 * a * d * tau).tanh();
        let wt = u * th;
        let dwt = u * (0.5 * a * d * (1.0 - th * th));
        let den = one + q0.conj() * wt;
        let z = (wt + q0) / den;
        let dz = q0_sq / (den * den) * dwt;
        // 1 − |z|² in a form that stays accurate near the ideal boundary.
        let one_minus = q0_sq * (1.0 - th * th) / den.norm_sqr();
        2.0 * (z.conj() * dz).im / (a * a * one_minus)
    };
    Ok(adaptive_simpson(&integrand, 0.0, 1.0, 1e-13).abs())
}

/// One row of a derivative suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeRow {
    /// Curve family and quantity, e.g. `circle:theta_plus`.
    pub family: String,
    pub rho: Option<f64>,
    pub k0: f64,
    pub fd: f64,
    pub analytic: f64,
    pub err: f64,
}

/// Checks dθ⁺/dt(0) = k/2 and dφ/dt(0) = k on geodesics, circles of the
/// given radii and the horocycle, for every curvature in `k0s`.
pub fn derivative_suite(k0s: &[f64], rhos: &[f64], steps: &[f64]) -> Result<Vec<DerivativeRow>, HypError> {
    let mut rows = Vec::new();
    for &k0 in k0s {
        let m = ModelSurface::new(k0)?;
        let mut curves: Vec<(ModelCurve, Option<f64>, f64)> =
            vec![(ModelCurve::Geodesic { start: Vec2::new(0.1, -0.05), angle: 0.4 }, None, 0.3)];
        for &rho in rhos {
            curves.push((ModelCurve::Circle { center: Vec2::ZERO, radius: rho, phase: 0.0 }, Some(rho), 0.3));
        }
        curves.push((ModelCurve::Horocycle, None, 0.2));
        for (c, rho, s) in curves {
            let chk = derivative_check(&m, &c, s, steps)?;
            let k = c.analytic_curvature(&m, s).abs();
            for (q, fd, an) in [("theta_plus", chk.fd_slope_theta_plus, 0.5 * k), ("phi", chk.fd_slope_phi, k)] {
                rows.push(DerivativeRow {
                    family: format!("{}:{q}", c.family()),
                    rho,
                    k0,
                    fd,
                    analytic: an,
                    err: (fd - an).abs(),
                });
            }
        }
    }
    Ok(rows)
}

/// CSV: `family,rho,k0,fd,analytic,err`.
pub fn write_derivative_csv<W: Write>(rows: &[DerivativeRow], w: W) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["family", "rho", "k0", "fd", "analytic", "err"])?;
    for r in rows {
        wr.write_record([
            r.family.clone(),
            r.rho.map(fmt_num).unwrap_or_default(),
            fmt_num(r.k0),
            fmt_num(r.fd),
            fmt_num(r.analytic),
            format!("{:.3e}", r.err),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
