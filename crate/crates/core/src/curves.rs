//! Arc-length parametrized planar curves reconstructed from signed curvature.
//!
//! A [`BoundaryCurve`] is obtained by integrating the planar Frenet system
//! `θ' = κ(s)`, `p' = (cos θ, sin θ)` with an error-controlled RK4 scheme and
//! caching a dense sample table. Evaluation between samples uses cubic Hermite
//! interpolation with the exact derivatives known from the Frenet relation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{adaptive_simpson, MonotoneCubic, Vec2};

/// Absolute tolerance of the Frenet integration and of curvature quadrature.
pub const QUADRATURE_TOL: f64 = 1e-9;

/// Largest step of the cached sample table; keeps Hermite interpolation
/// errors near 1e-11 for unit curvature.
const MAX_SAMPLE_STEP: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("curvature is not finite at s = {s}")]
    NonFiniteCurvature { s: f64 },
    #[error("tolerance {tol} exceeds one tenth of the minimum radius of curvature ({limit})")]
    ToleranceTooCoarse { tol: f64, limit: f64 },
    #[error("parameter {s} outside [{lo}, {hi}]")]
    ParameterOutOfRange { s: f64, lo: f64, hi: f64 },
    #[error("invalid curvature profile: {0}")]
    InvalidProfile(String),
}

/// Which side of the tangent the domain interior lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteriorSide {
    Left,
    Right,
}

/// How κ(s) is supplied.
#[derive(Clone, Debug, PartialEq)]
pub enum ProfileKind {
    Constant(f64),
    /// `values[i]` holds on `[breaks[i-1], breaks[i])`, with the interval ends
    /// as implicit outer breaks.
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<f64> },
    /// Coefficients of a polynomial in `s`, lowest degree first.
    Polynomial(Vec<f64>),
    Tabulated(MonotoneCubic),
}

/// Signed curvature as a function of arc length on a closed interval J.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureProfile {
    lo: f64,
    hi: f64,
    kind: ProfileKind,
}

impl CurvatureProfile {
    pub fn constant(lo: f64, hi: f64, kappa: f64) -> Result<Self, CurveError> {
        Self::new(lo, hi, ProfileKind::Constant(kappa))
    }

    pub fn piecewise_constant(lo: f64, hi: f64, breaks: Vec<f64>, values: Vec<f64>) -> Result<Self, CurveError> {
        Self::new(lo, hi, ProfileKind::PiecewiseConstant { breaks, values })
    }

    pub fn polynomial(lo: f64, hi: f64, coeffs: Vec<f64>) -> Result<Self, CurveError> {
        Self::new(lo, hi, ProfileKind::Polynomial(coeffs))
    }

    /// Tabulated profile; the table must be strictly increasing and cover J.
    pub fn tabulated(s: Vec<f64>, kappa: Vec<f64>) -> Result<Self, CurveError> {
        let (lo, hi) = match (s.first(), s.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(CurveError::InvalidProfile("empty table".into())),
        };
        let interp = MonotoneCubic::new(s, kappa)
            .ok_or_else(|| CurveError::InvalidProfile("table needs >= 2 strictly increasing parameters".into()))?;
        Self::new(lo, hi, ProfileKind::Tabulated(interp))
    }

    pub fn new(lo: f64, hi: f64, kind: ProfileKind) -> Result<Self, CurveError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(CurveError::InvalidProfile(format!("bad interval [{lo}, {hi}]")));
        }
        match &kind {
            ProfileKind::PiecewiseConstant { breaks, values } => {
                if values.len() != breaks.len() + 1 {
                    return Err(CurveError::InvalidProfile("need one more value than breaks".into()));
                }
                let mut prev = lo;
                for &b in breaks {
                    if !(b > prev && b < hi) {
                        return Err(CurveError::InvalidProfile("breaks must increase strictly inside J".into()));
                    }
                    prev = b;
                }
            }
            ProfileKind::Polynomial(c) if c.is_empty() => {
                return Err(CurveError::InvalidProfile("empty polynomial".into()));
            }
            _ => {}
        }
        let p = CurvatureProfile { lo, hi, kind };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<(), CurveError> {
        let n = 256;
        for i in 0..=n {
            let s = self.lo + (self.hi - self.lo) * i as f64 / n as f64;
            if !self.kappa(s).is_finite() {
                return Err(CurveError::NonFiniteCurvature { s });
            }
        }
        for s in self.knots() {
            if !self.kappa(s).is_finite() {
                return Err(CurveError::NonFiniteCurvature { s });
            }
        }
        Ok(())
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn kappa(&self, s: f64) -> f64 {
        match &self.kind {
            ProfileKind::Constant(k) => *k,
            ProfileKind::PiecewiseConstant { breaks, values } => values[breaks.partition_point(|&b| b <= s)],
            ProfileKind::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &a| acc * s + a),
            ProfileKind::Tabulated(m) => m.eval(s),
        }
    }

    /// Interior parameters where κ may fail to be smooth.
    pub fn knots(&self) -> Vec<f64> {
        match &self.kind {
            ProfileKind::PiecewiseConstant { breaks, .. } => breaks.clone(),
            ProfileKind::Tabulated(m) => m.xs().iter().copied().filter(|&x| x > self.lo && x < self.hi).collect(),
            _ => Vec::new(),
        }
    }

    /// Supremum of |κ| over J, estimated on a fine grid plus the knots.
    pub fn max_abs_kappa(&self) -> f64 {
        match &self.kind {
            ProfileKind::Constant(k) => k.abs(),
            ProfileKind::PiecewiseConstant { values, .. } => values.iter().fold(0.0, |m, v| m.max(v.abs())),
            _ => {
                let n = 2048;
                let mut m: f64 = 0.0;
                for i in 0..=n {
                    let s = self.lo + (self.hi - self.lo) * i as f64 / n as f64;
                    m = m.max(self.kappa(s).abs());
                }
                for s in self.knots() {
                    m = m.max(self.kappa(s).abs());
                }
                m
            }
        }
    }

    /// The same profile restricted to `[a, b] ⊆ J`.
    pub fn restrict(&self, a: f64, b: f64) -> Result<Self, CurveError> {
        let kind = match &self.kind {
            ProfileKind::PiecewiseConstant { breaks, values } => {
                let first = breaks.partition_point(|&x| x <= a);
                let last = breaks.partition_point(|&x| x < b);
                ProfileKind::PiecewiseConstant {
                    breaks: breaks[first..last].to_vec(),
                    values: values[first..=last].to_vec(),
                }
            }
            other => other.clone(),
        };
        CurvatureProfile::new(a, b, kind)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Sample {
    s: f64,
    p: Vec2,
    theta: f64,
    kappa: f64,
}

/// An arc-length parametrized planar curve with a cached sample table.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryCurve {
    profile: CurvatureProfile,
    initial_point: Vec2,
    initial_angle: f64,
    samples: Vec<Sample>,
    hausdorff_tolerance: f64,
}

/// Reconstructs a curve from its curvature profile.
///
/// `tol` is the Hausdorff tolerance of the cached polyline; it must not exceed
/// one tenth of the minimum radius of curvature.
pub fn build_from_curvature_profile(
    profile: CurvatureProfile,
    initial_point: Vec2,
    initial_tangent: Vec2,
    tol: f64,
) -> Result<BoundaryCurve, CurveError> {
    BoundaryCurve::build(profile, initial_point, initial_tangent.angle(), tol)
}

impl BoundaryCurve {
    pub fn build(profile: CurvatureProfile, p0: Vec2, theta0: f64, tol: f64) -> Result<Self, CurveError> {
        let kmax = profile.max_abs_kappa();
        check_tolerance(tol, kmax)?;
        let mut max_step = MAX_SAMPLE_STEP;
        if kmax > 0.0 {
            max_step = max_step.min(0.05 / kmax).min((8.0 * tol / kmax).sqrt());
        }
        let (lo, hi) = profile.interval();
        let mut stops = profile.knots();
        stops.push(hi);

        let kap = |s: f64| -> Result<f64, CurveError> {
            let k = profile.kappa(s);
            if k.is_finite() {
                Ok(k)
            } else {
                Err(CurveError::NonFiniteCurvature { s })
            }
        };

        let mut samples = vec![Sample { s: lo, p: p0, theta: theta0, kappa: kap(lo)? }];
        let mut s = lo;
        let mut state = (theta0, p0);
        for &stop in &stops {
            // Integrate each smooth stretch separately so that knots are sample
            // points and the RK4 error model applies on every step.
            let n = ((stop - s) / max_step).ceil().max(1.0) as usize;
            let nominal = (stop - s) / n as f64;
            let mut step = nominal;
            while s < stop {
                step = step.min(stop - s);
                let full = rk4_step(&profile, s, state, step);
                let half = rk4_step(&profile, s, state, 0.5 * step);
                let two_half = rk4_step(&profile, s + 0.5 * step, half, 0.5 * step);
                let err = (full.0 - two_half.0).abs().max((full.1 - two_half.1).norm());
                if err > QUADRATURE_TOL * step && step > 1e-9 {
                    step *= 0.5;
                    continue;
                }
                // Local extrapolation of the two half steps.
                let theta = two_half.0 + (two_half.0 - full.0) / 15.0;
                let p = two_half.1 + (two_half.1 - full.1) / 15.0;
                let next_s = if stop - (s + step) < 1e-12 * (1.0 + stop.abs()) { stop } else { s + step };
                s = next_s;
                state = (theta, p);
                if !(theta.is_finite() && p.is_finite()) {
                    return Err(CurveError::NonFiniteCurvature { s });
                }
                samples.push(Sample { s, p, theta, kappa: kap(s)? });
                step = (step * 2.0).min(nominal);
            }
        }
        Ok(BoundaryCurve { profile, initial_point: p0, initial_angle: theta0, samples, hausdorff_tolerance: tol })
    }

    /// Straight segment from `a` to `b`.
    pub fn segment(a: Vec2, b: Vec2) -> Result<Self, CurveError> {
        let len = a.dist(b);
        let profile = CurvatureProfile::constant(0.0, len, 0.0)?;
        Self::build(profile, a, (b - a).angle(), 1e-3)
    }

    /// Circular arc of the given radius turning by `angle` (positive = left).
    pub fn arc(p0: Vec2, tangent_angle: f64, radius: f64, angle: f64) -> Result<Self, CurveError> {
        if !(radius > 0.0) || angle == 0.0 {
            return Err(CurveError::InvalidProfile("arc needs positive radius and nonzero angle".into()));
        }
        let len = radius * angle.abs();
        let kappa = angle.signum() / radius;
        let profile = CurvatureProfile::constant(0.0, len, kappa)?;
        Self::build(profile, p0, tangent_angle, (0.05 * radius).min(1e-3))
    }

    pub fn profile(&self) -> &CurvatureProfile {
        &self.profile
    }

    pub fn interval(&self) -> (f64, f64) {
        self.profile.interval()
    }

    pub fn length(&self) -> f64 {
        self.profile.length()
    }

    pub fn hausdorff_tolerance(&self) -> f64 {
        self.hausdorff_tolerance
    }

    pub fn initial_point(&self) -> Vec2 {
        self.initial_point
    }

    pub fn initial_angle(&self) -> f64 {
        self.initial_angle
    }

    pub fn start_point(&self) -> Vec2 {
        self.samples[0].p
    }

    pub fn end_point(&self) -> Vec2 {
        self.samples[self.samples.len() - 1].p
    }

    pub fn start_angle(&self) -> f64 {
        self.samples[0].theta
    }

    pub fn end_angle(&self) -> f64 {
        self.samples[self.samples.len() - 1].theta
    }

    /// The `(s, point, tangent angle)` sample table.
    pub fn cached_polyline(&self) -> Vec<(f64, Vec2, f64)> {
        self.samples.iter().map(|q| (q.s, q.p, q.theta)).collect()
    }

    fn check_param(&self, s: f64) -> Result<f64, CurveError> {
        let (lo, hi) = self.interval();
        let slack = 1e-12 * (1.0 + hi.abs().max(lo.abs()));
        if !(s >= lo - slack && s <= hi + slack) {
            return Err(CurveError::ParameterOutOfRange { s, lo, hi });
        }
        Ok(s.clamp(lo, hi))
    }

    /// Point and tangent angle at `s`.
    pub fn evaluate_angle(&self, s: f64) -> Result<(Vec2, f64), CurveError> {
        let s = self.check_param(s)?;
        let n = self.samples.len();
        let i = match self.samples.partition_point(|q| q.s <= s) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let a = &self.samples[i];
        let b = &self.samples[i + 1];
        let h = b.s - a.s;
        let t = (s - a.s) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let da = Vec2::from_angle(a.theta);
        let db = Vec2::from_angle(b.theta);
        let p = a.p * h00 + da * (h10 * h) + b.p * h01 + db * (h11 * h);
        let theta = a.theta * h00 + a.kappa * h10 * h + b.theta * h01 + b.kappa * h11 * h;
        Ok((p, theta))
    }

    /// Point and unit tangent at `s`.
    pub fn evaluate(&self, s: f64) -> Result<(Vec2, Vec2), CurveError> {
        let (p, theta) = self.evaluate_angle(s)?;
        Ok((p, Vec2::from_angle(theta)))
    }

    /// κ(s) measured against the normal on the declared interior side.
    pub fn signed_curvature(&self, s: f64, side: InteriorSide) -> Result<f64, CurveError> {
        let s = self.check_param(s)?;
        let k = self.profile.kappa(s);
        Ok(match side {
            InteriorSide::Left => k,
            InteriorSide::Right => -k,
        })
    }

    /// ∫ κ over `[s0, s1]` by adaptive quadrature, split at the profile knots.
    pub fn turning_angle(&self, s0: f64, s1: f64) -> Result<f64, CurveError> {
        let a = self.check_param(s0)?;
        let b = self.check_param(s1)?;
        if a > b {
            return Err(CurveError::ParameterOutOfRange { s: s0, lo: self.interval().0, hi: s1 });
        }
        let mut cuts = vec![a];
        cuts.extend(self.profile.knots().into_iter().filter(|&k| k > a && k < b));
        cuts.push(b);
        let f = |s: f64| self.profile.kappa(s);
        Ok(cuts.windows(2).map(|w| adaptive_simpson(&f, w[0], w[1], 1e-13)).sum())
    }

    /// Vertices of an inscribed polyline within Hausdorff distance `tol`.
    pub fn polyline(&self, tol: f64) -> Result<Vec<Vec2>, CurveError> {
        Ok(self.polyline_with_params(tol)?.into_iter().map(|(_, p)| p).collect())
    }

    /// As [`BoundaryCurve::polyline`], also returning the parameter of each vertex.
    pub fn polyline_with_params(&self, tol: f64) -> Result<Vec<(f64, Vec2)>, CurveError> {
        let kmax = self.profile.max_abs_kappa();
        check_tolerance(tol, kmax)?;
        let (lo, hi) = self.interval();
        let n = if kmax == 0.0 {
            1
        } else {
            // Sagitta of a chord spanning Δs is at most κ Δs² / 8.
            let ds = (8.0 * tol / kmax).sqrt();
            ((hi - lo) / ds).ceil().max(1.0) as usize
        };
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let s = if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 };
            out.push((s, self.evaluate(s)?.0));
        }
        Ok(out)
    }

    /// The sub-curve over `[a, b]`, sharing this curve's samples.
    pub fn restrict(&self, a: f64, b: f64) -> Result<Self, CurveError> {
        let a = self.check_param(a)?;
        let b = self.check_param(b)?;
        let profile = self.profile.restrict(a, b)?;
        let (pa, ta) = self.evaluate_angle(a)?;
        let (pb, tb) = self.evaluate_angle(b)?;
        let mut samples = vec![Sample { s: a, p: pa, theta: ta, kappa: profile.kappa(a) }];
        samples.extend(self.samples.iter().filter(|q| q.s > a + 1e-12 && q.s < b - 1e-12).copied());
        samples.push(Sample { s: b, p: pb, theta: tb, kappa: profile.kappa(b) });
        Ok(BoundaryCurve {
            profile,
            initial_point: pa,
            initial_angle: ta,
            samples,
            hausdorff_tolerance: self.hausdorff_tolerance,
        })
    }
}

fn check_tolerance(tol: f64, kmax: f64) -> Result<(), CurveError> {
    let limit = if kmax > 0.0 { 0.1 / kmax } else { f64::INFINITY };
    if !(tol > 0.0) || tol > limit {
        return Err(CurveError::ToleranceTooCoarse { tol, limit });
    }
    Ok(())
}

fn rk4_step(profile: &CurvatureProfile, s: f64, (theta, p): (f64, Vec2), h: f64) -> (f64, Vec2) {
    let k = |s: f64| profile.kappa(s);
    let k1t = k(s);
    let k1p = Vec2::from_angle(theta);
    let k2t = k(s + 0.5 * h);
    let k2p = Vec2::from_angle(theta + 0.5 * h * k1t);
    let k3t = k2t;
    let k3p = Vec2::from_angle(theta + 0.5 * h * k2t);
    let k4t = k(s + h);
    let k4p = Vec2::from_angle(theta + h * k3t);
    let theta_next = theta + h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
    let p_next = p + (k1p + k2p * 2.0 + k3p * 2.0 + k4p) * (h / 6.0);
    (theta_next, p_next)
}
