use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::format::*;
use super::{invalid, ScenarioError};
use crate::approximation::Window;
use crate::cat_compare::{Anchor, AuditRegion};
use crate::curves::{BoundaryCurve, CurvatureProfile};
use crate::domains::{make_domain, BoundaryLoop, Domain, GlueArc, LoopPiece};
use crate::geodesics::{GeodesicSpace, Side, TaggedPoint};
use crate::geom::Vec2;
use crate::gluing::{glue_with_grid, GluedSurface};
use crate::Location;

/// Everything a scenario's checks operate on.
#[derive(Debug)]
pub struct Geometry {
    pub domains: Vec<(String, Arc<Domain>)>,
    pub surface: Option<GluedSurface>,
    pub window: Option<Window>,
    pub h: f64,
}

fn geometry_err(e: impl std::fmt::Display) -> ScenarioError {
    ScenarioError::GeometryInvalid(e.to_string())
}

fn build_loop(spec: &LoopSpec, field: &str) -> Result<BoundaryLoop, ScenarioError> {
    let start = Vec2::new(spec.start[0], spec.start[1]);
    let mut p = start;
    let mut heading = spec.heading;
    let mut pieces = Vec::new();
    for (i, piece) in spec.pieces.iter().enumerate() {
        let field = format!("{field}.pieces[{i}]");
        let (curve, clip) = match piece {
            PieceSpec::Turn { angle } => {
                heading += angle;
                continue;
            }
            PieceSpec::Segment { to, x, y, close, clip } => {
                let target = match (to, close) {
                    (Some(t), false) if x.is_none() && y.is_none() => Vec2::new(t[0], t[1]),
                    (None, true) if x.is_none() && y.is_none() => start,
                    (None, false) if x.is_some() || y.is_some() => Vec2::new(x.unwrap_or(p.x), y.unwrap_or(p.y)),
                    _ => return Err(invalid(field, "a segment needs exactly one of `to`, `close`, or `x`/`y`")),
                };
                if target.dist(p) == 0.0 {
                    return Err(invalid(field, "zero-length segment"));
                }
                (BoundaryCurve::segment(p, target).map_err(|e| invalid(&field, e.to_string()))?, *clip)
            }
            PieceSpec::Arc { radius, angle, clip } => {
                (BoundaryCurve::arc(p, heading, *radius, *angle).map_err(|e| invalid(&field, e.to_string()))?, *clip)
            }
            PieceSpec::Profile { s, kappa, clip } => {
                let prof = CurvatureProfile::tabulated(s.clone(), kappa.clone()).map_err(|e| invalid(&field, e.to_string()))?;
                (profile_curve(prof, p, heading).map_err(|e| invalid(&field, e))?, *clip)
            }
            PieceSpec::Polynomial { length, coeffs, clip } => {
                let prof =
                    CurvatureProfile::polynomial(0.0, *length, coeffs.clone()).map_err(|e| invalid(&field, e.to_string()))?;
                (profile_curve(prof, p, heading).map_err(|e| invalid(&field, e))?, *clip)
            }
        };
        p = curve.end_point();
        heading = curve.end_angle();
        pieces.push(if clip { LoopPiece::clip(curve) } else { LoopPiece::new(curve) });
    }
    BoundaryLoop::new(pieces).map_err(geometry_err)
}

fn profile_curve(prof: CurvatureProfile, p: Vec2, heading: f64) -> Result<BoundaryCurve, String> {
    let kmax = prof.max_abs_kappa();
    let tol = if kmax > 0.0 { (0.1 / kmax).min(1e-3) } else { 1e-3 };
    BoundaryCurve::build(prof, p, heading, tol).map_err(|e| e.to_string())
}

/// Builds the domains and the glued surface at resolution `h`.
pub fn build_geometry(sc: &Scenario, h: f64) -> Result<Geometry, ScenarioError> {
    let mut domains = Vec::with_capacity(sc.domains.len());
    for (i, d) in sc.domains.iter().enumerate() {
        let loops = d
            .loops
            .iter()
            .enumerate()
            .map(|(j, l)| build_loop(l, &format!("domains[{i}].loops[{j}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let dom = make_domain(loops, h).map_err(|e| ScenarioError::GeometryInvalid(format!("domain `{}`: {e}", d.name)))?;
        domains.push((d.name.clone(), Arc::new(dom)));
    }
    let surface = match &sc.glue {
        None => None,
        Some(g) => {
            let arc = |a: &ArcSpec| -> Result<GlueArc, ScenarioError> {
                let d = domains.iter().find(|(n, _)| *n == a.domain).map(|(_, d)| d.clone()).ok_or_else(|| {
                    invalid("glue", format!("no domain named `{}`", a.domain))
                })?;
                GlueArc::new(d, a.loop_index, a.start, a.length, a.reversed).map_err(geometry_err)
            };
            let (aa, ab) = (arc(&g.a)?, arc(&g.b)?);
            let grid = sc.numerics.grid_step.unwrap_or(aa.length() / 1024.0);
            Some(glue_with_grid(aa, ab, sc.numerics.portals, g.enforce, grid).map_err(geometry_err)?)
        }
    };
    let window = sc.window.map(|w| Window { center: w.center, radius: w.radius });
    Ok(Geometry { domains, surface, window, h })
}

/// Interior unit normal of the seam at σ(s) on `side`.
pub fn seam_normal(s: &GluedSurface, side: Side, t: f64) -> Vec2 {
    match side {
        Side::A => s.arc_a().tangent(t).perp(),
        Side::B => -s.arc_b().tangent(t).perp(),
    }
}

/// A random point of the band on `side`, resampled until it is interior.
pub fn sample_band(s: &GluedSurface, band: &SeamBand, side: Side, rng: &mut ChaCha8Rng) -> Option<TaggedPoint> {
    let len = s.arc_a().length();
    let lo = band.lo.unwrap_or(0.0).clamp(0.0, len);
    let hi = band.hi.unwrap_or(len).clamp(lo, len);
    for _ in 0..1000 {
        let t = lo + (hi - lo) * rng.gen::<f64>();
        let off = band.min_offset + (band.max_offset - band.min_offset) * rng.gen::<f64>();
        let p = TaggedPoint::new(side, s.seam_point(side, t) + seam_normal(s, side, t) * off);
        if s.classify(&p) == Location::Interior {
            return Some(p);
        }
    }
    None
}

/// Evenly spaced seam anchors over `[lo, hi]`.
pub fn seam_region(s: &GluedSurface, count: usize, lo: Option<f64>, hi: Option<f64>, radius: f64) -> AuditRegion {
    let len = s.arc_a().length();
    let lo = lo.unwrap_or(0.0).clamp(0.0, len);
    let hi = hi.unwrap_or(len).clamp(lo, len);
    let anchors = (0..count.max(1))
        .map(|i| {
            let t = if count <= 1 { 0.5 * (lo + hi) } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 };
            Anchor { a: Some(s.seam_point(Side::A, t)), b: Some(s.seam_point(Side::B, t)) }
        })
        .collect();
    AuditRegion { anchors, radius }
}

pub fn tagged(p: &PointSpec) -> TaggedPoint {
    let side = match p.side {
        SideName::A => Side::A,
        SideName::B => Side::B,
    };
    TaggedPoint::new(side, p.point())
}
