//! Planar domains bounded by loops of boundary curves.
//!
//! Loops keep the interior on their left: the first loop is the outer boundary
//! (counterclockwise), every further loop is a hole (clockwise). Each domain
//! carries a polyline discretization at tolerance `h`; points within `h` of it
//! classify as [`Location::Boundary`].

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::{BoundaryCurve, CurveError};
use crate::geom::{point_segment_distance, segment_hits, segments_intersect, signed_area, Vec2};

/// Band within which κ_A + κ_B counts as zero.
pub const EQUALITY_TOL: f64 = 1e-10;

/// Cap for [`local_chord_containment`].
pub const CHORD_EPS_MAX: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("loop {loop_index} is not closed within h (gap {gap})")]
    NotClosed { loop_index: usize, gap: f64 },
    #[error("loop {loop_index} intersects itself")]
    SelfIntersecting { loop_index: usize },
    #[error("loops {first} and {second} intersect")]
    LoopsIntersect { first: usize, second: usize },
    #[error("loop {loop_index} has the wrong orientation (signed area {area})")]
    BadOrientation { loop_index: usize, area: f64 },
    #[error("boundary is not locally convex toward the interior (signed curvature {kappa})")]
    NotLocallyConvex { kappa: f64 },
    #[error("glue arcs differ in length: {len_a} vs {len_b}")]
    LengthMismatch { len_a: f64, len_b: f64 },
    #[error("invalid glue arc: {0}")]
    InvalidArc(String),
    #[error("invalid domain input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Result of a membership query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Interior,
    Boundary,
    Exterior,
}

impl Location {
    pub fn is_inside(self) -> bool {
        self != Location::Exterior
    }
}

/// One smooth piece of a boundary loop.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopPiece {
    pub curve: BoundaryCurve,
    /// Pieces that only exist to clip an unbounded domain to a box.
    pub clip: bool,
}

impl LoopPiece {
    pub fn new(curve: BoundaryCurve) -> Self {
        LoopPiece { curve, clip: false }
    }

    pub fn clip(curve: BoundaryCurve) -> Self {
        LoopPiece { curve, clip: true }
    }
}

/// A closed, piecewise-smooth boundary component with a global arc-length
/// parameter `t ∈ [0, length)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryLoop {
    pieces: Vec<LoopPiece>,
    offsets: Vec<f64>,
    length: f64,
}

impl BoundaryLoop {
    pub fn new(pieces: Vec<LoopPiece>) -> Result<Self, DomainError> {
        if pieces.is_empty() {
            return Err(DomainError::Invalid("empty loop".into()));
        }
        let mut offsets = Vec::with_capacity(pieces.len());
        let mut acc = 0.0;
        for p in &pieces {
            offsets.push(acc);
            acc += p.curve.length();
        }
        Ok(BoundaryLoop { pieces, offsets, length: acc })
    }

    pub fn pieces(&self) -> &[LoopPiece] {
        &self.pieces
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn wrap(&self, t: f64) -> f64 {
        let w = t.rem_euclid(self.length);
        if w >= self.length {
            0.0
        } else {
            w
        }
    }

    /// Piece index and local curve parameter for the loop parameter `t`.
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let t = self.wrap(t);
        let i = self.offsets.partition_point(|&o| o <= t).saturating_sub(1);
        let c = &self.pieces[i].curve;
        let lo = c.interval().0;
        (i, (lo + (t - self.offsets[i])).min(c.interval().1))
    }

    pub fn point(&self, t: f64) -> Vec2 {
        let (i, s) = self.locate(t);
        self.pieces[i].curve.evaluate(s).map(|v| v.0).unwrap_or_else(|_| self.pieces[i].curve.end_point())
    }

    /// Unit tangent in the direction of increasing `t`.
    pub fn tangent(&self, t: f64) -> Vec2 {
        let (i, s) = self.locate(t);
        let c = &self.pieces[i].curve;
        c.evaluate(s).map(|v| v.1).unwrap_or_else(|_| Vec2::from_angle(c.end_angle()))
    }

    /// Signed curvature with respect to the interior (left) normal.
    pub fn kappa(&self, t: f64) -> f64 {
        let (i, s) = self.locate(t);
        self.pieces[i].curve.profile().kappa(s)
    }

    /// Exterior (turning) angle at the start of each piece.
    pub fn corner_angles(&self) -> Vec<f64> {
        let n = self.pieces.len();
        (0..n)
            .map(|i| {
                let prev = &self.pieces[(i + n - 1) % n].curve;
                let cur = &self.pieces[i].curve;
                crate::geom::signed_angle(Vec2::from_angle(prev.end_angle()), Vec2::from_angle(cur.start_angle()))
            })
            .collect()
    }

    /// Total turning: ∫ κ over all pieces plus the corner atoms.
    pub fn total_turning(&self) -> Result<f64, CurveError> {
        let mut acc: f64 = self.corner_angles().iter().sum();
        for p in &self.pieces {
            let (a, b) = p.curve.interval();
            acc += p.curve.turning_angle(a, b)?;
        }
        Ok(acc)
    }
}

/// A polyline vertex with its loop parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolyVertex {
    pub p: Vec2,
    pub t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Edge {
    pub a: Vec2,
    pub b: Vec2,
    pub clip: bool,
    lo: Vec2,
    hi: Vec2,
}

impl Edge {
    fn new(a: Vec2, b: Vec2, clip: bool) -> Self {
        Edge {
            a,
            b,
            clip,
            lo: Vec2::new(a.x.min(b.x), a.y.min(b.y)),
            hi: Vec2::new(a.x.max(b.x), a.y.max(b.y)),
        }
    }
}

/// A validated planar domain.
#[derive(Debug)]
pub struct Domain {
    loops: Vec<BoundaryLoop>,
    h: f64,
    polylines: Vec<Vec<PolyVertex>>,
    edges: Vec<Edge>,
    reflex: Vec<Vec2>,
    bbox: (Vec2, Vec2),
    pub(crate) graph: OnceLock<crate::geodesics::VisibilityGraph>,
}

impl Clone for Domain {
    fn clone(&self) -> Self {
        Domain {
            loops: self.loops.clone(),
            h: self.h,
            polylines: self.polylines.clone(),
            edges: self.edges.clone(),
            reflex: self.reflex.clone(),
            bbox: self.bbox,
            graph: OnceLock::new(),
        }
    }
}

/// Validates the loops and discretizes them at tolerance `h`.
pub fn make_domain(loops: Vec<BoundaryLoop>, h: f64) -> Result<Domain, DomainError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(DomainError::Invalid(format!("h must be positive, got {h}")));
    }
    if loops.is_empty() {
        return Err(DomainError::Invalid("a domain needs at least one loop".into()));
    }
    let mut polylines = Vec::with_capacity(loops.len());
    for (li, lp) in loops.iter().enumerate() {
        let n = lp.pieces.len();
        for i in 0..n {
            let gap = lp.pieces[i].curve.end_point().dist(lp.pieces[(i + 1) % n].curve.start_point());
            if gap > h {
                return Err(DomainError::NotClosed { loop_index: li, gap });
            }
        }
        let mut verts = Vec::new();
        for (pi, piece) in lp.pieces.iter().enumerate() {
            let lo = piece.curve.interval().0;
            let pts = piece.curve.polyline_with_params(h)?;
            // The last vertex coincides (within h) with the next piece's first.
            for &(s, p) in &pts[..pts.len() - 1] {
                verts.push(PolyVertex { p, t: lp.offsets[pi] + (s - lo) });
            }
        }
        if verts.len() < 3 {
            return Err(DomainError::Invalid(format!("loop {li} degenerates to fewer than 3 vertices")));
        }
        polylines.push(verts);
    }
    assemble(loops, h, polylines)
}

/// Validates discretized loops and derives edges and reflex vertices.
fn assemble(loops: Vec<BoundaryLoop>, h: f64, polylines: Vec<Vec<PolyVertex>>) -> Result<Domain, DomainError> {
    for (li, poly) in polylines.iter().enumerate() {
        if polyline_self_intersects(poly) {
            return Err(DomainError::SelfIntersecting { loop_index: li });
        }
    }
    for i in 0..polylines.len() {
        for j in i + 1..polylines.len() {
            if polylines_intersect(&polylines[i], &polylines[j]) {
                return Err(DomainError::LoopsIntersect { first: i, second: j });
            }
        }
    }
    for (li, poly) in polylines.iter().enumerate() {
        let pts: Vec<Vec2> = poly.iter().map(|v| v.p).collect();
        let area = signed_area(&pts);
        let ok = if li == 0 { area > 0.0 } else { area < 0.0 };
        if !ok {
            return Err(DomainError::BadOrientation { loop_index: li, area });
        }
    }

    let mut edges = Vec::new();
    let mut reflex = Vec::new();
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (poly, lp) in polylines.iter().zip(&loops) {
        let n = poly.len();
        for i in 0..n {
            let a = poly[i].p;
            let b = poly[(i + 1) % n].p;
            // Each edge belongs to the piece its first vertex starts into.
            let clip = lp.pieces[lp.locate(poly[i].t).0].clip;
            edges.push(Edge::new(a, b, clip));
            lo = Vec2::new(lo.x.min(a.x), lo.y.min(a.y));
            hi = Vec2::new(hi.x.max(a.x), hi.y.max(a.y));
            let prev = poly[(i + n - 1) % n].p;
            let e0 = a - prev;
            let e1 = b - a;
            // Interior on the left: a right turn is a reflex vertex.
            if e0.cross(e1) < -1e-12 * e0.norm() * e1.norm() {
                reflex.push(a);
            }
        }
    }
    Ok(Domain { loops, h, polylines, edges, reflex, bbox: (lo, hi), graph: OnceLock::new() })
}

fn polyline_self_intersects(poly: &[PolyVertex]) -> bool {
    let n = poly.len();
    for i in 0..n {
        let a = poly[i].p;
        let b = poly[(i + 1) % n].p;
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let c = poly[j].p;
            let d = poly[(j + 1) % n].p;
            if a.x.max(b.x) < c.x.min(d.x)
                || c.x.max(d.x) < a.x.min(b.x)
                || a.y.max(b.y) < c.y.min(d.y)
                || c.y.max(d.y) < a.y.min(b.y)
            {
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return true;
            }
        }
    }
    false
}

fn polylines_intersect(p: &[PolyVertex], q: &[PolyVertex]) -> bool {
    let (n, m) = (p.len(), q.len());
    for i in 0..n {
        let a = p[i].p;
        let b = p[(i + 1) % n].p;
        for j in 0..m {
            if segments_intersect(a, b, q[j].p, q[(j + 1) % m].p) {
                return true;
            }
        }
    }
    false
}

impl Domain {
    pub fn loops(&self) -> &[BoundaryLoop] {
        &self.loops
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn polylines(&self) -> &[Vec<PolyVertex>] {
        &self.polylines
    }

    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        self.bbox
    }

    /// Polyline vertices where the interior angle exceeds π.
    pub fn reflex_vertices(&self) -> &[Vec2] {
        &self.reflex
    }

    /// The same loops discretized at a different tolerance.
    pub fn with_h(&self, h: f64) -> Result<Domain, DomainError> {
        make_domain(self.loops.clone(), h)
    }

    /// Rediscretizes a boundary stretch so that its polyline vertices are
    /// exactly `seam` (loop parameter, point), given in the order of increasing
    /// loop parameter starting at the beginning of the stretch.
    ///
    /// Vertices strictly inside the stretch are dropped unless they sit on a
    /// junction between loop pieces (a corner of the boundary).
    pub(crate) fn with_seam_vertices(&self, loop_index: usize, seam: &[(f64, Vec2)]) -> Result<Domain, DomainError> {
        let lp = self
            .loops
            .get(loop_index)
            .ok_or_else(|| DomainError::InvalidArc(format!("no loop {loop_index}")))?;
        let (Some(first), Some(last)) = (seam.first(), seam.last()) else {
            return Ok(self.clone());
        };
        let total = lp.length();
        let t0 = lp.wrap(first.0);
        let rel = |t: f64| (t - t0).rem_euclid(total);
        let span = rel(last.0);
        let eps = 1e-9 * (1.0 + total);
        let junction = |t: f64| {
            lp.offsets.iter().any(|&o| {
                let d = (t - o).rem_euclid(total);
                d.min(total - d) <= 1e-12 * (1.0 + total)
            })
        };
        let mut verts: Vec<PolyVertex> = self.polylines[loop_index]
            .iter()
            .filter(|v| {
                let r = rel(v.t);
                let near_seam = seam.iter().any(|&(t, _)| {
                    let d = (v.t - t).rem_euclid(total);
                    d.min(total - d) <= eps
                });
                !near_seam && (r >= span || junction(v.t))
            })
            .copied()
            .collect();
        verts.extend(seam.iter().map(|&(t, p)| PolyVertex { p, t: lp.wrap(t) }));
        verts.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
        let mut polylines = self.polylines.clone();
        polylines[loop_index] = verts;
        let mut d = assemble(self.loops.clone(), self.h, polylines)?;
        d.graph = OnceLock::new();
        Ok(d)
    }

    /// Signed area of the discretized domain (outer minus holes).
    pub fn area(&self) -> f64 {
        self.polylines
            .iter()
            .map(|poly| signed_area(&poly.iter().map(|v| v.p).collect::<Vec<_>>()))
            .sum()
    }

    /// Crossing-number classification with an `h`-wide boundary band.
    pub fn contains(&self, p: Vec2) -> Location {
        let h = self.h;
        let mut inside = false;
        for e in &self.edges {
            if p.x >= e.lo.x - h && p.x <= e.hi.x + h && p.y >= e.lo.y - h && p.y <= e.hi.y + h
                && point_segment_distance(p, e.a, e.b) <= h
            {
                return Location::Boundary;
            }
            if (e.a.y > p.y) != (e.b.y > p.y) {
                let x = e.a.x + (p.y - e.a.y) / (e.b.y - e.a.y) * (e.b.x - e.a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        if inside {
            Location::Interior
        } else {
            Location::Exterior
        }
    }

    /// Whether the segment `[p, q]` stays inside the domain or within its
    /// boundary band.
    ///
    /// The segment is cut at every contact with the discretized boundary; each
    /// piece is classified at its midpoint, and pieces running inside the band
    /// are additionally sampled at step `h`.
    pub fn segment_admissible(&self, p: Vec2, q: Vec2) -> bool {
        let len = p.dist(q);
        if len == 0.0 {
            return self.contains(p).is_inside();
        }
        let lo = Vec2::new(p.x.min(q.x), p.y.min(q.y));
        let hi = Vec2::new(p.x.max(q.x), p.y.max(q.y));
        let mut ts = Vec::with_capacity(8);
        ts.push(0.0);
        ts.push(1.0);
        for e in &self.edges {
            if e.hi.x < lo.x || e.lo.x > hi.x || e.hi.y < lo.y || e.lo.y > hi.y {
                continue;
            }
            segment_hits(p, q, e.a, e.b, &mut ts);
        }
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let min_piece = 1e-12 / len.max(1e-300);
        for w in ts.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            if t1 - t0 <= min_piece {
                continue;
            }
            match self.contains(p.lerp(q, 0.5 * (t0 + t1))) {
                Location::Exterior => return false,
                Location::Boundary => {
                    let piece = (t1 - t0) * len;
                    if piece > self.h {
                        let m = (piece / self.h).ceil() as usize;
                        for j in 1..m {
                            let t = t0 + (t1 - t0) * j as f64 / m as f64;
                            if self.contains(p.lerp(q, t)) == Location::Exterior {
                                return false;
                            }
                        }
                    }
                }
                Location::Interior => {}
            }
        }
        true
    }

    /// Whether the segment comes within `h` of a clipping edge.
    pub fn touches_clip(&self, p: Vec2, q: Vec2) -> bool {
        self.edges
            .iter()
            .any(|e| e.clip && crate::geom::segment_segment_distance(p, q, e.a, e.b) <= self.h)
    }
}

/// A closed sub-arc of one boundary loop, parametrized by arc length on
/// `J = [0, length]`.
///
/// With `reversed = false` the arc runs along the loop direction (interior on
/// the left of σ'); with `reversed = true` it runs against it (interior on the
/// right).
#[derive(Clone, Debug)]
pub struct GlueArc {
    parent: Arc<Domain>,
    loop_index: usize,
    start: f64,
    length: f64,
    reversed: bool,
}

impl GlueArc {
    pub fn new(parent: Arc<Domain>, loop_index: usize, start: f64, length: f64, reversed: bool) -> Result<Self, DomainError> {
        let lp = parent
            .loops
            .get(loop_index)
            .ok_or_else(|| DomainError::InvalidArc(format!("no loop {loop_index}")))?;
        if !(length > 0.0 && length <= lp.length() * (1.0 + 1e-12)) {
            return Err(DomainError::InvalidArc(format!("length {length} not in (0, {}]", lp.length())));
        }
        Ok(GlueArc { parent, loop_index, start, length, reversed })
    }

    pub fn parent(&self) -> &Arc<Domain> {
        &self.parent
    }

    pub fn loop_index(&self) -> usize {
        self.loop_index
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn reversed(&self) -> bool {
        self.reversed
    }

    fn boundary(&self) -> &BoundaryLoop {
        &self.parent.loops[self.loop_index]
    }

    /// Loop parameter of σ(s).
    pub fn loop_param(&self, s: f64) -> f64 {
        let t = if self.reversed { self.start - s } else { self.start + s };
        self.boundary().wrap(t)
    }

    /// Piece index and local curve parameter of σ(s).
    ///
    /// At loop corners the piece that the arc actually runs along is chosen by
    /// probing a short distance into the arc.
    fn piece_param(&self, s: f64) -> (usize, f64) {
        let lp = self.boundary();
        let t = if self.reversed { self.start - s } else { self.start + s };
        let into_arc = if s >= self.length { -1.0 } else { 1.0 };
        let dir = if self.reversed { -into_arc } else { into_arc };
        let delta = 1e-9 * (1.0 + self.length);
        let probe = lp.wrap(t + dir * delta);
        let (i, _) = lp.locate(probe);
        let c = &lp.pieces[i].curve;
        let (lo, hi) = c.interval();
        let local = lo + (probe - lp.offsets[i]) - dir * delta;
        (i, local.clamp(lo, hi))
    }

    /// σ(s).
    pub fn point(&self, s: f64) -> Vec2 {
        let (i, local) = self.piece_param(s);
        self.boundary().pieces[i].curve.evaluate(local).map(|v| v.0).expect("parameter clamped to the piece")
    }

    /// dσ/ds.
    pub fn tangent(&self, s: f64) -> Vec2 {
        let (i, local) = self.piece_param(s);
        let tan = self.boundary().pieces[i].curve.evaluate(local).map(|v| v.1).expect("parameter clamped to the piece");
        if self.reversed {
            -tan
        } else {
            tan
        }
    }

    /// Signed curvature against the interior normal at σ(s).
    pub fn kappa(&self, s: f64) -> f64 {
        let (i, local) = self.piece_param(s);
        self.boundary().pieces[i].curve.profile().kappa(local)
    }
}

/// Outcome of checking (k1)–(k3) on a grid over J.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub k1_holds: bool,
    pub k2_holds: bool,
    pub k3_holds: bool,
    /// Both curvatures vanish on the whole grid: the flat gluing.
    pub flat_edge_case: bool,
    /// min over the grid of |κ_A| − κ_B.
    pub epsilon_margin: f64,
    pub equality_points: Vec<f64>,
    pub grid_step: f64,
}

impl ConditionReport {
    pub fn all_hold(&self) -> bool {
        self.k1_holds && self.k2_holds && self.k3_holds
    }

    /// Conditions hold, or the flat gluing that is accepted in their place.
    pub fn acceptable(&self) -> bool {
        self.all_hold() || (self.k1_holds && self.k2_holds && self.flat_edge_case)
    }
}

/// Evaluates (k1)–(k3) from curvature samples at the grid parameters `params`.
pub fn conditions_from_samples(params: &[f64], ka: &[f64], kb: &[f64], grid_step: f64) -> ConditionReport {
    let k1 = ka.iter().all(|&k| k <= EQUALITY_TOL);
    let k2 = kb.iter().all(|&k| k >= -EQUALITY_TOL);
    let mut sum_ok = true;
    let mut eq = Vec::new();
    let mut eq_flags = Vec::with_capacity(params.len());
    let mut margin = f64::INFINITY;
    for i in 0..params.len() {
        let sum = ka[i] + kb[i];
        if sum > EQUALITY_TOL {
            sum_ok = false;
        }
        let is_eq = sum.abs() <= EQUALITY_TOL;
        if is_eq {
            eq.push(params[i]);
        }
        eq_flags.push(is_eq);
        margin = margin.min(ka[i].abs() - kb[i]);
    }
    let adjacent_eq = eq_flags.windows(2).any(|w| w[0] && w[1]);
    let flat = ka.iter().chain(kb).all(|k| k.abs() <= EQUALITY_TOL);
    ConditionReport {
        k1_holds: k1,
        k2_holds: k2,
        k3_holds: sum_ok && !adjacent_eq,
        flat_edge_case: flat,
        epsilon_margin: margin,
        equality_points: eq,
        grid_step,
    }
}

/// Checks (k1)–(k3) for two arcs sharing the parameter interval J.
pub fn check_gluing_conditions(arc_a: &GlueArc, arc_b: &GlueArc, grid_step: f64) -> Result<ConditionReport, DomainError> {
    let (la, lb) = (arc_a.length(), arc_b.length());
    if (la - lb).abs() > 1e-12 * la.max(lb) {
        return Err(DomainError::LengthMismatch { len_a: la, len_b: lb });
    }
    if !(grid_step > 0.0) {
        return Err(DomainError::Invalid(format!("grid step must be positive, got {grid_step}")));
    }
    let n = (la / grid_step).ceil().max(1.0) as usize;
    let params: Vec<f64> = (0..=n).map(|i| la * i as f64 / n as f64).collect();
    let ka: Vec<f64> = params.iter().map(|&s| arc_a.kappa(s)).collect();
    let kb: Vec<f64> = params.iter().map(|&s| arc_b.kappa(s)).collect();
    Ok(conditions_from_samples(&params, &ka, &kb, la / n as f64))
}

/// Largest ε ≤ `eps_max` such that every chord between boundary points with
/// parameters in `(t0 − ε, t0 + ε)` lies in the domain.
pub fn local_chord_containment(domain: &Domain, loop_index: usize, t0: f64, eps_max: f64) -> Result<f64, DomainError> {
    let lp = domain
        .loops
        .get(loop_index)
        .ok_or_else(|| DomainError::Invalid(format!("no loop {loop_index}")))?;
    let kappa = lp.kappa(t0);
    if !(kappa > 0.0) {
        return Err(DomainError::NotLocallyConvex { kappa });
    }
    let grid = 12;
    let mut eps = eps_max.min(0.5 * lp.length());
    for _ in 0..40 {
        let ok = (0..=grid).all(|i| {
            let t1 = t0 - eps + 2.0 * eps * i as f64 / grid as f64;
            (i + 1..=grid).all(|j| {
                let t2 = t0 - eps + 2.0 * eps * j as f64 / grid as f64;
                chord_inside(domain, lp.point(t1), lp.point(t2))
            })
        });
        if ok {
            return Ok(eps);
        }
        eps *= 0.5;
    }
    Ok(0.0)
}

fn chord_inside(domain: &Domain, a: Vec2, b: Vec2) -> bool {
    let m = 16;
    (0..m).all(|k| {
        let t = (k as f64 + 0.5) / m as f64;
        domain.contains(a.lerp(b, t)).is_inside()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::CurvatureProfile;
    use std::f64::consts::PI;

    fn circle(center: Vec2, r: f64, ccw: bool) -> BoundaryLoop {
        let start = center + Vec2::new(r, 0.0);
        let (theta, angle) = if ccw { (PI / 2.0, 2.0 * PI) } else { (-PI / 2.0, -2.0 * PI) };
        let c = BoundaryCurve::arc(start, theta, r, angle).unwrap();
        BoundaryLoop::new(vec![LoopPiece::new(c)]).unwrap()
    }

    #[test]
    fn unit_disk_area_and_membership() {
        let d = make_domain(vec![circle(Vec2::ZERO, 1.0, true)], 1e-3).unwrap();
        assert!((d.area() - PI).abs() < 1e-2);
        assert_eq!(d.contains(Vec2::ZERO), Location::Interior);
        assert_eq!(d.contains(Vec2::new(2.0, 0.0)), Location::Exterior);
        assert_eq!(d.contains(Vec2::new(1.0, 0.0)), Location::Boundary);
    }

    #[test]
    fn annulus_is_valid() {
        let d = make_domain(vec![circle(Vec2::ZERO, 2.0, true), circle(Vec2::ZERO, 1.0, false)], 1e-3).unwrap();
        assert_eq!(d.contains(Vec2::ZERO), Location::Exterior);
        assert_eq!(d.contains(Vec2::new(1.5, 0.0)), Location::Interior);
    }

    #[test]
    fn figure_eight_is_rejected() {
        let pts = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        let pieces = (0..4)
            .map(|i| LoopPiece::new(BoundaryCurve::segment(pts[i], pts[(i + 1) % 4]).unwrap()))
            .collect();
        let err = make_domain(vec![BoundaryLoop::new(pieces).unwrap()], 1e-3).unwrap_err();
        assert!(matches!(err, DomainError::SelfIntersecting { .. }));
    }

    #[test]
    fn clockwise_outer_loop_is_rejected() {
        let err = make_domain(vec![circle(Vec2::ZERO, 1.0, false)], 1e-3).unwrap_err();
        assert!(matches!(err, DomainError::BadOrientation { .. }));
    }

    #[test]
    fn conditions_for_constant_profiles() {
        let r = conditions_from_samples(&[0.0, 0.5, 1.0], &[-1.0; 3], &[0.5; 3], 0.5);
        assert!(r.all_hold());
        assert_eq!(r.epsilon_margin, 0.5);
        assert!(r.equality_points.is_empty());
        let r = conditions_from_samples(&[0.0, 0.5, 1.0], &[-1.0; 3], &[1.0; 3], 0.5);
        assert!(!r.k3_holds);
    }

    #[test]
    fn profile_curve_closes_with_segments() {
        let prof = CurvatureProfile::constant(0.0, 1.0, 0.0).unwrap();
        let c = crate::curves::build_from_curvature_profile(prof, Vec2::ZERO, Vec2::new(1.0, 0.0), 1e-3).unwrap();
        let pieces = vec![
            LoopPiece::new(c),
            LoopPiece::new(BoundaryCurve::segment(Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0)).unwrap()),
            LoopPiece::new(BoundaryCurve::segment(Vec2::new(1.0, 1.0), Vec2::new(0.0, 1.0)).unwrap()),
            LoopPiece::new(BoundaryCurve::segment(Vec2::new(0.0, 1.0), Vec2::ZERO).unwrap()),
        ];
        let d = make_domain(vec![BoundaryLoop::new(pieces).unwrap()], 1e-3).unwrap();
        assert!((d.area() - 1.0).abs() < 1e-12);
        assert!(d.reflex_vertices().is_empty());
    }
}
