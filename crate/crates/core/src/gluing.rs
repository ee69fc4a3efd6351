//! The glued surface Σ = Σ_A ∪ Σ_B along isometric boundary arcs.
//!
//! Distances come from one visibility structure over both sides: reflex
//! vertices of Σ_A, reflex vertices of Σ_B, and the portals, which are seam
//! points shared by both sides. After the discrete search every crossing is
//! slid along the seam to its locally optimal position.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domains::{check_gluing_conditions, ConditionReport, Domain, DomainError, GlueArc, Location};
use crate::geodesics::{self, GeodesicError, GeodesicPath, GeodesicSpace, Side, TaggedPoint};
use crate::geom::{angle_between, dijkstra_dense, golden_section_min, Vec2};

/// Parameter tolerance of the crossing refinement.
const REFINE_TOL: f64 = 1e-11;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GlueError {
    #[error("glue arcs differ in length: {len_a} vs {len_b}")]
    LengthMismatch { len_a: f64, len_b: f64 },
    #[error("gluing conditions violated (k1 {k1}, k2 {k2}, k3 {k3})")]
    ConditionsViolated { k1: bool, k2: bool, k3: bool },
    #[error("need at least 2 portals, got {0}")]
    TooFewPortals(usize),
    #[error("path does not cross the seam")]
    NoCrossings,
    #[error("angles ({theta_a}, {theta_b}) outside the domain of rho")]
    AngleDomain { theta_a: f64, theta_b: f64 },
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Domain(DomainError),
}

impl From<DomainError> for GlueError {
    fn from(e: DomainError) -> Self {
        match e {
            DomainError::LengthMismatch { len_a, len_b } => GlueError::LengthMismatch { len_a, len_b },
            other => GlueError::Domain(other),
        }
    }
}

/// One passage of a path through the seam.
///
/// Both angles are measured against the common seam tangent dσ/ds, each in
/// its own side's plane, so a path that is straight after unfolding has
/// `theta_a + theta_b = π`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub parameter: f64,
    pub point_a: Vec2,
    pub point_b: Vec2,
    pub theta_a: f64,
    pub theta_b: f64,
    /// The crossing sits within 10·h of an endpoint of I_Σ.
    pub boundary_endpoint: bool,
}

#[derive(Debug)]
struct GluedGraph {
    na: usize,
    nb: usize,
    n: usize,
    cost: Vec<f64>,
    side: Vec<Side>,
}

/// Two domains glued along arcs parametrized by a common interval J.
#[derive(Debug)]
pub struct GluedSurface {
    arc_a: GlueArc,
    arc_b: GlueArc,
    portals: Vec<f64>,
    pos_a: Vec<Vec2>,
    pos_b: Vec<Vec2>,
    report: ConditionReport,
    enforce: bool,
    h: f64,
    graph: OnceLock<GluedGraph>,
}

/// Glues along a uniform grid of `portals` seam points (both endpoints included).
pub fn glue(arc_a: GlueArc, arc_b: GlueArc, portals: usize, enforce: bool) -> Result<GluedSurface, GlueError> {
    let grid_step = arc_a.length() / 1024.0;
    glue_with_grid(arc_a, arc_b, portals, enforce, grid_step)
}

/// [`glue`] with an explicit condition-check grid step.
pub fn glue_with_grid(
    arc_a: GlueArc,
    arc_b: GlueArc,
    portals: usize,
    enforce: bool,
    grid_step: f64,
) -> Result<GluedSurface, GlueError> {
    if portals < 2 {
        return Err(GlueError::TooFewPortals(portals));
    }
    let len = arc_a.length();
    let params = (0..portals).map(|i| len * i as f64 / (portals - 1) as f64).collect();
    glue_with_portals(arc_a, arc_b, params, enforce, grid_step)
}

/// Glues with an explicit sorted portal list; the endpoints of J are added if
/// missing.
pub fn glue_with_portals(
    arc_a: GlueArc,
    arc_b: GlueArc,
    mut params: Vec<f64>,
    enforce: bool,
    grid_step: f64,
) -> Result<GluedSurface, GlueError> {
    let report = check_gluing_conditions(&arc_a, &arc_b, grid_step)?;
    if enforce && !report.all_hold() {
        return Err(GlueError::ConditionsViolated { k1: report.k1_holds, k2: report.k2_holds, k3: report.k3_holds });
    }
    let len = arc_a.length();
    params.retain(|s| (0.0..=len).contains(s));
    params.push(0.0);
    params.push(len);
    params.sort_by(|a, b| a.partial_cmp(b).unwrap());
    params.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + len));
    if params.len() < 2 {
        return Err(GlueError::TooFewPortals(params.len()));
    }
    let arc_a = with_portal_vertices(&arc_a, &params)?;
    let arc_b = with_portal_vertices(&arc_b, &params)?;
    let pos_a = params.iter().map(|&s| arc_a.point(s)).collect();
    let pos_b = params.iter().map(|&s| arc_b.point(s)).collect();
    let h = arc_a.parent().h().max(arc_b.parent().h());
    Ok(GluedSurface { arc_a, arc_b, portals: params, pos_a, pos_b, report, enforce, h, graph: OnceLock::new() })
}

/// The arc on a copy of its domain whose seam polyline has its vertices
/// exactly at the portals, so both sides share one polygonal seam.
fn with_portal_vertices(arc: &GlueArc, params: &[f64]) -> Result<GlueArc, DomainError> {
    let mut seam: Vec<(f64, Vec2)> = params.iter().map(|&s| (arc.loop_param(s), arc.point(s))).collect();
    if arc.reversed() {
        seam.reverse();
    }
    let d = arc.parent().with_seam_vertices(arc.loop_index(), &seam)?;
    GlueArc::new(Arc::new(d), arc.loop_index(), arc.start(), arc.length(), arc.reversed())
}

/// A path before refinement: the vertex list plus, for each crossing, the
/// slot of its first copy in `vertices` and the portal it went through.
struct RawPath {
    vertices: Vec<TaggedPoint>,
    crossings: Vec<(usize, usize)>,
}

impl GluedSurface {
    pub fn arc_a(&self) -> &GlueArc {
        &self.arc_a
    }

    pub fn arc_b(&self) -> &GlueArc {
        &self.arc_b
    }

    pub fn side_a(&self) -> &Arc<Domain> {
        self.arc_a.parent()
    }

    pub fn side_b(&self) -> &Arc<Domain> {
        self.arc_b.parent()
    }

    pub fn side(&self, side: Side) -> &Domain {
        match side {
            Side::A => self.side_a(),
            Side::B => self.side_b(),
        }
    }

    pub fn portal_parameters(&self) -> &[f64] {
        &self.portals
    }

    pub fn condition_report(&self) -> &ConditionReport {
        &self.report
    }

    pub fn enforce_conditions(&self) -> bool {
        self.enforce
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// σ(s) in the coordinates of `side`.
    pub fn seam_point(&self, side: Side, s: f64) -> Vec2 {
        self.arc(side).point(s)
    }

    fn arc(&self, side: Side) -> &GlueArc {
        match side {
            Side::A => &self.arc_a,
            Side::B => &self.arc_b,
        }
    }

    /// The same surface with both sides rediscretized at `h`.
    pub fn with_h(&self, h: f64) -> Result<GluedSurface, GlueError> {
        let rebuild = |arc: &GlueArc| -> Result<GlueArc, DomainError> {
            let d = Arc::new(arc.parent().with_h(h)?);
            GlueArc::new(d, arc.loop_index(), arc.start(), arc.length(), arc.reversed())
        };
        let a = rebuild(&self.arc_a)?;
        let b = rebuild(&self.arc_b)?;
        let mut s = glue_with_portals(a, b, self.portals.clone(), false, self.report.grid_step)?;
        s.enforce = self.enforce;
        Ok(s)
    }

    fn graph(&self) -> &GluedGraph {
        self.graph.get_or_init(|| self.build_graph())
    }

    fn node_pos(&self, g: &GluedGraph, i: usize, side: Side) -> Option<Vec2> {
        if i < g.na {
            (side == Side::A).then(|| self.side_a().reflex_vertices()[i])
        } else if i < g.na + g.nb {
            (side == Side::B).then(|| self.side_b().reflex_vertices()[i - g.na])
        } else {
            let k = i - g.na - g.nb;
            Some(match side {
                Side::A => self.pos_a[k],
                Side::B => self.pos_b[k],
            })
        }
    }

    fn portal_index(&self, g: &GluedGraph, i: usize) -> Option<usize> {
        (i >= g.na + g.nb).then(|| i - g.na - g.nb)
    }

    fn build_graph(&self) -> GluedGraph {
        let na = self.side_a().reflex_vertices().len();
        let nb = self.side_b().reflex_vertices().len();
        let n = na + nb + self.portals.len();
        let mut g = GluedGraph { na, nb, n, cost: vec![f64::INFINITY; n * n], side: vec![Side::A; n * n] };
        for i in 0..n {
            g.cost[i * n + i] = 0.0;
            for j in i + 1..n {
                let mut best = (f64::INFINITY, Side::A);
                for side in [Side::A, Side::B] {
                    if let (Some(p), Some(q)) = (self.node_pos(&g, i, side), self.node_pos(&g, j, side)) {
                        let d = p.dist(q);
                        if d < best.0 && self.side(side).segment_admissible(p, q) {
                            best = (d, side);
                        }
                    }
                }
                g.cost[i * n + j] = best.0;
                g.cost[j * n + i] = best.0;
                g.side[i * n + j] = best.1;
                g.side[j * n + i] = best.1;
            }
        }
        g
    }

    fn check_point(&self, p: &TaggedPoint) -> Result<(), GeodesicError> {
        if self.side(p.side).contains(p.p).is_inside() {
            Ok(())
        } else {
            Err(GeodesicError::PointOutside(p.p))
        }
    }

    /// Straight-segment distances from `p` to every graph node on its side.
    fn visibility(&self, p: &TaggedPoint) -> Vec<f64> {
        let g = self.graph();
        let dom = self.side(p.side);
        (0..g.n)
            .map(|i| match self.node_pos(g, i, p.side) {
                Some(q) if dom.segment_admissible(p.p, q) => p.p.dist(q),
                _ => f64::INFINITY,
            })
            .collect()
    }

    fn field(&self, vis: &[f64]) -> (Vec<f64>, Vec<usize>) {
        let g = self.graph();
        dijkstra_dense(g.n, vis, |i, j| g.cost[i * g.n + j])
    }

    fn pred_chain(pred: &[usize], last: usize) -> Vec<usize> {
        let mut chain = Vec::new();
        let mut cur = last;
        while cur != usize::MAX {
            chain.push(cur);
            cur = pred[cur];
        }
        chain.reverse();
        chain
    }

    /// Turns a node sequence into tagged vertices, splitting portals where the
    /// side changes into an identified pair.
    fn assemble(&self, x: &TaggedPoint, nodes: &[usize], y: &TaggedPoint) -> RawPath {
        let g = self.graph();
        let mut vertices = vec![*x];
        let mut crossings = Vec::new();
        let mut side_in = x.side;
        for (k, &v) in nodes.iter().enumerate() {
            let side_out = match nodes.get(k + 1) {
                Some(&w) => g.side[v * g.n + w],
                None => y.side,
            };
            let p_in = self.node_pos(g, v, side_in).expect("edge side matches node");
            vertices.push(TaggedPoint::new(side_in, p_in));
            if side_out != side_in {
                let portal = self.portal_index(g, v).expect("side changes only at portals");
                crossings.push((vertices.len() - 1, portal));
                let p_out = self.node_pos(g, v, side_out).expect("portal has both sides");
                vertices.push(TaggedPoint::new(side_out, p_out));
            }
            side_in = side_out;
        }
        vertices.push(*y);
        vertices.dedup_by(|a, b| a == b);
        // Dedup can shift crossing slots only if a query point coincides with a
        // node; recompute the slots from the vertex list in that case.
        let slots: Vec<usize> = (0..vertices.len().saturating_sub(1))
            .filter(|&i| vertices[i].side != vertices[i + 1].side)
            .collect();
        if slots.len() == crossings.len() {
            for (c, s) in crossings.iter_mut().zip(slots) {
                c.0 = s;
            }
        }
        RawPath { vertices, crossings }
    }

    /// Slides each crossing along the seam between its neighbouring portals.
    fn refine(&self, raw: &mut RawPath) {
        let last = self.portals.len() - 1;
        let mut params: Vec<f64> = raw.crossings.iter().map(|&(_, k)| self.portals[k]).collect();
        for _sweep in 0..2 {
            for (ci, &(j, k)) in raw.crossings.iter().enumerate() {
                let vin = raw.vertices[j];
                let vout = raw.vertices[j + 1];
                let prev = raw.vertices[j - 1].p;
                let next = raw.vertices[j + 2].p;
                let (sin_, sout) = (vin.side, vout.side);
                let f = |s: f64| prev.dist(self.arc(sin_).point(s)) + self.arc(sout).point(s).dist(next);
                let lo = self.portals[k.saturating_sub(1)];
                let hi = self.portals[(k + 1).min(last)];
                let current = params[ci];
                let (s, _) = golden_section_min(f, lo, hi, REFINE_TOL);
                // Length is flat at the minimum, so finish on its derivative.
                let df = |t: f64| {
                    let (pa, pb) = (self.arc(sin_).point(t), self.arc(sout).point(t));
                    self.arc(sin_).tangent(t).dot((pa - prev).normalized()) + self.arc(sout).tangent(t).dot((pb - next).normalized())
                };
                let s = root_near(df, s, lo, hi);
                let fs = f(s);
                if fs < f(current) {
                    params[ci] = s;
                    raw.vertices[j].p = self.arc(sin_).point(s);
                    raw.vertices[j + 1].p = self.arc(sout).point(s);
                }
            }
        }
        // Refined segments must stay admissible; fall back to the portal.
        for _ in 0..raw.crossings.len() + 1 {
            let mut changed = false;
            for &(j, k) in &raw.crossings {
                let vin = raw.vertices[j];
                let vout = raw.vertices[j + 1];
                let ok = self.side(vin.side).segment_admissible(raw.vertices[j - 1].p, vin.p)
                    && self.side(vout.side).segment_admissible(vout.p, raw.vertices[j + 2].p);
                let at_portal = vin.p == self.pos(vin.side, k);
                if !ok && !at_portal {
                    raw.vertices[j].p = self.pos(vin.side, k);
                    raw.vertices[j + 1].p = self.pos(vout.side, k);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn pos(&self, side: Side, k: usize) -> Vec2 {
        match side {
            Side::A => self.pos_a[k],
            Side::B => self.pos_b[k],
        }
    }

    fn finish_path(&self, mut raw: RawPath) -> Result<GeodesicPath, GeodesicError> {
        self.refine(&mut raw);
        for w in raw.vertices.windows(2) {
            if w[0].side == w[1].side && self.side(w[0].side).touches_clip(w[0].p, w[1].p) {
                return Err(GeodesicError::ClippedGeodesic);
            }
        }
        let mut path = GeodesicPath::from_vertices(raw.vertices, "glued");
        path.crossings = self.measure_crossings(&path);
        Ok(path)
    }

    /// Path from the canonical first point `x` using its precomputed field.
    fn solve(
        &self,
        x: &TaggedPoint,
        field: &(Vec<f64>, Vec<usize>),
        y: &TaggedPoint,
        vis_y: &[f64],
    ) -> Result<GeodesicPath, GeodesicError> {
        if x == y {
            return Ok(GeodesicPath::from_vertices(vec![*x], "glued"));
        }
        let mut best = f64::INFINITY;
        let mut via = usize::MAX;
        let direct = x.side == y.side && self.side(x.side).segment_admissible(x.p, y.p);
        if direct {
            best = x.p.dist(y.p);
        }
        for (v, (&d, &w)) in field.0.iter().zip(vis_y).enumerate() {
            if d + w < best {
                best = d + w;
                via = v;
            }
        }
        if !best.is_finite() {
            return Err(GeodesicError::Disconnected);
        }
        let nodes = if via == usize::MAX { Vec::new() } else { Self::pred_chain(&field.1, via) };
        self.finish_path(self.assemble(x, &nodes, y))
    }

    /// Shortest path between tagged points at the surface's own resolution.
    pub fn shortest_path(&self, x: &TaggedPoint, y: &TaggedPoint) -> Result<GeodesicPath, GeodesicError> {
        self.check_point(x)?;
        self.check_point(y)?;
        if key(y) < key(x) {
            return self.shortest_path(y, x).map(|p| p.reversed());
        }
        let field = self.field(&self.visibility(x));
        self.solve(x, &field, y, &self.visibility(y))
    }

    /// Crossing records with angles for every side change of `path`.
    fn measure_crossings(&self, path: &GeodesicPath) -> Vec<Crossing> {
        let v = &path.vertices;
        let reach = 10.0 * self.h;
        let len = self.arc_a.length();
        let mut out = Vec::new();
        for j in 0..v.len().saturating_sub(1) {
            if v[j].side == v[j + 1].side {
                continue;
            }
            let (ca, cb, ia, ib) = if v[j].side == Side::A { (v[j], v[j + 1], j, j + 1) } else { (v[j + 1], v[j], j + 1, j) };
            let s = self.locate_on_seam(ca.p);
            let anchor_a = anchor(v, ia, ca.p, reach);
            let anchor_b = anchor(v, ib, cb.p, reach);
            let theta = |side: Side, c: Vec2, a: Option<Vec2>| match a {
                Some(q) => angle_between(q - c, self.arc(side).tangent(s)),
                None => f64::NAN,
            };
            out.push(Crossing {
                parameter: s,
                point_a: ca.p,
                point_b: cb.p,
                theta_a: theta(Side::A, ca.p, anchor_a),
                theta_b: theta(Side::B, cb.p, anchor_b),
                boundary_endpoint: s <= reach || s >= len - reach,
            });
        }
        out
    }

    /// Seam parameter of an A-side point lying on I_A.
    fn locate_on_seam(&self, p: Vec2) -> f64 {
        let k = self
            .pos_a
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.dist(p).partial_cmp(&b.1.dist(p)).unwrap())
            .map(|(k, _)| k)
            .unwrap_or(0);
        if self.pos_a[k] == p {
            return self.portals[k];
        }
        let last = self.portals.len() - 1;
        let lo = self.portals[k.saturating_sub(1)];
        let hi = self.portals[(k + 1).min(last)];
        golden_section_min(|s| self.arc_a.point(s).dist(p), lo, hi, 1e-13).0
    }

    /// Crossing records of a glued path.
    pub fn crossing_angles(&self, path: &GeodesicPath) -> Result<Vec<Crossing>, GlueError> {
        let c = self.measure_crossings(path);
        if c.is_empty() {
            Err(GlueError::NoCrossings)
        } else {
            Ok(c)
        }
    }

    /// Unrefined length of the best path forced through each portal, as
    /// `(s, d(x, σ(s)) + d(σ(s), y))`.
    pub fn portal_path_lengths(&self, x: &TaggedPoint, y: &TaggedPoint) -> Result<Vec<(f64, f64)>, GeodesicError> {
        self.check_point(x)?;
        self.check_point(y)?;
        let fx = self.field(&self.visibility(x));
        let fy = self.field(&self.visibility(y));
        let g = self.graph();
        let base = g.na + g.nb;
        Ok(self.portals.iter().enumerate().map(|(k, &s)| (s, fx.0[base + k] + fy.0[base + k])).collect())
    }

    /// All locally optimal crossing configurations within `slack` of the
    /// optimum, deduplicated by crossing parameters closer than 10·h.
    pub fn geodesic_multiplicity_probe(
        &self,
        x: &TaggedPoint,
        y: &TaggedPoint,
        slack: f64,
    ) -> Result<Vec<GeodesicPath>, GeodesicError> {
        self.check_point(x)?;
        self.check_point(y)?;
        let mut candidates = vec![self.shortest_path(x, y)?];
        if x.side == y.side {
            if let Ok(p) = geodesics::shortest_path(self.side(x.side), x.p, y.p, self.side(x.side).h()) {
                let mut p = p;
                for v in &mut p.vertices {
                    v.side = x.side;
                }
                p.space_tag = "glued".into();
                candidates.push(p);
            }
        }
        let fx = self.field(&self.visibility(x));
        let fy = self.field(&self.visibility(y));
        let g = self.graph();
        let base = g.na + g.nb;
        let np = self.portals.len();
        let gk: Vec<f64> = (0..np).map(|k| fx.0[base + k] + fy.0[base + k]).collect();
        for k in 0..np {
            if !gk[k].is_finite() {
                continue;
            }
            let left = if k > 0 { gk[k - 1] } else { f64::INFINITY };
            let right = if k + 1 < np { gk[k + 1] } else { f64::INFINITY };
            // Discrete local minima; `slack` only bounds the final lengths.
            let noise = 1e-12 * (1.0 + gk[k]);
            if gk[k] > left + noise || gk[k] > right + noise {
                continue;
            }
            let mut nodes = Self::pred_chain(&fx.1, base + k);
            let mut back = Self::pred_chain(&fy.1, base + k);
            back.pop();
            back.reverse();
            nodes.extend(back);
            if let Ok(p) = self.finish_path(self.assemble(x, &nodes, y)) {
                candidates.push(p);
            }
        }
        let best = candidates.iter().map(|p| p.length).fold(f64::INFINITY, f64::min);
        candidates.retain(|p| p.length <= best + slack);
        candidates.sort_by(|a, b| a.length.partial_cmp(&b.length).unwrap());
        let sep = 10.0 * self.h;
        let mut out: Vec<GeodesicPath> = Vec::new();
        for c in candidates {
            let dup = out.iter().any(|o| {
                o.crossings.len() == c.crossings.len()
                    && o.crossings.iter().zip(&c.crossings).all(|(a, b)| (a.parameter - b.parameter).abs() <= sep)
            });
            if !dup {
                out.push(c);
            }
        }
        Ok(out)
    }
}

/// Bisection on a sign change of `g` within 1e-6 of `s`; `s` itself when
/// there is none.
fn root_near(g: impl Fn(f64) -> f64, s: f64, lo: f64, hi: f64) -> f64 {
    let w = 1e-6 * (hi - lo).max(1e-12);
    let (mut a, mut b) = ((s - w).max(lo), (s + w).min(hi));
    let (ga, gb) = (g(a), g(b));
    if !(ga < 0.0 && gb > 0.0) {
        return s;
    }
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if g(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn key(p: &TaggedPoint) -> (Side, f64, f64) {
    (p.side, p.p.x, p.p.y)
}

/// The vertex at least `reach` away from `c` walking away from slot `i` while
/// staying on the same side, or the farthest one reached.
fn anchor(v: &[TaggedPoint], i: usize, c: Vec2, reach: f64) -> Option<Vec2> {
    let side = v[i].side;
    let step: isize = if i + 1 < v.len() && v[i + 1].side != side { -1 } else { 1 };
    let mut j = i as isize + step;
    let mut found = None;
    while j >= 0 && (j as usize) < v.len() && v[j as usize].side == side {
        let q = v[j as usize].p;
        if q != c {
            found = Some(q);
            if q.dist(c) >= reach {
                break;
            }
        }
        j += step;
    }
    found
}

/// Shortest path in Σ, rediscretizing both sides when `h` differs from the
/// surface's own resolution.
pub fn glued_shortest_path(
    s: &GluedSurface,
    x: &TaggedPoint,
    y: &TaggedPoint,
    h: f64,
) -> Result<GeodesicPath, GlueError> {
    if (h - s.h()).abs() > 1e-12 * h {
        return Ok(s.with_h(h)?.shortest_path(x, y)?);
    }
    Ok(s.shortest_path(x, y)?)
}

/// |OE| in the unit isosceles triangle with apex angle θ_A + θ_B, where E on
/// the base satisfies ∠AOE = θ_A.
pub fn rho_of_angles(theta_a: f64, theta_b: f64) -> Result<f64, GlueError> {
    let alpha = theta_a + theta_b;
    if !(theta_a > 0.0 && theta_b > 0.0 && alpha < std::f64::consts::PI) {
        return Err(GlueError::AngleDomain { theta_a, theta_b });
    }
    Ok((0.5 * alpha).cos() / (theta_a - 0.5 * alpha).cos())
}

impl GeodesicSpace for GluedSurface {
    fn space_tag(&self) -> String {
        "glued".into()
    }

    fn resolution(&self) -> f64 {
        self.h
    }

    fn classify(&self, p: &TaggedPoint) -> Location {
        self.side(p.side).contains(p.p)
    }

    fn geodesic(&self, x: &TaggedPoint, y: &TaggedPoint) -> Result<GeodesicPath, GeodesicError> {
        self.shortest_path(x, y)
    }

    fn distance_matrix(&self, xs: &[TaggedPoint], ys: &[TaggedPoint]) -> Result<Vec<Vec<f64>>, GeodesicError> {
        for p in xs.iter().chain(ys) {
            self.check_point(p)?;
        }
        // Every pair is solved from its canonical first point so the result is
        // bit-identical to the single-pair query.
        let vis_x: Vec<Vec<f64>> = xs.iter().map(|p| self.visibility(p)).collect();
        let vis_y: Vec<Vec<f64>> = ys.iter().map(|p| self.visibility(p)).collect();
        let mut fx: Vec<Option<(Vec<f64>, Vec<usize>)>> = vec![None; xs.len()];
        let mut fy: Vec<Option<(Vec<f64>, Vec<usize>)>> = vec![None; ys.len()];
        let mut out = vec![vec![0.0; ys.len()]; xs.len()];
        for (i, x) in xs.iter().enumerate() {
            for (j, y) in ys.iter().enumerate() {
                let path = if key(y) < key(x) {
                    let f = fy[j].get_or_insert_with(|| self.field(&vis_y[j]));
                    self.solve(y, f, x, &vis_x[i])?
                } else {
                    let f = fx[i].get_or_insert_with(|| self.field(&vis_x[i]));
                    self.solve(x, f, y, &vis_y[j])?
                };
                out[i][j] = path.length;
            }
        }
        Ok(out)
    }
}
