//! Polygonal approximations Σᵏ of a glued surface.
//!
//! Around a centre w of the seam the arcs I_A and I_B are replaced by
//! inscribed polygonal lines with 2k chords of one common length ℓ_k, and the
//! two modified domains are glued along these lines.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::BoundaryCurve;
use crate::domains::{conditions_from_samples, make_domain, BoundaryLoop, DomainError, GlueArc, LoopPiece};
use crate::geodesics::{fmt_num, GeodesicError, GeodesicSpace, TaggedPoint};
use crate::geom::{signed_angle, Vec2};
use crate::gluing::{glue_with_portals, GlueError, GluedSurface};

/// Shortest chord the construction will resolve.
pub const MIN_CHORD: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ApproxError {
    #[error("window [{lo}, {hi}] does not fit {k} chords per side")]
    WindowTooSmall { lo: f64, hi: f64, k: usize },
    #[error("window [{lo}, {hi}] is not inside J = [0, {len}]")]
    WindowOutsideArc { lo: f64, hi: f64, len: f64 },
    #[error("gluing conditions fail on the window (k1 {k1}, k2 {k2}, k3 {k3})")]
    ConditionsViolated { k1: bool, k2: bool, k3: bool },
    #[error("k must be at least 1")]
    ZeroK,
    #[error(transparent)]
    Glue(#[from] GlueError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
}

/// Parameter window `[center − radius, center + radius]` in J.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub center: f64,
    pub radius: f64,
}

impl Window {
    pub fn lo(&self) -> f64 {
        self.center - self.radius
    }

    pub fn hi(&self) -> f64 {
        self.center + self.radius
    }
}

/// 2k+1 arc points joined by 2k chords of equal length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonalLine {
    pub vertices: Vec<Vec2>,
    /// Arc parameters of the vertices, increasing.
    pub params: Vec<f64>,
    pub chord_length: f64,
    /// Index of the centre vertex σ(w); equals k.
    pub center_index: usize,
}

impl PolygonalLine {
    pub fn k(&self) -> usize {
        self.center_index
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| w[0].dist(w[1])).sum()
    }

    /// Largest relative deviation of a chord from `chord_length`.
    pub fn chord_spread(&self) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| (w[0].dist(w[1]) - self.chord_length).abs() / self.chord_length)
            .fold(0.0, f64::max)
    }

    /// Signed turning at each interior vertex, in the direction of increasing
    /// parameter.
    pub fn turns(&self) -> Vec<f64> {
        self.vertices.windows(3).map(|w| signed_angle(w[1] - w[0], w[2] - w[1])).collect()
    }

    /// Sum of the vertex turns: the discrete total turning.
    pub fn total_turning(&self) -> f64 {
        self.turns().iter().sum()
    }
}

/// Smallest τ ∈ (0, room] with |σ(u + dir·τ) − σ(u)| = ℓ, if the chord
/// reaches ℓ within `room`.
fn advance(arc: &GlueArc, u: f64, dir: f64, room: f64, ell: f64) -> Option<f64> {
    let p = arc.point(u);
    let chord = |tau: f64| arc.point(u + dir * tau).dist(p);
    if room <= 0.0 || chord(room) < ell {
        return None;
    }
    // The chord grows with τ on every stretch short enough to matter here.
    let (mut lo, mut hi) = (0.0, room);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if chord(mid) < ell {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(hi)
}

/// Parameters of k equal chords walked from `center` in direction `dir`,
/// staying inside `[lo, hi]`.
fn chain(arc: &GlueArc, center: f64, dir: f64, k: usize, ell: f64, lo: f64, hi: f64) -> Option<Vec<f64>> {
    let mut out = Vec::with_capacity(k);
    let mut u = center;
    for _ in 0..k {
        let room = if dir > 0.0 { hi - u } else { u - lo };
        let tau = advance(arc, u, dir, room, ell)?;
        u += dir * tau;
        out.push(u);
    }
    Some(out)
}

fn line_from_chains(arc: &GlueArc, center: f64, back: Vec<f64>, fwd: Vec<f64>, ell: f64) -> PolygonalLine {
    let k = fwd.len();
    let mut params: Vec<f64> = back.into_iter().rev().collect();
    params.push(center);
    params.extend(fwd);
    let vertices = params.iter().map(|&u| arc.point(u)).collect();
    PolygonalLine { vertices, params, chord_length: ell, center_index: k }
}

fn check_window(arc: &GlueArc, window: &Window) -> Result<(), ApproxError> {
    let len = arc.length();
    if !(window.radius > 0.0) || window.lo() < -1e-12 || window.hi() > len + 1e-12 {
        return Err(ApproxError::WindowOutsideArc { lo: window.lo(), hi: window.hi(), len });
    }
    Ok(())
}

/// The inscribed line with k equal chords on each side of the window centre;
/// ℓ_k is the largest chord for which both halves stay inside the window.
pub fn build_polygonal_line(arc: &GlueArc, window: &Window, k: usize) -> Result<PolygonalLine, ApproxError> {
    if k == 0 {
        return Err(ApproxError::ZeroK);
    }
    check_window(arc, window)?;
    let (lo, hi) = (window.lo().max(0.0), window.hi().min(arc.length()));
    let too_small = ApproxError::WindowTooSmall { lo, hi, k };
    let feasible = |ell: f64| {
        chain(arc, window.center, 1.0, k, ell, lo, hi).is_some() && chain(arc, window.center, -1.0, k, ell, lo, hi).is_some()
    };
    // Chords never exceed the arc they span.
    if !feasible(MIN_CHORD) {
        return Err(too_small);
    }
    let (mut a, mut b) = (MIN_CHORD, window.radius / k as f64 * (1.0 + 1e-9));
    loop {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if feasible(mid) {
            a = mid;
        } else {
            b = mid;
        }
    }
    let ell = a;
    let fwd = chain(arc, window.center, 1.0, k, ell, lo, hi).ok_or(too_small.clone())?;
    let back = chain(arc, window.center, -1.0, k, ell, lo, hi).ok_or(too_small)?;
    Ok(line_from_chains(arc, window.center, back, fwd, ell))
}

/// The line with a prescribed chord length, k chords each way from `center`,
/// staying inside J.
pub fn polygonal_line_with_chord(arc: &GlueArc, center: f64, k: usize, ell: f64) -> Result<PolygonalLine, ApproxError> {
    let len = arc.length();
    let err = ApproxError::WindowTooSmall { lo: 0.0, hi: len, k };
    let fwd = chain(arc, center, 1.0, k, ell, 0.0, len).ok_or(err.clone())?;
    let back = chain(arc, center, -1.0, k, ell, 0.0, len).ok_or(err)?;
    Ok(line_from_chains(arc, center, back, fwd, ell))
}

/// Pieces of `lp` covering loop parameters `[t0, t1]` (forward, `t1 > t0`,
/// at most one wrap).
fn loop_stretch(lp: &BoundaryLoop, t0: f64, t1: f64) -> Result<Vec<LoopPiece>, DomainError> {
    let mut out = Vec::new();
    let mut t = t0;
    let eps = 1e-12 * (1.0 + lp.length());
    while t1 - t > eps {
        let (i, local) = lp.locate(t);
        let piece = &lp.pieces()[i];
        let (_, phi) = piece.curve.interval();
        let end = phi.min(local + (t1 - t));
        if end - local > eps {
            out.push(LoopPiece { curve: piece.curve.restrict(local, end)?, clip: piece.clip });
        }
        t += (end - local).max(eps);
    }
    Ok(out)
}

/// Rebuilds loop `li` of the arc's parent with the stretch under `line`
/// replaced by its chords; the chords come first in the new loop.
fn replace_with_chords(arc: &GlueArc, line: &PolygonalLine) -> Result<(Vec<BoundaryLoop>, f64), DomainError> {
    let dom = arc.parent();
    let lp = &dom.loops()[arc.loop_index()];
    let (first, last) = (line.params[0], *line.params.last().unwrap());
    // Loop order of the vertices and the loop stretch they replace.
    let (pts, t_start, t_end): (Vec<Vec2>, f64, f64) = if arc.reversed() {
        (line.vertices.iter().rev().copied().collect(), arc.loop_param(last), arc.loop_param(first))
    } else {
        (line.vertices.clone(), arc.loop_param(first), arc.loop_param(last))
    };
    let mut pieces = Vec::with_capacity(pts.len() + 4);
    for w in pts.windows(2) {
        pieces.push(LoopPiece::new(BoundaryCurve::segment(w[0], w[1])?));
    }
    let poly_len: f64 = pieces.iter().map(|p| p.curve.length()).sum();
    let mut rest_end = t_start;
    if rest_end <= t_end {
        rest_end += lp.length();
    }
    pieces.extend(loop_stretch(lp, t_end, rest_end)?);
    let mut loops = dom.loops().to_vec();
    loops[arc.loop_index()] = BoundaryLoop::new(pieces)?;
    Ok((loops, poly_len))
}

/// Σᵏ together with the polygonal lines it was built from.
#[derive(Debug)]
pub struct ApproximateSurface {
    pub k: usize,
    pub line_a: PolygonalLine,
    pub line_b: PolygonalLine,
    pub surface: GluedSurface,
    /// Length of the closing segment [zᵏ, w^{2k+1}]; zero when the polygon
    /// ends on the arc.
    pub closure_length: f64,
    /// min over the window of |κ_A| − κ_B.
    pub epsilon: f64,
}

impl ApproximateSurface {
    /// L(Pᵏ).
    pub fn polygon_length(&self) -> f64 {
        self.line_a.length()
    }
}

/// Builds Σᵏ: Σ_Aᵏ and Σ_Bᵏ with their arcs replaced by the equal-chord
/// lines, glued along them with portals at the vertices and chord midpoints.
pub fn build_sigma_k(s: &GluedSurface, window: &Window, k: usize) -> Result<ApproximateSurface, ApproxError> {
    let (arc_a, arc_b) = (s.arc_a(), s.arc_b());
    check_window(arc_a, window)?;
    let n = 256;
    let params: Vec<f64> = (0..=n).map(|i| window.lo() + 2.0 * window.radius * i as f64 / n as f64).collect();
    let ka: Vec<f64> = params.iter().map(|&u| arc_a.kappa(u)).collect();
    let kb: Vec<f64> = params.iter().map(|&u| arc_b.kappa(u)).collect();
    let rep = conditions_from_samples(&params, &ka, &kb, 2.0 * window.radius / n as f64);
    if !rep.acceptable() {
        return Err(ApproxError::ConditionsViolated { k1: rep.k1_holds, k2: rep.k2_holds, k3: rep.k3_holds });
    }
    let line_a = build_polygonal_line(arc_a, window, k)?;
    let line_b = polygonal_line_with_chord(arc_b, window.center, k, line_a.chord_length)?;
    let h = s.h();
    let (loops_a, len_a) = replace_with_chords(arc_a, &line_a)?;
    let (loops_b, len_b) = replace_with_chords(arc_b, &line_b)?;
    let len = len_a.min(len_b);
    let dom_a = Arc::new(make_domain(loops_a, h)?);
    let dom_b = Arc::new(make_domain(loops_b, h)?);
    let ga = GlueArc::new(dom_a, arc_a.loop_index(), 0.0, len, false)?;
    let gb = GlueArc::new(dom_b, arc_b.loop_index(), len_b, len, true)?;
    let portals = (0..=4 * k).map(|i| len * i as f64 / (4 * k) as f64).collect();
    let surface = glue_with_portals(ga, gb, portals, false, len / 1024.0)?;
    Ok(ApproximateSurface { k, line_a, line_b, surface, closure_length: 0.0, epsilon: rep.epsilon_margin })
}

/// v̂_A + v̂_B at every interior vertex of Pᵏ.
///
/// The A side keeps its interior on the left of the line, so its angle is
/// π − turn; the B side has it on the right, giving π + turn.
pub fn vertex_angle_sums(a: &ApproximateSurface) -> Vec<f64> {
    a.line_a.turns().iter().zip(a.line_b.turns()).map(|(ta, tb)| (PI - ta) + (PI + tb)).collect()
}

/// One row of the convergence table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub k: usize,
    pub pair: usize,
    pub ell_k: f64,
    pub polygon_length: f64,
    /// |x−y|_k, absent when a point is not yet inside Σᵏ.
    pub d_k: Option<f64>,
    pub d: f64,
    pub gap: Option<f64>,
    pub closure_length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub window_arc_length: f64,
    /// Smallest k from which each pair is contained in every later Σᵏ.
    pub first_contained_k: Vec<Option<usize>>,
    /// Per pair: |gap| decreases over k and ends below `tolerance`.
    pub converged: Vec<bool>,
    pub tolerance: f64,
}

impl ConvergenceTable {
    /// CSV: `k,ell_k,L_Pk,d_k,d,gap` (plus the pair index).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["k", "pair", "ell_k", "L_Pk", "d_k", "d", "gap"])?;
        let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
        for r in &self.rows {
            wr.write_record([
                r.k.to_string(),
                r.pair.to_string(),
                fmt_num(r.ell_k),
                fmt_num(r.polygon_length),
                opt(r.d_k),
                fmt_num(r.d),
                opt(r.gap),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Distances in Σᵏ against the limit distance in Σ for every k in `ks`.
pub fn convergence_study(
    s: &GluedSurface,
    window: &Window,
    ks: &[usize],
    pairs: &[(TaggedPoint, TaggedPoint)],
    tolerance: f64,
) -> Result<ConvergenceTable, ApproxError> {
    let limits: Vec<f64> = pairs.iter().map(|(x, y)| s.distance(x, y)).collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    let mut contained = vec![Vec::new(); pairs.len()];
    for &k in ks {
        let ap = build_sigma_k(s, window, k)?;
        for (i, (x, y)) in pairs.iter().enumerate() {
            let inside = ap.surface.classify(x).is_inside() && ap.surface.classify(y).is_inside();
            contained[i].push(inside);
            let d_k = if inside { Some(ap.surface.distance(x, y)?) } else { None };
            rows.push(ConvergenceRow {
                k,
                pair: i,
                ell_k: ap.line_a.chord_length,
                polygon_length: ap.polygon_length(),
                d_k,
                d: limits[i],
                gap: d_k.map(|d| (d - limits[i]).abs()),
                closure_length: ap.closure_length,
            });
        }
    }
    let first_contained_k = contained
        .iter()
        .map(|flags| {
            let from = flags.iter().rposition(|&f| !f).map(|p| p + 1).unwrap_or(0);
            ks.get(from).copied()
        })
        .collect();
    let converged = (0..pairs.len())
        .map(|i| {
            let gaps: Vec<f64> = rows.iter().filter(|r| r.pair == i).filter_map(|r| r.gap).collect();
            !gaps.is_empty() && gaps.windows(2).all(|w| w[1] <= w[0]) && *gaps.last().unwrap() <= tolerance
        })
        .collect();
    let window_arc_length = 2.0 * window.radius;
    Ok(ConvergenceTable { rows, window_arc_length, first_contained_k, converged, tolerance })
}
