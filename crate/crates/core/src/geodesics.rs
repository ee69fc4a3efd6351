//! Induced length-metric geodesics inside a single planar domain.
//!
//! Paths are shortest polylines in the visibility graph whose nodes are the
//! reflex vertices of the boundary polyline plus the query points. Only reflex
//! vertices can be interior vertices of a shortest path in a polygonal domain,
//! so the other polyline vertices are left out of the graph.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domains::{Domain, DomainError, Location};
use crate::geom::{dijkstra_dense, Vec2};
use crate::gluing::Crossing;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeodesicError {
    #[error("point {0:?} lies outside the space")]
    PointOutside(Vec2),
    #[error("no path between the query points")]
    Disconnected,
    #[error("geodesic touches the clipping box")]
    ClippedGeodesic,
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Side tag of a point in a glued surface. Single-domain spaces tag every
/// point [`Side::A`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

/// A planar point together with the side whose coordinates it is given in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggedPoint {
    pub side: Side,
    pub p: Vec2,
}

impl TaggedPoint {
    pub fn new(side: Side, p: Vec2) -> Self {
        TaggedPoint { side, p }
    }

    pub fn a(x: f64, y: f64) -> Self {
        TaggedPoint::new(Side::A, Vec2::new(x, y))
    }

    pub fn b(x: f64, y: f64) -> Self {
        TaggedPoint::new(Side::B, Vec2::new(x, y))
    }
}

/// A polyline path. Consecutive vertices on different sides are the two
/// coordinate copies of one identified seam point and contribute no length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicPath {
    pub vertices: Vec<TaggedPoint>,
    pub length: f64,
    pub space_tag: String,
    pub crossings: Vec<Crossing>,
}

impl GeodesicPath {
    pub fn from_vertices(vertices: Vec<TaggedPoint>, space_tag: impl Into<String>) -> Self {
        let length = polyline_length(&vertices);
        GeodesicPath { vertices, length, space_tag: space_tag.into(), crossings: Vec::new() }
    }

    /// Arc-length position of every vertex.
    pub fn vertex_params(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.vertices.len());
        for (i, v) in self.vertices.iter().enumerate() {
            if i > 0 {
                acc += seg_len(&self.vertices[i - 1], v);
            }
            out.push(acc);
        }
        out
    }

    /// The point at arc length `t` from the first vertex (clamped to the path).
    pub fn point_at(&self, t: f64) -> TaggedPoint {
        let mut acc = 0.0;
        for w in self.vertices.windows(2) {
            let l = seg_len(&w[0], &w[1]);
            if l > 0.0 && t <= acc + l {
                let u = ((t - acc) / l).clamp(0.0, 1.0);
                return TaggedPoint::new(w[0].side, w[0].p.lerp(w[1].p, u));
            }
            acc += l;
        }
        *self.vertices.last().expect("paths have at least one vertex")
    }

    /// The sub-path between arc lengths `a ≤ b`.
    pub fn sub_path(&self, a: f64, b: f64) -> GeodesicPath {
        let params = self.vertex_params();
        let mut verts = vec![self.point_at(a)];
        for (v, &s) in self.vertices.iter().zip(&params) {
            if s > a && s < b {
                verts.push(*v);
            }
        }
        verts.push(self.point_at(b));
        GeodesicPath::from_vertices(verts, self.space_tag.clone())
    }

    pub fn reversed(&self) -> GeodesicPath {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        let mut crossings = self.crossings.clone();
        crossings.reverse();
        GeodesicPath { vertices, length: self.length, space_tag: self.space_tag.clone(), crossings }
    }

    pub fn first(&self) -> TaggedPoint {
        self.vertices[0]
    }

    pub fn last(&self) -> TaggedPoint {
        self.vertices[self.vertices.len() - 1]
    }

    /// Writes the `s,x,y` vertex table.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["s", "x", "y"])?;
        for (v, s) in self.vertices.iter().zip(self.vertex_params()) {
            wr.write_record([fmt_num(s), fmt_num(v.p.x), fmt_num(v.p.y)])?;
        }
        wr.flush()?;
        Ok(())
    }
}

pub(crate) fn fmt_num(v: f64) -> String {
    format!("{v:.12}")
}

fn seg_len(a: &TaggedPoint, b: &TaggedPoint) -> f64 {
    if a.side == b.side {
        a.p.dist(b.p)
    } else {
        0.0
    }
}

pub(crate) fn polyline_length(v: &[TaggedPoint]) -> f64 {
    v.windows(2).map(|w| seg_len(&w[0], &w[1])).sum()
}

/// Symmetric visibility weights between fixed nodes of one domain.
#[derive(Clone, Debug)]
pub struct VisibilityGraph {
    pub(crate) nodes: Vec<Vec2>,
    pub(crate) weights: Vec<f64>,
}

impl VisibilityGraph {
    pub fn build(domain: &Domain, nodes: Vec<Vec2>) -> Self {
        let n = nodes.len();
        let mut weights = vec![f64::INFINITY; n * n];
        for i in 0..n {
            weights[i * n + i] = 0.0;
            for j in i + 1..n {
                if domain.segment_admissible(nodes[i], nodes[j]) {
                    let d = nodes[i].dist(nodes[j]);
                    weights[i * n + j] = d;
                    weights[j * n + i] = d;
                }
            }
        }
        VisibilityGraph { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.nodes.len() + j]
    }
}

impl Domain {
    pub(crate) fn visibility_graph(&self) -> &VisibilityGraph {
        self.graph.get_or_init(|| VisibilityGraph::build(self, self.reflex_vertices().to_vec()))
    }

    /// Distances along admissible straight segments from `p` to every graph node.
    pub(crate) fn visibility_from(&self, p: Vec2) -> Vec<f64> {
        self.visibility_graph()
            .nodes
            .iter()
            .map(|&v| if self.segment_admissible(p, v) { p.dist(v) } else { f64::INFINITY })
            .collect()
    }
}

/// Single-source shortest distances to all graph nodes of a domain.
struct Field {
    dist: Vec<f64>,
    pred: Vec<usize>,
}

fn field_from(domain: &Domain, vis: &[f64]) -> Field {
    let g = domain.visibility_graph();
    let (dist, pred) = dijkstra_dense(g.len(), vis, |i, j| g.weight(i, j));
    Field { dist, pred }
}

/// Best path from the field source to `y` given `y`'s visibility row.
fn finish(domain: &Domain, x: Vec2, field: &Field, y: Vec2, vis_y: &[f64], direct: bool) -> Option<(f64, Vec<Vec2>)> {
    let mut best = if direct { x.dist(y) } else { f64::INFINITY };
    let mut via = usize::MAX;
    for (v, (&d, &w)) in field.dist.iter().zip(vis_y).enumerate() {
        if d + w < best {
            best = d + w;
            via = v;
        }
    }
    if !best.is_finite() {
        return None;
    }
    let g = domain.visibility_graph();
    let mut chain = vec![y];
    let mut cur = via;
    while cur != usize::MAX {
        chain.push(g.nodes[cur]);
        cur = field.pred[cur];
    }
    chain.push(x);
    chain.reverse();
    Some((best, chain))
}

fn check_inside(domain: &Domain, p: Vec2) -> Result<(), GeodesicError> {
    if domain.contains(p).is_inside() {
        Ok(())
    } else {
        Err(GeodesicError::PointOutside(p))
    }
}

fn clipped(domain: &Domain, pts: &[Vec2]) -> bool {
    pts.windows(2).any(|w| domain.touches_clip(w[0], w[1]))
}

/// Shortest path from `x` to `y` inside `domain` at discretization `h`.
pub fn shortest_path(domain: &Domain, x: Vec2, y: Vec2, h: f64) -> Result<GeodesicPath, GeodesicError> {
    if (h - domain.h()).abs() > 1e-12 * h {
        let d = domain.with_h(h)?;
        return shortest_path(&d, x, y, h);
    }
    check_inside(domain, x)?;
    check_inside(domain, y)?;
    // Solve in a canonical order so that distance(x, y) == distance(y, x).
    if (y.x, y.y) < (x.x, x.y) {
        return shortest_path(domain, y, x, h).map(|p| p.reversed());
    }
    let pts = if x == y {
        vec![x]
    } else if domain.segment_admissible(x, y) {
        vec![x, y]
    } else {
        let field = field_from(domain, &domain.visibility_from(x));
        let vis_y = domain.visibility_from(y);
        finish(domain, x, &field, y, &vis_y, false).ok_or(GeodesicError::Disconnected)?.1
    };
    if clipped(domain, &pts) {
        return Err(GeodesicError::ClippedGeodesic);
    }
    let vertices = pts.into_iter().map(|p| TaggedPoint::new(Side::A, p)).collect();
    Ok(GeodesicPath::from_vertices(vertices, "domain"))
}

/// Length of [`shortest_path`].
pub fn distance(domain: &Domain, x: Vec2, y: Vec2, h: f64) -> Result<f64, GeodesicError> {
    Ok(shortest_path(domain, x, y, h)?.length)
}

/// True iff no window of the path around any vertex admits a shortcut longer
/// than `tol`.
pub fn is_locally_geodesic(domain: &Domain, path: &GeodesicPath, window: f64, tol: f64) -> bool {
    let params = path.vertex_params();
    let total = path.length;
    params.iter().all(|&s| {
        let a = (s - window).max(0.0);
        let b = (s + window).min(total);
        if b - a <= 0.0 {
            return true;
        }
        let p = path.point_at(a).p;
        let q = path.point_at(b).p;
        match distance(domain, p, q, domain.h()) {
            Ok(d) => b - a <= d + tol,
            Err(_) => false,
        }
    })
}

/// A geodesic metric space that the comparison audits can query.
pub trait GeodesicSpace: Sync {
    fn space_tag(&self) -> String;

    /// Discretization scale of the distance computations.
    fn resolution(&self) -> f64;

    fn classify(&self, p: &TaggedPoint) -> Location;

    fn geodesic(&self, x: &TaggedPoint, y: &TaggedPoint) -> Result<GeodesicPath, GeodesicError>;

    fn distance(&self, x: &TaggedPoint, y: &TaggedPoint) -> Result<f64, GeodesicError> {
        Ok(self.geodesic(x, y)?.length)
    }

    /// All distances `d(xs[i], ys[j])`.
    fn distance_matrix(&self, xs: &[TaggedPoint], ys: &[TaggedPoint]) -> Result<Vec<Vec<f64>>, GeodesicError> {
        xs.iter().map(|x| ys.iter().map(|y| self.distance(x, y)).collect()).collect()
    }
}

impl GeodesicSpace for Domain {
    fn space_tag(&self) -> String {
        "domain".into()
    }

    fn resolution(&self) -> f64 {
        self.h()
    }

    fn classify(&self, p: &TaggedPoint) -> Location {
        self.contains(p.p)
    }

    fn geodesic(&self, x: &TaggedPoint, y: &TaggedPoint) -> Result<GeodesicPath, GeodesicError> {
        shortest_path(self, x.p, y.p, self.h())
    }

    fn distance_matrix(&self, xs: &[TaggedPoint], ys: &[TaggedPoint]) -> Result<Vec<Vec<f64>>, GeodesicError> {
        for p in xs.iter().chain(ys) {
            check_inside(self, p.p)?;
        }
        // Each pair is solved from its canonical first point, as in
        // shortest_path, so the values are bit-identical to single queries.
        let vis_x: Vec<Vec<f64>> = xs.iter().map(|x| self.visibility_from(x.p)).collect();
        let vis_y: Vec<Vec<f64>> = ys.iter().map(|y| self.visibility_from(y.p)).collect();
        let mut fx: Vec<Option<Field>> = (0..xs.len()).map(|_| None).collect();
        let mut fy: Vec<Option<Field>> = (0..ys.len()).map(|_| None).collect();
        let mut out = vec![vec![0.0; ys.len()]; xs.len()];
        for (i, x) in xs.iter().enumerate() {
            for (j, y) in ys.iter().enumerate() {
                let (a, b) = (x.p, y.p);
                let pts = if a == b {
                    vec![a]
                } else if self.segment_admissible(a, b) {
                    if (b.x, b.y) < (a.x, a.y) {
                        vec![b, a]
                    } else {
                        vec![a, b]
                    }
                } else if (b.x, b.y) < (a.x, a.y) {
                    let f = fy[j].get_or_insert_with(|| field_from(self, &vis_y[j]));
                    finish(self, b, f, a, &vis_x[i], false).ok_or(GeodesicError::Disconnected)?.1
                } else {
                    let f = fx[i].get_or_insert_with(|| field_from(self, &vis_x[i]));
                    finish(self, a, f, b, &vis_y[j], false).ok_or(GeodesicError::Disconnected)?.1
                };
                if clipped(self, &pts) {
                    return Err(GeodesicError::ClippedGeodesic);
                }
                out[i][j] = polyline_len_plain(&pts);
            }
        }
        Ok(out)
    }
}

pub(crate) fn polyline_len_plain(pts: &[Vec2]) -> f64 {
    pts.windows(2).map(|w| w[0].dist(w[1])).sum()
}
