//! Euclidean comparison triangles and the CAT(0) thin-triangle audit.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domains::Location;
use crate::geodesics::{fmt_num, GeodesicError, GeodesicPath, GeodesicSpace, Side, TaggedPoint};
use crate::geom::Vec2;

/// Relative slack for the triangle inequality.
pub const TRIANGLE_SLACK: f64 = 1e-12;

/// Violations at or below this count as exact Euclidean equality.
pub const EXACTNESS_TOL: f64 = 1e-9;

/// Default number of interior samples per side.
pub const DEFAULT_SAMPLES: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatError {
    #[error("side lengths ({0}, {1}, {2}) violate the triangle inequality")]
    TriangleInequalityViolated(f64, f64, f64),
    #[error("parameter {t} outside [0, {len}]")]
    ParameterOutOfRange { t: f64, len: f64 },
    #[error("could not sample a triangle in the audit region")]
    EmptyRegion,
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error("could not build the space: {0}")]
    Space(String),
}

/// Side of a triangle, oriented from its first endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriSide {
    Xy,
    Yz,
    Zx,
}

impl TriSide {
    pub const ALL: [TriSide; 3] = [TriSide::Xy, TriSide::Yz, TriSide::Zx];
}

/// Planar triangle with x̄ at the origin, ȳ on the positive first axis and z̄
/// in the closed upper half-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTriangle {
    pub l_xy: f64,
    pub l_yz: f64,
    pub l_zx: f64,
    pub x: Vec2,
    pub y: Vec2,
    pub z: Vec2,
    pub degenerate: bool,
}

/// Twice the area from Kahan's cancellation-free Heron formula.
fn double_area(a: f64, b: f64, c: f64) -> f64 {
    let mut s = [a, b, c];
    s.sort_by(|p, q| q.partial_cmp(p).unwrap());
    let [a, b, c] = s;
    let prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    0.5 * prod.max(0.0).sqrt()
}

pub fn comparison_triangle(l_xy: f64, l_yz: f64, l_zx: f64) -> Result<ComparisonTriangle, CatError> {
    let ls = [l_xy, l_yz, l_zx];
    let sum = l_xy + l_yz + l_zx;
    if ls.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(CatError::TriangleInequalityViolated(l_xy, l_yz, l_zx));
    }
    let slack = TRIANGLE_SLACK * sum.max(f64::MIN_POSITIVE);
    let excess = [l_xy + l_yz - l_zx, l_yz + l_zx - l_xy, l_zx + l_xy - l_yz];
    if excess.iter().any(|&e| e < -slack) {
        return Err(CatError::TriangleInequalityViolated(l_xy, l_yz, l_zx));
    }
    let degenerate = excess.iter().any(|&e| e <= slack);
    let x = Vec2::ZERO;
    let y = Vec2::new(l_xy, 0.0);
    let z = if l_xy == 0.0 {
        Vec2::new(l_zx, 0.0)
    } else {
        let u = 0.5 * l_xy + (l_zx - l_yz) * (l_zx + l_yz) / (2.0 * l_xy);
        let v = if degenerate { 0.0 } else { 2.0 * double_area(l_xy, l_yz, l_zx) / (2.0 * l_xy) };
        Vec2::new(u, v)
    };
    Ok(ComparisonTriangle { l_xy, l_yz, l_zx, x, y, z, degenerate })
}

impl ComparisonTriangle {
    pub fn side_length(&self, side: TriSide) -> f64 {
        match side {
            TriSide::Xy => self.l_xy,
            TriSide::Yz => self.l_yz,
            TriSide::Zx => self.l_zx,
        }
    }

    fn endpoints(&self, side: TriSide) -> (Vec2, Vec2) {
        match side {
            TriSide::Xy => (self.x, self.y),
            TriSide::Yz => (self.y, self.z),
            TriSide::Zx => (self.z, self.x),
        }
    }
}

/// The point at distance `t` from the first endpoint of `side`.
pub fn comparison_point(tri: &ComparisonTriangle, side: TriSide, t: f64) -> Result<Vec2, CatError> {
    let len = tri.side_length(side);
    if !(t >= -TRIANGLE_SLACK * (1.0 + len) && t <= len * (1.0 + TRIANGLE_SLACK) + TRIANGLE_SLACK) {
        return Err(CatError::ParameterOutOfRange { t, len });
    }
    let (p, q) = tri.endpoints(side);
    if len == 0.0 {
        return Ok(p);
    }
    Ok(p.lerp(q, (t / len).clamp(0.0, 1.0)))
}

/// The pair of sample points attaining the maximal violation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub side_a: TriSide,
    pub t_a: f64,
    pub a: TaggedPoint,
    pub side_b: TriSide,
    pub t_b: f64,
    pub b: TaggedPoint,
    pub distance: f64,
    pub comparison_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThinnessReport {
    pub vertices: [TaggedPoint; 3],
    pub samples_per_side: usize,
    /// max(|a−b| − ‖ā−b̄‖), negative when the triangle has slack.
    pub max_violation: f64,
    pub witness: Option<Witness>,
    pub h_used: f64,
    pub side_lengths: [f64; 3],
}

/// Interior sample parameters `L·i/(n+1)`, `i = 1..=n`.
fn sample_params(len: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| len * i as f64 / (n + 1) as f64).collect()
}

/// Comparison triangle for measured side lengths; a triangle inequality
/// broken by discretization noise is closed up into a degenerate triangle.
fn comparison_from_measured(l: [f64; 3]) -> Result<ComparisonTriangle, CatError> {
    match comparison_triangle(l[0], l[1], l[2]) {
        Ok(t) => Ok(t),
        Err(CatError::TriangleInequalityViolated(..)) => {
            let mut m = l;
            let i = (0..3).max_by(|&a, &b| m[a].partial_cmp(&m[b]).unwrap()).unwrap();
            m[i] = m[(i + 1) % 3] + m[(i + 2) % 3];
            comparison_triangle(m[0], m[1], m[2])
        }
        Err(e) => Err(e),
    }
}

/// Per-pair violations of one triangle, in a fixed order: side pairs
/// (xy, yz), (yz, zx), (zx, xy), each as an n × n row-major block.
pub fn pair_violations<S: GeodesicSpace + ?Sized>(
    space: &S,
    x: &TaggedPoint,
    y: &TaggedPoint,
    z: &TaggedPoint,
    n: usize,
) -> Result<(Vec<f64>, ThinnessReport), CatError> {
    let paths: [GeodesicPath; 3] = [space.geodesic(x, y)?, space.geodesic(y, z)?, space.geodesic(z, x)?];
    let lens = [paths[0].length, paths[1].length, paths[2].length];
    let tri = comparison_from_measured(lens)?;
    let params: Vec<Vec<f64>> = lens.iter().map(|&l| sample_params(l, n)).collect();
    let pts: Vec<Vec<TaggedPoint>> =
        paths.iter().zip(&params).map(|(p, ts)| ts.iter().map(|&t| p.point_at(t)).collect()).collect();
    let cmp: Vec<Vec<Vec2>> = TriSide::ALL
        .iter()
        .zip(&params)
        .map(|(&side, ts)| {
            let len = tri.side_length(side);
            let scale = if lens[side as usize] > 0.0 { len / lens[side as usize] } else { 0.0 };
            ts.iter().map(|&t| comparison_point(&tri, side, t * scale)).collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;

    let mut all = Vec::with_capacity(3 * n * n);
    let mut best = f64::NEG_INFINITY;
    let mut witness = None;
    for (sa, sb) in [(0usize, 1usize), (1, 2), (2, 0)] {
        let d = space.distance_matrix(&pts[sa], &pts[sb])?;
        for i in 0..n {
            for j in 0..n {
                let cd = cmp[sa][i].dist(cmp[sb][j]);
                let v = d[i][j] - cd;
                all.push(v);
                if v > best {
                    best = v;
                    witness = Some(Witness {
                        side_a: TriSide::ALL[sa],
                        t_a: params[sa][i],
                        a: pts[sa][i],
                        side_b: TriSide::ALL[sb],
                        t_b: params[sb][j],
                        b: pts[sb][j],
                        distance: d[i][j],
                        comparison_distance: cd,
                    });
                }
            }
        }
    }
    if n == 0 {
        best = 0.0;
    }
    let report = ThinnessReport {
        vertices: [*x, *y, *z],
        samples_per_side: n,
        max_violation: best,
        witness,
        h_used: space.resolution(),
        side_lengths: lens,
    };
    Ok((all, report))
}

/// Maximal thinness violation of the geodesic triangle xyz over an `n`-point
/// grid on each side (endpoints excluded).
pub fn thinness_violation<S: GeodesicSpace + ?Sized>(
    space: &S,
    x: &TaggedPoint,
    y: &TaggedPoint,
    z: &TaggedPoint,
    n: usize,
) -> Result<ThinnessReport, CatError> {
    Ok(pair_violations(space, x, y, z, n)?.1)
}

/// A seam point (or any centre) with its coordinates on each available side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub a: Option<Vec2>,
    pub b: Option<Vec2>,
}

/// Triangles are drawn around a uniformly chosen anchor: every vertex lies
/// within `radius` of the anchor's copy on a uniformly chosen side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRegion {
    pub anchors: Vec<Anchor>,
    pub radius: f64,
}

impl AuditRegion {
    /// A disk of the given radius on side A.
    pub fn disk(center: Vec2, radius: f64) -> Self {
        AuditRegion { anchors: vec![Anchor { a: Some(center), b: None }], radius }
    }

    fn sample_vertex<S: GeodesicSpace + ?Sized>(&self, space: &S, anchor: &Anchor, rng: &mut ChaCha8Rng) -> Option<TaggedPoint> {
        let sides: Vec<(Side, Vec2)> =
            [(Side::A, anchor.a), (Side::B, anchor.b)].into_iter().filter_map(|(s, p)| p.map(|p| (s, p))).collect();
        if sides.is_empty() {
            return None;
        }
        for _ in 0..1000 {
            let (side, c) = sides[rng.gen_range(0..sides.len())];
            let r = self.radius * rng.gen::<f64>().sqrt();
            let phi = rng.gen::<f64>() * std::f64::consts::TAU;
            let p = TaggedPoint::new(side, c + Vec2::from_angle(phi) * r);
            if space.classify(&p) == Location::Interior {
                return Some(p);
            }
        }
        None
    }

    /// Three vertices around one random anchor.
    pub fn sample_triangle<S: GeodesicSpace + ?Sized>(&self, space: &S, rng: &mut ChaCha8Rng) -> Option<[TaggedPoint; 3]> {
        if self.anchors.is_empty() {
            return None;
        }
        let anchor = self.anchors[rng.gen_range(0..self.anchors.len())];
        Some([
            self.sample_vertex(space, &anchor, rng)?,
            self.sample_vertex(space, &anchor, rng)?,
            self.sample_vertex(space, &anchor, rng)?,
        ])
    }
}

/// Per-trial generator: one ChaCha stream per trial index.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Samples a triangle for `trial`, resampling while geodesics are clipped.
/// Returns the report and the number of discarded draws.
fn run_trial<S: GeodesicSpace + ?Sized>(
    space: &S,
    region: &AuditRegion,
    n: usize,
    seed: u64,
    trial: usize,
) -> Result<(ThinnessReport, usize), CatError> {
    let mut rng = trial_rng(seed, trial);
    let mut discarded = 0;
    for _ in 0..100 {
        let [x, y, z] = region.sample_triangle(space, &mut rng).ok_or(CatError::EmptyRegion)?;
        match thinness_violation(space, &x, &y, &z, n) {
            Ok(r) => return Ok((r, discarded)),
            Err(CatError::Geodesic(GeodesicError::ClippedGeodesic)) => discarded += 1,
            Err(e) => return Err(e),
        }
    }
    Err(CatError::EmptyRegion)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub reports: Vec<ThinnessReport>,
    pub worst_index: usize,
    pub worst_violation: f64,
    pub threshold: f64,
    pub passed: bool,
    pub discarded: usize,
    pub h: f64,
}

impl AuditSummary {
    /// Per-trial CSV: `trial,violation,ax,ay,bx,by`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["trial", "violation", "ax", "ay", "bx", "by"])?;
        for (i, r) in self.reports.iter().enumerate() {
            let (a, b) = match &r.witness {
                Some(wt) => (wt.a.p, wt.b.p),
                None => (r.vertices[0].p, r.vertices[0].p),
            };
            wr.write_record([
                i.to_string(),
                fmt_num(r.max_violation),
                fmt_num(a.x),
                fmt_num(a.y),
                fmt_num(b.x),
                fmt_num(b.y),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Runs `trials` independent triangle audits; the result depends only on
/// `seed`. Trials are spread over the available cores and merged by index.
pub fn cat0_audit<S: GeodesicSpace + ?Sized>(
    space: &S,
    region: &AuditRegion,
    trials: usize,
    n: usize,
    seed: u64,
    threshold: f64,
) -> Result<AuditSummary, CatError> {
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(trials.max(1));
    let results: Vec<Result<(ThinnessReport, usize), CatError>> = if workers <= 1 {
        (0..trials).map(|i| run_trial(space, region, n, seed, i)).collect()
    } else {
        let mut slots: Vec<Option<Result<(ThinnessReport, usize), CatError>>> = (0..trials).map(|_| None).collect();
        let size = trials.div_ceil(workers);
        std::thread::scope(|scope| {
            for (c, chunk) in slots.chunks_mut(size).enumerate() {
                scope.spawn(move || {
                    for (k, slot) in chunk.iter_mut().enumerate() {
                        *slot = Some(run_trial(space, region, n, seed, c * size + k));
                    }
                });
            }
        });
        slots.into_iter().map(|s| s.expect("every trial ran")).collect()
    };
    let mut reports = Vec::with_capacity(trials);
    let mut discarded = 0;
    for r in results {
        let (rep, d) = r?;
        discarded += d;
        reports.push(rep);
    }
    let (worst_index, worst_violation) = reports
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.max_violation))
        .fold((0, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc });
    Ok(AuditSummary {
        worst_index,
        worst_violation,
        threshold,
        passed: worst_violation <= threshold,
        discarded,
        h: space.resolution(),
        reports,
    })
}

/// Outcome of the h-refinement pilot that fixes the audit constant C.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub hs: Vec<f64>,
    /// `diffs[j]` = max over pilots and sample pairs of |viol(h_j) − viol(h_{j+1})|.
    pub diffs: Vec<f64>,
    /// `diffs[j] / diffs[j + 1]`.
    pub shrink_ratios: Vec<f64>,
    pub c: f64,
    pub pilots: usize,
}

impl Calibration {
    /// C·h, floored at the Euclidean exactness tolerance.
    pub fn threshold(&self, h: f64) -> f64 {
        (self.c * h).max(EXACTNESS_TOL)
    }

    pub fn min_shrink_ratio(&self) -> f64 {
        self.shrink_ratios.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Richardson-style calibration: the same pilot triangles are audited at
/// every `h` in `hs` (coarse to fine, each half the previous one).
///
/// With a first-order error `viol(h) = v + c·h`, the difference between
/// consecutive levels is `c·h_j/2`, so C = max_j 2·diffs[j] / h_j.
pub fn calibrate_threshold<S, F>(
    build: F,
    region: &AuditRegion,
    pilots: usize,
    n: usize,
    hs: &[f64],
    seed: u64,
) -> Result<Calibration, CatError>
where
    S: GeodesicSpace,
    F: Fn(f64) -> Result<S, CatError>,
{
    let coarse = build(hs[0])?;
    let mut triangles = Vec::with_capacity(pilots);
    let mut trial = 0;
    while triangles.len() < pilots && trial < 100 * pilots.max(1) {
        let mut rng = trial_rng(seed, trial);
        trial += 1;
        let tri = region.sample_triangle(&coarse, &mut rng).ok_or(CatError::EmptyRegion)?;
        match thinness_violation(&coarse, &tri[0], &tri[1], &tri[2], 1) {
            Ok(_) => triangles.push(tri),
            Err(CatError::Geodesic(GeodesicError::ClippedGeodesic)) => {}
            Err(e) => return Err(e),
        }
    }
    drop(coarse);
    let mut levels: Vec<Vec<Vec<f64>>> = Vec::with_capacity(hs.len());
    for &h in hs {
        let space = build(h)?;
        let mut per = Vec::with_capacity(triangles.len());
        for t in &triangles {
            per.push(pair_violations(&space, &t[0], &t[1], &t[2], n)?.0);
        }
        levels.push(per);
    }
    let diffs: Vec<f64> = levels
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .flat_map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - v).abs()))
                .fold(0.0, f64::max)
        })
        .collect();
    // No residual h-dependence at all counts as unlimited shrinkage.
    let shrink_ratios = diffs.windows(2).map(|w| if w[1] == 0.0 { f64::INFINITY } else { w[0] / w[1] }).collect();
    let c = diffs.iter().zip(hs).map(|(d, h)| 2.0 * d / h).fold(0.0, f64::max);
    Ok(Calibration { hs: hs.to_vec(), diffs, shrink_ratios, c, pilots: triangles.len() })
}
