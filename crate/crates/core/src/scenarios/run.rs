use std::collections::BTreeMap;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::build::{build_geometry, sample_band, seam_region, tagged, Geometry};
use super::format::*;
use super::ScenarioError;
use crate::approximation::{build_sigma_k, convergence_study, vertex_angle_sums, ConvergenceTable};
use crate::cat_compare::{calibrate_threshold, cat0_audit, thinness_violation, trial_rng, AuditSummary, Calibration, CatError, EXACTNESS_TOL};
use crate::geodesics::{GeodesicPath, GeodesicSpace, Side, TaggedPoint};
use crate::geom::Vec2;
use crate::gluing::GluedSurface;
use crate::hyperbolic::{
    derivative_suite, signed_geodesic_curvature, triangle_angles, triangle_area, DerivativeRow, ModelCurve, ModelSurface,
    DEFAULT_STEPS,
};
use crate::Location;

/// Overrides applied on top of the scenario document.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub h: Option<f64>,
}

/// Timing information; kept apart from the deterministic body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub started_unix_ms: u128,
    pub elapsed_ms: u128,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub metadata: Metadata,
    pub body: ReportBody,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportBody {
    pub scenario: String,
    pub description: String,
    pub seed: u64,
    pub environment: Environment,
    pub outline: Outline,
    pub checks: Vec<CheckResult>,
    /// Files written by `emit_plots`, if any.
    pub artifacts: Vec<String>,
}

/// Numerical settings in effect for the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub h: f64,
    pub portals: usize,
    pub n_samples: usize,
    pub grid_step: Option<f64>,
    pub tolerances: Tolerances,
    pub calibrated_c: Option<f64>,
    /// Audit threshold per check, keyed `checks[i]`.
    pub thresholds: BTreeMap<String, f64>,
}

/// Coarse boundary and seam polylines for plotting.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Outline {
    pub loops: Vec<OutlineLoop>,
    pub seam_a: Vec<[f64; 2]>,
    pub seam_b: Vec<[f64; 2]>,
    /// Names of the domains carrying the A and B arcs.
    pub side_domains: Option<[String; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutlineLoop {
    pub domain: String,
    pub points: Vec<[f64; 2]>,
}

/// A path kept for plotting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub label: String,
    pub length: f64,
    pub crossings: Vec<f64>,
    pub vertices: Vec<TaggedPoint>,
}

impl PathRecord {
    fn new(label: String, p: &GeodesicPath) -> Self {
        PathRecord { label, length: p.length, crossings: p.crossings.iter().map(|c| c.parameter).collect(), vertices: p.vertices.clone() }
    }

    pub fn to_path(&self) -> GeodesicPath {
        GeodesicPath::from_vertices(self.vertices.clone(), "glued")
    }
}

/// Per-k polygon diagnostics of a convergence study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonRow {
    pub k: usize,
    pub ell_k: f64,
    pub chord_spread: f64,
    pub polygon_length: f64,
    pub relative_gap: f64,
    /// min over interior vertices of (v̂_A + v̂_B) − 2π.
    pub min_angle_excess: f64,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub index: usize,
    pub kind: String,
    pub passed: bool,
    pub expected: bool,
    pub as_expected: bool,
    pub summary: String,
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub paths: Vec<PathRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceTable>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub polygons: Vec<PolygonRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub derivatives: Vec<DerivativeRow>,
}

impl CheckResult {
    fn new(index: usize, spec: &CheckSpec) -> Self {
        CheckResult {
            index,
            kind: spec.kind().to_string(),
            passed: false,
            expected: spec.expect().unwrap_or(true),
            as_expected: false,
            summary: String::new(),
            metrics: BTreeMap::new(),
            witness: None,
            error: None,
            paths: Vec::new(),
            audit: None,
            convergence: None,
            polygons: Vec::new(),
            derivatives: Vec::new(),
        }
    }

    fn metric(&mut self, key: &str, v: f64) {
        self.metrics.insert(key.to_string(), v);
    }

    pub fn metric_value(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }
}

impl RunReport {
    /// The deterministic part of the report as pretty JSON.
    pub fn body_json(&self) -> String {
        serde_json::to_string_pretty(&self.body).expect("report bodies serialize")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn all_as_expected(&self) -> bool {
        self.body.checks.iter().all(|c| c.as_expected)
    }

    /// Human-readable summary, one line per check.
    pub fn pretty(&self) -> String {
        let b = &self.body;
        let mut out = format!("scenario {} (seed {}, h = {})\n", b.scenario, b.seed, b.environment.h);
        if !b.description.is_empty() {
            out += &format!("  {}\n", b.description);
        }
        for c in &b.checks {
            let verdict = match (c.passed, c.as_expected) {
                (true, true) => "PASS",
                (false, true) => "FAIL (expected)",
                (true, false) => "PASS (unexpected)",
                (false, false) => "FAIL",
            };
            out += &format!("  [{}] {:<20} {:<18} {}\n", c.index, c.kind, verdict, c.summary);
            if let Some(e) = &c.error {
                out += &format!("      error: {e}\n");
            }
        }
        if !b.artifacts.is_empty() {
            out += &format!("  {} artifact(s)\n", b.artifacts.len());
        }
        out
    }
}

pub fn run_scenario(sc: &Scenario) -> Result<RunReport, ScenarioError> {
    run_scenario_with(sc, &RunOptions::default())
}

/// Builds the geometry and executes the checks in declaration order. A
/// failing or erroring check is recorded and the run continues.
pub fn run_scenario_with(sc: &Scenario, opts: &RunOptions) -> Result<RunReport, ScenarioError> {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0);
    let clock = Instant::now();
    let h = opts.h.unwrap_or(sc.numerics.h);
    if !(h > 0.0 && h.is_finite()) {
        return Err(super::invalid("h", "must be positive"));
    }
    let seed = opts.seed.unwrap_or(sc.seed);
    let geo = build_geometry(sc, h)?;
    let mut env = Environment {
        h,
        portals: sc.numerics.portals,
        n_samples: sc.numerics.n_samples,
        grid_step: sc.numerics.grid_step,
        tolerances: sc.numerics.tolerances.clone(),
        calibrated_c: sc.numerics.tolerances.calibrated_c,
        thresholds: BTreeMap::new(),
    };
    let mut checks = Vec::with_capacity(sc.checks.len());
    for (i, spec) in sc.checks.iter().enumerate() {
        let mut r = CheckResult::new(i, spec);
        let ctx = Ctx { sc, geo: &geo, seed: check_seed(seed, i), tol: &sc.numerics.tolerances };
        if let Err(e) = ctx.run(spec, &mut r, &mut env) {
            r.passed = false;
            r.summary = "error".into();
            r.error = Some(e);
        }
        r.as_expected = r.passed == r.expected;
        checks.push(r);
    }
    let body = ReportBody {
        scenario: sc.name.clone(),
        description: sc.description.clone(),
        seed,
        environment: env,
        outline: outline(sc, &geo),
        checks,
        artifacts: Vec::new(),
    };
    let metadata = Metadata {
        tool: "catglue".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        started_unix_ms: started,
        elapsed_ms: clock.elapsed().as_millis(),
    };
    Ok(RunReport { metadata, body })
}

/// Runs the h-refinement pilot on the scenario's first `cat0_audit` region
/// and returns the calibration that fixes C.
pub fn calibrate(sc: &Scenario, opts: &RunOptions) -> Result<Calibration, ScenarioError> {
    let seed = opts.seed.unwrap_or(sc.seed);
    let h = opts.h.unwrap_or(sc.numerics.h);
    let Some((radius, anchors, lo, hi)) = sc.checks.iter().find_map(|c| match c {
        CheckSpec::Cat0Audit { radius, anchors, lo, hi, .. } => Some((*radius, *anchors, *lo, *hi)),
        _ => None,
    }) else {
        return Err(ScenarioError::Calibration("scenario has no cat0_audit check".into()));
    };
    let geo = build_geometry(sc, h)?;
    let s = geo.surface.as_ref().ok_or_else(|| ScenarioError::Calibration("scenario has no glued surface".into()))?;
    let region = seam_region(s, anchors, lo, hi, radius);
    let tol = &sc.numerics.tolerances;
    calibrate_threshold(
        |h| s.with_h(h).map_err(|e| CatError::Space(e.to_string())),
        &region,
        tol.calibration_pilots,
        sc.numerics.n_samples,
        &tol.calibration_hs,
        seed,
    )
    .map_err(|e| ScenarioError::Calibration(e.to_string()))
}

/// Independent seed for the check at `index`.
fn check_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64)
}

fn pt(p: Vec2) -> [f64; 2] {
    [p.x, p.y]
}

fn outline(sc: &Scenario, geo: &Geometry) -> Outline {
    let mut out = Outline::default();
    for (name, d) in &geo.domains {
        for lp in d.loops() {
            let n = 256;
            let len = lp.length();
            let mut points: Vec<[f64; 2]> = (0..n).map(|i| pt(lp.point(len * i as f64 / n as f64))).collect();
            // Corners are kept exactly.
            for &o in lp.offsets() {
                points.push(pt(lp.point(o)));
            }
            let mut tagged: Vec<(f64, [f64; 2])> = (0..n)
                .map(|i| len * i as f64 / n as f64)
                .chain(lp.offsets().iter().copied())
                .zip(points)
                .collect();
            tagged.sort_by(|a, b| a.0.total_cmp(&b.0));
            tagged.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-12);
            out.loops.push(OutlineLoop { domain: name.clone(), points: tagged.into_iter().map(|t| t.1).collect() });
        }
    }
    if let Some(s) = &geo.surface {
        let len = s.arc_a().length();
        let n = 64;
        out.seam_a = (0..=n).map(|i| pt(s.seam_point(Side::A, len * i as f64 / n as f64))).collect();
        out.seam_b = (0..=n).map(|i| pt(s.seam_point(Side::B, len * i as f64 / n as f64))).collect();
        out.side_domains = sc.glue.as_ref().map(|g| [g.a.domain.clone(), g.b.domain.clone()]);
    }
    out
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn point_json(p: &TaggedPoint) -> Value {
    json!({ "side": p.side, "at": [p.p.x, p.p.y] })
}

struct Ctx<'a> {
    sc: &'a Scenario,
    geo: &'a Geometry,
    seed: u64,
    tol: &'a Tolerances,
}

type CheckOutcome = Result<(), String>;

impl Ctx<'_> {
    fn surface(&self) -> Result<&GluedSurface, String> {
        self.geo.surface.as_ref().ok_or_else(|| "scenario has no glued surface".to_string())
    }

    fn run(&self, spec: &CheckSpec, r: &mut CheckResult, env: &mut Environment) -> CheckOutcome {
        match spec {
            CheckSpec::Conditions { .. } => self.conditions(r),
            CheckSpec::Cat0Audit { trials, radius, anchors, lo, hi, recheck_half_h, .. } => {
                let thr = self.audit_threshold()?;
                env.thresholds.insert(format!("checks[{}]", r.index), thr);
                self.audit(r, *trials, *radius, *anchors, *lo, *hi, *recheck_half_h, thr)
            }
            CheckSpec::CrossingAngles { pairs, band, .. } => self.crossing_angles(r, *pairs, band),
            CheckSpec::MultiplicityProbe { pairs, random_pairs, band, count, .. } => {
                self.probe(r, pairs, *random_pairs, band.as_ref(), *count)
            }
            CheckSpec::Geodesics { pairs } => self.geodesics(r, pairs),
            CheckSpec::FlatIsometry { pairs, .. } => self.flat_isometry(r, *pairs),
            CheckSpec::ConvergenceStudy { ks, pairs, .. } => self.convergence(r, ks, pairs),
            CheckSpec::DerivativeSuite { steps, .. } => self.derivatives(r, steps.as_deref()),
        }
    }

    fn audit_threshold(&self) -> Result<f64, String> {
        if let Some(t) = self.tol.audit_threshold {
            return Ok(t);
        }
        match self.tol.calibrated_c {
            Some(c) => Ok((c * self.geo.h).max(EXACTNESS_TOL)),
            None => Err("no audit threshold: set tolerances.audit_threshold or run `calibrate`".into()),
        }
    }

    fn conditions(&self, r: &mut CheckResult) -> CheckOutcome {
        let s = self.surface()?;
        let rep = s.condition_report();
        r.passed = rep.acceptable();
        r.metric("epsilon_margin", rep.epsilon_margin);
        r.metric("equality_points", rep.equality_points.len() as f64);
        r.metric("grid_step", rep.grid_step);
        let failed: Vec<&str> =
            [("k1", rep.k1_holds), ("k2", rep.k2_holds), ("k3", rep.k3_holds)].into_iter().filter(|c| !c.1).map(|c| c.0).collect();
        r.summary = if failed.is_empty() {
            format!("(k1)-(k3) hold, margin {:.3e}", rep.epsilon_margin)
        } else if rep.flat_edge_case && r.passed {
            "flat gluing: κ_A = κ_B = 0".to_string()
        } else {
            format!("violated: {}", failed.join(", "))
        };
        r.witness = Some(json!({ "report": rep, "failed": failed }));
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn audit(
        &self,
        r: &mut CheckResult,
        trials: usize,
        radius: f64,
        anchors: usize,
        lo: Option<f64>,
        hi: Option<f64>,
        recheck: bool,
        thr: f64,
    ) -> CheckOutcome {
        let s = self.surface()?;
        let region = seam_region(s, anchors, lo, hi, radius);
        let n = self.sc.numerics.n_samples;
        let sum = cat0_audit(s, &region, trials, n, self.seed, thr).map_err(|e| e.to_string())?;
        r.passed = sum.passed;
        r.metric("worst_violation", sum.worst_violation);
        r.metric("threshold", thr);
        r.metric("trials", trials as f64);
        r.metric("discarded", sum.discarded as f64);
        let over = sum.reports.iter().filter(|t| t.max_violation > thr).count();
        r.metric("over_threshold", over as f64);
        let worst = &sum.reports[sum.worst_index];
        r.summary = format!("worst violation {:.3e} vs threshold {:.3e} ({over}/{trials} over)", sum.worst_violation, thr);
        let mut witness = json!({
            "trial": sum.worst_index,
            "seed": self.seed,
            "vertices": worst.vertices.iter().map(point_json).collect::<Vec<_>>(),
            "max_violation": worst.max_violation,
            "pair": worst.witness,
        });
        if recheck {
            let half = s.with_h(0.5 * self.geo.h).map_err(|e| e.to_string())?;
            let [x, y, z] = &worst.vertices;
            let v2 = thinness_violation(&half, x, y, z, n).map_err(|e| e.to_string())?.max_violation;
            let ratio = v2 / worst.max_violation;
            r.metric("worst_violation_half_h", v2);
            r.metric("half_h_ratio", ratio);
            witness["half_h_violation"] = json!(v2);
            r.summary += &format!("; at h/2: {v2:.3e}");
        }
        r.witness = Some(witness);
        r.audit = Some(sum);
        Ok(())
    }

    fn crossing_angles(&self, r: &mut CheckResult, pairs: usize, band: &SeamBand) -> CheckOutcome {
        let s = self.surface()?;
        let mut rng = trial_rng(self.seed, 0);
        let mut errs: Vec<(f64, TaggedPoint, TaggedPoint, f64)> = Vec::with_capacity(pairs);
        let mut skipped = 0usize;
        let mut attempts = 0;
        while errs.len() < pairs && attempts < 20 * pairs.max(1) {
            attempts += 1;
            let (Some(x), Some(y)) = (sample_band(s, band, Side::A, &mut rng), sample_band(s, band, Side::B, &mut rng)) else {
                return Err("band has no interior points".into());
            };
            let path = match s.shortest_path(&x, &y) {
                Ok(p) => p,
                Err(_) => {
                    skipped += 1;
                    continue;
                }
            };
            match path.crossings.as_slice() {
                [c] if !c.boundary_endpoint => errs.push(((c.theta_a + c.theta_b - std::f64::consts::PI).abs(), x, y, c.parameter)),
                _ => skipped += 1,
            }
        }
        if errs.len() < pairs {
            return Err(format!("only {} of {pairs} transversal geodesics found", errs.len()));
        }
        let (wi, _) = errs.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, e)| if e.0 > acc.1 { (i, e.0) } else { acc });
        let max = errs[wi].0;
        let med = median(&mut errs.iter().map(|e| e.0).collect::<Vec<_>>());
        r.passed = max <= self.tol.angle && med <= self.tol.angle_median;
        r.metric("max_error", max);
        r.metric("median_error", med);
        r.metric("pairs", pairs as f64);
        r.metric("skipped", skipped as f64);
        r.summary = format!("|θ_A + θ_B − π|: max {max:.3e}, median {med:.3e} over {pairs}");
        let (_, x, y, t) = &errs[wi];
        r.witness = Some(json!({ "x": point_json(x), "y": point_json(y), "crossing": t, "error": max }));
        if let Ok(p) = s.shortest_path(x, y) {
            r.paths.push(PathRecord::new("worst".into(), &p));
        }
        Ok(())
    }

    fn probe(
        &self,
        r: &mut CheckResult,
        pairs: &[[PointSpec; 2]],
        random: usize,
        band: Option<&SeamBand>,
        count: Option<usize>,
    ) -> CheckOutcome {
        let s = self.surface()?;
        let slack = self.tol.probe_slack_h * self.geo.h;
        let mut list: Vec<(TaggedPoint, TaggedPoint, bool)> = pairs.iter().map(|[a, b]| (tagged(a), tagged(b), true)).collect();
        if random > 0 {
            let band = band.ok_or("random pairs need a band")?;
            let mut rng = trial_rng(self.seed, 0);
            for _ in 0..random {
                match (sample_band(s, band, Side::A, &mut rng), sample_band(s, band, Side::B, &mut rng)) {
                    (Some(x), Some(y)) => list.push((x, y, false)),
                    _ => return Err("band has no interior points".into()),
                }
            }
        }
        let want = count.unwrap_or(1);
        let mut counts = Vec::with_capacity(list.len());
        let mut bad = None;
        for (i, (x, y, keep)) in list.iter().enumerate() {
            let found = s.geodesic_multiplicity_probe(x, y, slack).map_err(|e| format!("pair {i}: {e}"))?;
            counts.push(found.len());
            if found.len() != want && bad.is_none() {
                bad = Some(json!({
                    "pair": i,
                    "x": point_json(x),
                    "y": point_json(y),
                    "count": found.len(),
                    "crossings": found.iter().map(|p| p.crossings.iter().map(|c| c.parameter).collect::<Vec<_>>()).collect::<Vec<_>>(),
                }));
            }
            if *keep {
                for (j, p) in found.iter().enumerate() {
                    r.paths.push(PathRecord::new(format!("pair{i}_geodesic{j}"), p));
                }
            }
        }
        let lo = counts.iter().copied().min().unwrap_or(0);
        let hi = counts.iter().copied().max().unwrap_or(0);
        r.passed = bad.is_none() && !counts.is_empty();
        r.metric("pairs", counts.len() as f64);
        r.metric("min_count", lo as f64);
        r.metric("max_count", hi as f64);
        r.metric("slack", slack);
        for (i, p) in r.paths.clone().iter().enumerate() {
            r.metric(&format!("path{i}_length"), p.length);
            for (j, c) in p.crossings.iter().enumerate() {
                r.metric(&format!("path{i}_crossing{j}"), *c);
            }
        }
        r.summary = format!("{} pair(s), geodesics per pair in [{lo}, {hi}], required {want}", counts.len());
        r.witness = bad.or_else(|| Some(json!({ "counts": counts })));
        Ok(())
    }

    fn geodesics(&self, r: &mut CheckResult, pairs: &[[PointSpec; 2]]) -> CheckOutcome {
        let s = self.surface()?;
        for (i, [a, b]) in pairs.iter().enumerate() {
            let (x, y) = (tagged(a), tagged(b));
            let p = s.shortest_path(&x, &y).map_err(|e| format!("pair {i}: {e}"))?;
            r.metric(&format!("pair{i}_length"), p.length);
            r.paths.push(PathRecord::new(format!("pair{i}"), &p));
        }
        r.passed = true;
        r.summary = format!("{} geodesic(s)", pairs.len());
        Ok(())
    }

    /// For a seam made of congruent straight segments: the rigid motion that
    /// carries σ_B onto σ_A.
    fn unfolding(s: &GluedSurface) -> Result<impl Fn(Vec2) -> Vec2, String> {
        let len = s.arc_a().length();
        let (a0, a1) = (s.seam_point(Side::A, 0.0), s.seam_point(Side::A, len));
        let (b0, b1) = (s.seam_point(Side::B, 0.0), s.seam_point(Side::B, len));
        let (ua, ub) = ((a1 - a0) / len, (b1 - b0) / len);
        // Rotation by the angle from ub to ua.
        let (c, sn) = (ub.dot(ua), ub.cross(ua));
        let rot = move |v: Vec2| Vec2::new(c * v.x - sn * v.y, sn * v.x + c * v.y);
        let map = move |p: Vec2| a0 + rot(p - b0);
        for i in 0..=16 {
            let t = len * i as f64 / 16.0;
            let (pa, pb) = (s.seam_point(Side::A, t), s.seam_point(Side::B, t));
            if pa.dist(a0 + ua * t) > 1e-12 || map(pb).dist(pa) > 1e-12 {
                return Err("flat_isometry needs both seam arcs to be straight segments".into());
            }
        }
        Ok(map)
    }

    fn random_point(s: &GluedSurface, side: Side, rng: &mut ChaCha8Rng) -> Option<TaggedPoint> {
        let (lo, hi) = s.side(side).bounding_box();
        for _ in 0..1000 {
            let p = Vec2::new(lo.x + (hi.x - lo.x) * rng.gen::<f64>(), lo.y + (hi.y - lo.y) * rng.gen::<f64>());
            let t = TaggedPoint::new(side, p);
            if s.classify(&t) == Location::Interior {
                return Some(t);
            }
        }
        None
    }

    /// Glued distances against Euclidean distances in the unfolded union,
    /// which is assumed convex.
    fn flat_isometry(&self, r: &mut CheckResult, pairs: usize) -> CheckOutcome {
        let s = self.surface()?;
        let unfold = Self::unfolding(s)?;
        let flat = |p: &TaggedPoint| if p.side == Side::A { p.p } else { unfold(p.p) };
        let slack = self.tol.probe_slack_h * self.geo.h;
        let mut rng = trial_rng(self.seed, 0);
        let mut worst = (f64::NEG_INFINITY, None);
        let mut max_count = 0usize;
        let mut min_count = usize::MAX;
        for i in 0..pairs {
            let sx = if rng.gen::<bool>() { Side::A } else { Side::B };
            let sy = if rng.gen::<bool>() { Side::A } else { Side::B };
            let (Some(x), Some(y)) = (Self::random_point(s, sx, &mut rng), Self::random_point(s, sy, &mut rng)) else {
                return Err("domain has no interior points".into());
            };
            let d = s.distance(&x, &y).map_err(|e| format!("pair {i}: {e}"))?;
            let e = flat(&x).dist(flat(&y));
            let err = (d - e).abs();
            let n = s.geodesic_multiplicity_probe(&x, &y, slack).map_err(|e| format!("pair {i}: {e}"))?.len();
            max_count = max_count.max(n);
            min_count = min_count.min(n);
            if err > worst.0 {
                worst = (err, Some(json!({ "pair": i, "x": point_json(&x), "y": point_json(&y), "glued": d, "euclidean": e })));
            }
        }
        r.passed = worst.0 <= self.tol.isometry && max_count == 1 && min_count == 1;
        r.metric("max_error", worst.0);
        r.metric("pairs", pairs as f64);
        r.metric("min_probe_count", min_count as f64);
        r.metric("max_probe_count", max_count as f64);
        r.summary = format!("max |d − d_euclid| = {:.3e} over {pairs} pairs; probe counts in [{min_count}, {max_count}]", worst.0);
        r.witness = worst.1;
        Ok(())
    }

    fn convergence(&self, r: &mut CheckResult, ks: &[usize], pairs: &[[PointSpec; 2]]) -> CheckOutcome {
        let s = self.surface()?;
        let w = self.geo.window.as_ref().ok_or("no window")?;
        let pts: Vec<(TaggedPoint, TaggedPoint)> = pairs.iter().map(|[a, b]| (tagged(a), tagged(b))).collect();
        let table = convergence_study(s, w, ks, &pts, self.tol.convergence).map_err(|e| e.to_string())?;
        let arc_len = 2.0 * w.radius;
        for &k in ks {
            let ap = build_sigma_k(s, w, k).map_err(|e| e.to_string())?;
            let sums = vertex_angle_sums(&ap);
            let excess = sums.iter().map(|v| v - std::f64::consts::TAU).fold(f64::INFINITY, f64::min);
            r.polygons.push(PolygonRow {
                k,
                ell_k: ap.line_a.chord_length,
                chord_spread: ap.line_a.chord_spread().max(ap.line_b.chord_spread()),
                polygon_length: ap.polygon_length(),
                relative_gap: (arc_len - ap.polygon_length()) / arc_len,
                min_angle_excess: excess,
                epsilon: ap.epsilon,
            });
        }
        let spread = r.polygons.iter().map(|p| p.chord_spread).fold(0.0, f64::max);
        let min_excess = r.polygons.iter().map(|p| p.min_angle_excess).fold(f64::INFINITY, f64::min);
        let monotone = r.polygons.windows(2).all(|p| p[1].polygon_length >= p[0].polygon_length);
        let last = r.polygons.last().expect("ks is non-empty").clone();
        let converged = table.converged.iter().all(|&c| c);
        r.passed = converged && monotone && spread <= 1e-10 && min_excess >= -1e-6;
        r.metric("max_chord_spread", spread);
        r.metric("min_angle_excess", min_excess);
        r.metric("final_relative_gap", last.relative_gap);
        r.metric("final_k", last.k as f64);
        r.metric("length_monotone", if monotone { 1.0 } else { 0.0 });
        for (i, _) in pts.iter().enumerate() {
            if let Some(g) = table.rows.iter().rev().find(|row| row.pair == i).and_then(|row| row.gap) {
                r.metric(&format!("pair{i}_final_gap"), g);
            }
        }
        r.summary = format!(
            "converged {}/{}, min angle excess {min_excess:.3e}, chord spread {spread:.1e}, gap to arc {:.2e} at k = {}",
            table.converged.iter().filter(|&&c| c).count(),
            pts.len(),
            last.relative_gap,
            last.k
        );
        if let Some(i) = table.converged.iter().position(|&c| !c) {
            let rows: Vec<_> = table.rows.iter().filter(|row| row.pair == i).collect();
            r.witness = Some(json!({ "pair": i, "x": point_json(&pts[i].0), "y": point_json(&pts[i].1), "rows": rows }));
        } else {
            r.witness = Some(json!({ "first_contained_k": table.first_contained_k }));
        }
        r.convergence = Some(table);
        Ok(())
    }

    fn derivatives(&self, r: &mut CheckResult, steps: Option<&[f64]>) -> CheckOutcome {
        let model = self.sc.model.as_ref().ok_or("no model section")?;
        let steps = steps.unwrap_or(&DEFAULT_STEPS);
        let rows = derivative_suite(&model.k0, &model.radii, steps).map_err(|e| e.to_string())?;
        let (wi, worst) = rows.iter().enumerate().fold((0, 0.0f64), |acc, (i, row)| if row.err > acc.1 { (i, row.err) } else { acc });
        let mut geo_k = 0.0f64;
        let mut gb = 0.0f64;
        let tris = [
            [Vec2::new(0.1, 0.2), Vec2::new(-0.4, 0.1), Vec2::new(0.3, -0.5)],
            [Vec2::new(0.0, 0.0), Vec2::new(0.8, 0.0), Vec2::new(0.0, 0.8)],
            [Vec2::new(-0.6, -0.3), Vec2::new(0.5, -0.4), Vec2::new(0.2, 0.7)],
        ];
        for &k0 in &model.k0 {
            let m = ModelSurface::new(k0).map_err(|e| e.to_string())?;
            let g = ModelCurve::Geodesic { start: Vec2::new(0.1, -0.05), angle: 0.4 };
            geo_k = geo_k.max(signed_geodesic_curvature(&m, &g, 0.3).map_err(|e| e.to_string())?.abs());
            for [p, q, t] in tris {
                let ang = triangle_angles(&m, p, q, t).map_err(|e| e.to_string())?;
                let area = triangle_area(&m, p, q, t).map_err(|e| e.to_string())?;
                gb = gb.max((ang.iter().sum::<f64>() - (std::f64::consts::PI + k0 * area)).abs());
            }
        }
        r.passed = worst <= self.tol.derivative && geo_k <= 1e-9 && gb <= 1e-6;
        r.metric("max_error", worst);
        r.metric("geodesic_curvature", geo_k);
        r.metric("gauss_bonnet_error", gb);
        r.metric("rows", rows.len() as f64);
        r.summary = format!("max derivative error {worst:.2e}; geodesic k {geo_k:.1e}; Gauss-Bonnet {gb:.1e}");
        r.witness = rows.get(wi).map(|row| json!(row));
        r.derivatives = rows;
        Ok(())
    }
}
