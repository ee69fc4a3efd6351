//! Scenario documents (TOML). The grammar is described in the README.

use serde::{Deserialize, Serialize};

use crate::geom::Vec2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub domains: Vec<DomainSpec>,
    #[serde(default)]
    pub glue: Option<GlueSpec>,
    #[serde(default)]
    pub window: Option<WindowSpec>,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub h: f64,
    pub portals: usize,
    pub n_samples: usize,
    /// Condition-check grid; defaults to len(J)/1024.
    pub grid_step: Option<f64>,
    pub tolerances: Tolerances,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics { h: 1e-3, portals: 65, n_samples: 16, grid_step: None, tolerances: Tolerances::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Audit constant C; the threshold is C·h.
    pub calibrated_c: Option<f64>,
    /// Absolute audit threshold, overriding C·h.
    pub audit_threshold: Option<f64>,
    /// Step sizes of the calibration pilot, coarse to fine.
    pub calibration_hs: Vec<f64>,
    pub calibration_pilots: usize,
    /// Bound on |θ_A + θ_B − π| (max over pairs).
    pub angle: f64,
    /// Bound on the median of |θ_A + θ_B − π|.
    pub angle_median: f64,
    /// Probe slack in units of h.
    pub probe_slack_h: f64,
    pub convergence: f64,
    pub derivative: f64,
    pub isometry: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            calibrated_c: None,
            audit_threshold: None,
            calibration_hs: vec![4e-3, 2e-3, 1e-3],
            calibration_pilots: 10,
            angle: 1e-2,
            angle_median: 2e-3,
            probe_slack_h: 10.0,
            convergence: 1e-3,
            derivative: 1e-3,
            isometry: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub name: String,
    pub loops: Vec<LoopSpec>,
}

/// A loop traced piece by piece from `start` with initial direction `heading`.
/// Each piece starts where the previous one ended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSpec {
    pub start: [f64; 2],
    #[serde(default)]
    pub heading: f64,
    pub pieces: Vec<PieceSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PieceSpec {
    /// Straight segment to `to`, or to the current point with `x` and/or `y`
    /// replaced, or back to the loop start with `close = true`.
    Segment {
        #[serde(default)]
        to: Option<[f64; 2]>,
        #[serde(default)]
        x: Option<f64>,
        #[serde(default)]
        y: Option<f64>,
        #[serde(default)]
        close: bool,
        #[serde(default)]
        clip: bool,
    },
    /// Circular arc continuing the current heading; positive `angle` turns left.
    Arc {
        radius: f64,
        angle: f64,
        #[serde(default)]
        clip: bool,
    },
    /// Curve integrated from tabulated curvature (monotone cubic).
    Profile {
        s: Vec<f64>,
        kappa: Vec<f64>,
        #[serde(default)]
        clip: bool,
    },
    /// Curvature κ(s) = Σ cᵢ sⁱ on [0, length].
    Polynomial {
        length: f64,
        coeffs: Vec<f64>,
        #[serde(default)]
        clip: bool,
    },
    /// Corner: turns the heading by `angle` (positive = left) without moving.
    Turn { angle: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlueSpec {
    pub a: ArcSpec,
    pub b: ArcSpec,
    #[serde(default)]
    pub enforce: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcSpec {
    pub domain: String,
    #[serde(default, rename = "loop")]
    pub loop_index: usize,
    pub start: f64,
    pub length: f64,
    #[serde(default)]
    pub reversed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub center: f64,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub k0: Vec<f64>,
    #[serde(default)]
    pub radii: Vec<f64>,
}

/// A point on one side of the glued surface.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub side: SideName,
    pub at: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SideName {
    A,
    B,
}

/// Random points near the seam: a uniform seam parameter in `[lo, hi]`
/// (defaults to J), pushed into a side by a distance in `[min_offset, max_offset]`
/// along the interior normal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeamBand {
    #[serde(default)]
    pub lo: Option<f64>,
    #[serde(default)]
    pub hi: Option<f64>,
    pub min_offset: f64,
    pub max_offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    Conditions {
        #[serde(default)]
        expect: Option<bool>,
    },
    Cat0Audit {
        trials: usize,
        /// Locality radius around the seam anchors.
        radius: f64,
        /// Anchors are `anchors` evenly spaced seam points in `[lo, hi]`.
        #[serde(default = "default_anchors")]
        anchors: usize,
        #[serde(default)]
        lo: Option<f64>,
        #[serde(default)]
        hi: Option<f64>,
        /// Re-audits the worst triangle at h/2.
        #[serde(default)]
        recheck_half_h: bool,
        #[serde(default)]
        expect: Option<bool>,
    },
    CrossingAngles {
        pairs: usize,
        band: SeamBand,
        #[serde(default)]
        expect: Option<bool>,
    },
    MultiplicityProbe {
        #[serde(default)]
        pairs: Vec<[PointSpec; 2]>,
        /// Additional random A-to-B pairs in the band.
        #[serde(default)]
        random_pairs: usize,
        #[serde(default)]
        band: Option<SeamBand>,
        /// Required number of geodesics per pair.
        #[serde(default)]
        count: Option<usize>,
        #[serde(default)]
        expect: Option<bool>,
    },
    Geodesics {
        pairs: Vec<[PointSpec; 2]>,
    },
    FlatIsometry {
        pairs: usize,
        #[serde(default)]
        expect: Option<bool>,
    },
    ConvergenceStudy {
        ks: Vec<usize>,
        pairs: Vec<[PointSpec; 2]>,
        #[serde(default)]
        expect: Option<bool>,
    },
    DerivativeSuite {
        #[serde(default)]
        steps: Option<Vec<f64>>,
        #[serde(default)]
        expect: Option<bool>,
    },
}

fn default_anchors() -> usize {
    33
}

impl CheckSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            CheckSpec::Conditions { .. } => "conditions",
            CheckSpec::Cat0Audit { .. } => "cat0_audit",
            CheckSpec::CrossingAngles { .. } => "crossing_angles",
            CheckSpec::MultiplicityProbe { .. } => "multiplicity_probe",
            CheckSpec::Geodesics { .. } => "geodesics",
            CheckSpec::FlatIsometry { .. } => "flat_isometry",
            CheckSpec::ConvergenceStudy { .. } => "convergence_study",
            CheckSpec::DerivativeSuite { .. } => "derivative_suite",
        }
    }

    pub fn expect(&self) -> Option<bool> {
        match self {
            CheckSpec::Conditions { expect }
            | CheckSpec::Cat0Audit { expect, .. }
            | CheckSpec::CrossingAngles { expect, .. }
            | CheckSpec::MultiplicityProbe { expect, .. }
            | CheckSpec::FlatIsometry { expect, .. }
            | CheckSpec::ConvergenceStudy { expect, .. }
            | CheckSpec::DerivativeSuite { expect, .. } => *expect,
            CheckSpec::Geodesics { .. } => None,
        }
    }

    pub fn needs_glue(&self) -> bool {
        !matches!(self, CheckSpec::DerivativeSuite { .. })
    }
}

impl PointSpec {
    pub fn point(&self) -> Vec2 {
        Vec2::new(self.at[0], self.at[1])
    }
}
