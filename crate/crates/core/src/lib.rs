//! Glued planar domains, their induced length metric, and numerical audits of
//! the CAT(0) gluing condition on signed boundary curvature.

pub mod curves;
pub mod domains;
pub mod geodesics;
pub mod geom;
pub mod gluing;
pub mod cat_compare;
pub mod approximation;
pub mod hyperbolic;
pub mod scenarios;

pub use curves::{BoundaryCurve, CurvatureProfile, CurveError, InteriorSide};
pub use domains::{make_domain, BoundaryLoop, ConditionReport, Domain, DomainError, GlueArc, Location, LoopPiece};
pub use geodesics::{GeodesicError, GeodesicPath, GeodesicSpace, Side, TaggedPoint};
pub use geom::Vec2;
pub use gluing::{glue, Crossing, GlueError, GluedSurface};
pub use approximation::ApproxError;
pub use cat_compare::CatError;
pub use hyperbolic::HypError;
pub use scenarios::ScenarioError;

/// Any error raised by the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Glue(#[from] GlueError),
    #[error(transparent)]
    Cat(#[from] CatError),
    #[error(transparent)]
    Approx(#[from] ApproxError),
    #[error(transparent)]
    Hyperbolic(#[from] HypError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}
