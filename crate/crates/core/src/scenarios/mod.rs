//! Declarative scenarios, the builtin catalogue, the run pipeline and plot
//! emission.

mod build;
mod builtins;
mod format;
mod plots;
mod run;

use thiserror::Error;

pub use build::{build_geometry, sample_band, seam_normal, seam_region, tagged, Geometry};
pub use builtins::{builtin, builtin_source, list_builtins};
pub use format::*;
pub use plots::emit_plots;
pub use run::{
    calibrate, run_scenario, run_scenario_with, CheckResult, Environment, Metadata, Outline, OutlineLoop, PathRecord, PolygonRow,
    ReportBody, RunOptions, RunReport,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid scenario field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("invalid geometry: {0}")]
    GeometryInvalid(String),
    #[error("unknown builtin scenario `{0}`")]
    UnknownBuiltin(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { field: field.into(), message: message.into() }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let sc: Scenario = toml::from_str(text).map_err(|e| {
        let (line, column) = match e.span() {
            Some(span) => {
                let before = &text[..span.start.min(text.len())];
                let line = before.matches('\n').count() + 1;
                let column = before.len() - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
                (line, column)
            }
            None => (0, 0),
        };
        ScenarioError::Parse { line, column, message: e.message().to_string() }
    })?;
    validate(&sc)?;
    Ok(sc)
}

/// Serializes a scenario back to its document form.
pub fn scenario_to_toml(sc: &Scenario) -> String {
    toml::to_string(sc).expect("scenarios always serialize")
}

pub fn validate(sc: &Scenario) -> Result<(), ScenarioError> {
    let n = &sc.numerics;
    if !(n.h > 0.0 && n.h.is_finite()) {
        return Err(invalid("numerics.h", "must be positive"));
    }
    if n.portals < 2 {
        return Err(invalid("numerics.portals", "need at least 2"));
    }
    if n.n_samples == 0 {
        return Err(invalid("numerics.n_samples", "must be positive"));
    }
    if let Some(g) = n.grid_step {
        if !(g > 0.0) {
            return Err(invalid("numerics.grid_step", "must be positive"));
        }
    }
    let hs = &n.tolerances.calibration_hs;
    if hs.len() < 3 || hs.iter().any(|&h| !(h > 0.0)) || hs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("numerics.tolerances.calibration_hs", "need at least 3 decreasing positive steps"));
    }
    for (i, d) in sc.domains.iter().enumerate() {
        if sc.domains[..i].iter().any(|o| o.name == d.name) {
            return Err(invalid(format!("domains[{i}].name"), format!("duplicate domain `{}`", d.name)));
        }
        if d.loops.is_empty() {
            return Err(invalid(format!("domains[{i}].loops"), "a domain needs at least one loop"));
        }
    }
    if let Some(g) = &sc.glue {
        for (label, arc) in [("glue.a", &g.a), ("glue.b", &g.b)] {
            let Some(d) = sc.domains.iter().find(|d| d.name == arc.domain) else {
                return Err(invalid(format!("{label}.domain"), format!("no domain named `{}`", arc.domain)));
            };
            if arc.loop_index >= d.loops.len() {
                return Err(invalid(format!("{label}.loop"), format!("domain `{}` has {} loops", d.name, d.loops.len())));
            }
        }
    }
    for (i, c) in sc.checks.iter().enumerate() {
        let field = format!("checks[{i}]");
        if c.needs_glue() && sc.glue.is_none() {
            return Err(invalid(field, format!("{} needs a [glue] section", c.kind())));
        }
        match c {
            CheckSpec::ConvergenceStudy { ks, .. } => {
                if sc.window.is_none() {
                    return Err(invalid(field, "convergence_study needs a [window] section"));
                }
                if ks.is_empty() || ks.contains(&0) {
                    return Err(invalid(format!("{field}.ks"), "need positive k values"));
                }
            }
            CheckSpec::DerivativeSuite { .. } if sc.model.is_none() => {
                return Err(invalid(field, "derivative_suite needs a [model] section"));
            }
            CheckSpec::Cat0Audit { trials, radius, .. } => {
                if *trials == 0 || !(*radius > 0.0) {
                    return Err(invalid(field, "cat0_audit needs trials > 0 and radius > 0"));
                }
            }
            CheckSpec::CrossingAngles { band, .. } => check_band(&field, band)?,
            CheckSpec::MultiplicityProbe { band, random_pairs, .. } => {
                if *random_pairs > 0 {
                    match band {
                        Some(b) => check_band(&field, b)?,
                        None => return Err(invalid(field, "random_pairs needs a band")),
                    }
                }
            }
            _ => {}
        }
    }
    Ok(())
}

fn check_band(field: &str, b: &SeamBand) -> Result<(), ScenarioError> {
    if !(b.min_offset >= 0.0 && b.max_offset >= b.min_offset) {
        return Err(invalid(format!("{field}.band"), "need 0 ≤ min_offset ≤ max_offset"));
    }
    Ok(())
}
