use super::{parse_scenario, Scenario, ScenarioError};

const BUILTINS: [(&str, &str); 5] = [
    ("flat_glue", include_str!("../../scenarios/flat_glue.toml")),
    ("concave_convex", include_str!("../../scenarios/concave_convex.toml")),
    ("two_disks", include_str!("../../scenarios/two_disks.toml")),
    ("equality_point", include_str!("../../scenarios/equality_point.toml")),
    ("hyperbolic_derivatives", include_str!("../../scenarios/hyperbolic_derivatives.toml")),
];

pub fn list_builtins() -> Vec<&'static str> {
    BUILTINS.iter().map(|(n, _)| *n).collect()
}

/// Source text of a builtin scenario.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn builtin(name: &str) -> Result<Scenario, ScenarioError> {
    let src = builtin_source(name).ok_or_else(|| ScenarioError::UnknownBuiltin(name.to_string()))?;
    parse_scenario(src)
}
