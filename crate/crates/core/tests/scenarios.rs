use std::collections::HashSet;
use std::path::Path;

use catglue::scenarios::{
    builtin, builtin_source, emit_plots, list_builtins, parse_scenario, run_scenario, run_scenario_with, scenario_to_toml, RunOptions,
    RunReport, ScenarioError,
};

fn run(name: &str) -> RunReport {
    run_scenario(&builtin(name).unwrap()).unwrap()
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    v.sort();
    v
}

#[test]
fn parse_errors_carry_line_and_column() {
    let text = "name = \"x\"\n\n[numerics]\nh = \"fine\"\n";
    match parse_scenario(text) {
        Err(ScenarioError::Parse { line, column, .. }) => {
            assert_eq!(line, 4);
            assert_eq!(column, 5);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_fields_are_rejected() {
    let text = "name = \"x\"\ncolour = \"red\"\n";
    match parse_scenario(text) {
        Err(ScenarioError::Parse { line, message, .. }) => {
            assert_eq!(line, 2);
            assert!(message.contains("colour"), "{message}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn validation_names_the_field() {
    let text = "name = \"x\"\n[numerics]\nportals = 1\n";
    match parse_scenario(text) {
        Err(ScenarioError::Invalid { field, .. }) => assert_eq!(field, "numerics.portals"),
        other => panic!("{other:?}"),
    }
    let text = "name = \"x\"\n[glue]\na = { domain = \"A\", start = 0.0, length = 1.0 }\nb = { domain = \"B\", start = 0.0, length = 1.0 }\n";
    match parse_scenario(text) {
        Err(ScenarioError::Invalid { field, .. }) => assert_eq!(field, "glue.a.domain"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn bad_geometry_is_reported() {
    let mut sc = builtin("flat_glue").unwrap();
    sc.glue.as_mut().unwrap().a.length = 100.0;
    let err = run_scenario(&sc).unwrap_err();
    assert!(matches!(err, ScenarioError::GeometryInvalid(_) | ScenarioError::Invalid { .. }), "{err:?}");
}

#[test]
fn builtins_are_listed_once() {
    let names = list_builtins();
    let unique: HashSet<_> = names.iter().collect();
    assert_eq!(unique.len(), names.len());
    for required in ["flat_glue", "concave_convex", "two_disks", "equality_point", "hyperbolic_derivatives"] {
        assert!(names.contains(&required), "{required}");
    }
    assert!(matches!(builtin("nope"), Err(ScenarioError::UnknownBuiltin(_))));
    assert!(builtin_source("nope").is_none());
}

#[test]
fn scenarios_survive_a_toml_roundtrip() {
    for name in list_builtins() {
        let sc = builtin(name).unwrap();
        assert_eq!(parse_scenario(&scenario_to_toml(&sc)).unwrap(), sc, "{name}");
    }
}

#[test]
fn flat_glue_passes_and_is_deterministic() {
    let a = run("flat_glue");
    let b = run("flat_glue");
    assert!(a.all_as_expected(), "{}", a.pretty());
    assert!(a.body.checks.iter().all(|c| c.passed));
    assert_eq!(a.body_json(), b.body_json());
    // The seed override changes the random pairs.
    let c = run_scenario_with(&builtin("flat_glue").unwrap(), &RunOptions { seed: Some(99), h: None }).unwrap();
    assert_eq!(c.body.seed, 99);
    assert_ne!(a.body_json(), c.body_json());
    let back: RunReport = serde_json::from_str(&a.to_json()).unwrap();
    assert_eq!(back, a);
}

#[test]
fn flat_glue_plots_are_byte_stable() {
    let report = run("flat_glue");
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let f1 = emit_plots(&report, d1.path()).unwrap();
    emit_plots(&report, d2.path()).unwrap();
    let names = files_in(d1.path());
    assert_eq!(names, files_in(d2.path()));
    assert_eq!(names.iter().filter(|n| n.ends_with(".svg")).count(), 1);
    assert!(names.iter().filter(|n| n.ends_with(".csv")).count() >= 2);
    assert_eq!(f1.len(), names.len());
    for n in &names {
        assert_eq!(std::fs::read(d1.path().join(n)).unwrap(), std::fs::read(d2.path().join(n)).unwrap(), "{n}");
    }
    let audit = names.iter().find(|n| n.ends_with("_audit.csv")).unwrap();
    let text = std::fs::read_to_string(d1.path().join(audit)).unwrap();
    assert!(text.starts_with("trial,violation,ax,ay,bx,by\n"));
    let path = names.iter().find(|n| n.contains("_path")).unwrap();
    assert!(std::fs::read_to_string(d1.path().join(path)).unwrap().starts_with("s,x,y\n"));
}

#[test]
fn empty_check_list_plots_geometry_only() {
    let mut sc = builtin("flat_glue").unwrap();
    sc.checks.clear();
    let report = run_scenario(&sc).unwrap();
    assert!(report.body.checks.is_empty());
    let dir = tempfile::tempdir().unwrap();
    let files = emit_plots(&report, dir.path()).unwrap();
    assert_eq!(files.len(), 1);
    let svg = std::fs::read_to_string(&files[0]).unwrap();
    assert!(svg.contains("<polygon") && svg.contains("side A") && svg.contains("side B"));
}

#[test]
fn two_disks_fail_where_expected() {
    let report = run("two_disks");
    assert!(report.all_as_expected(), "{}", report.pretty());
    let kinds: Vec<(&str, bool)> = report.body.checks.iter().map(|c| (c.kind.as_str(), c.passed)).collect();
    assert_eq!(kinds, [("conditions", false), ("geodesics", true), ("multiplicity_probe", true), ("cat0_audit", false)]);
    for c in report.body.checks.iter().filter(|c| !c.passed) {
        assert!(c.witness.is_some(), "check {} has no witness", c.index);
    }
    // Both probe geodesics reach the SVG.
    let probe = &report.body.checks[2];
    assert_eq!(probe.paths.len(), 2);
    let dir = tempfile::tempdir().unwrap();
    emit_plots(&report, dir.path()).unwrap();
    let svg = std::fs::read_to_string(dir.path().join("two_disks.svg")).unwrap();
    // Path colours in order: the centre geodesic, then the two probe paths.
    for colour in ["#1f77b4", "#d62728", "#2ca02c"] {
        assert!(svg.contains(&format!("stroke=\"{colour}\"")), "{colour}");
    }
    assert!(files_in(dir.path()).iter().any(|n| n.starts_with("two_disks_c2_multiplicity_probe_path1")));
}
