use std::path::{Path, PathBuf};
use std::process::ExitCode;

use catglue::scenarios::{
    builtin, builtin_source, calibrate, emit_plots, list_builtins, parse_scenario, run_scenario_with, scenario_to_toml,
    RunOptions, RunReport, Scenario,
};
use clap::{Parser, Subcommand};

/// Runs glued-surface scenarios and their CAT(0) audits.
#[derive(Parser, Debug)]
#[command(name = "catglue", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario file or builtin and write its report.
    Run {
        /// Path to a scenario file, or the name of a builtin.
        scenario: String,
        /// Report file; defaults to `<name>.json` in $CATGLUE_OUT_DIR, or stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for CSV/SVG plot data; defaults to $CATGLUE_OUT_DIR/plots.
        #[arg(long)]
        plots: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Discretization length.
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, env = "CATGLUE_OUT_DIR", hide_env_values = true)]
        out_dir: Option<PathBuf>,
    },
    /// List the builtin scenarios.
    List,
    /// Print the document of a builtin scenario.
    Show { name: String },
    /// Run the h-refinement pilot and report the audit constant C.
    Calibrate {
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        h: Option<f64>,
        /// Write the scenario back with `calibrated_c` set.
        #[arg(long)]
        write: Option<PathBuf>,
    },
    /// Pretty-print a report file.
    Report { file: PathBuf },
}

type Res<T> = Result<T, String>;

fn load(spec: &str) -> Res<Scenario> {
    let path = Path::new(spec);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        parse_scenario(&text).map_err(|e| format!("{}: {e}", path.display()))
    } else {
        builtin(spec).map_err(|e| format!("{e} (and no file of that name)"))
    }
}

fn write_file(path: &Path, text: &str) -> Res<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    }
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_run(
    scenario: &str,
    out: Option<PathBuf>,
    plots: Option<PathBuf>,
    seed: Option<u64>,
    h: Option<f64>,
    out_dir: Option<PathBuf>,
) -> Res<bool> {
    let sc = load(scenario)?;
    let mut report: RunReport = run_scenario_with(&sc, &RunOptions { seed, h }).map_err(|e| e.to_string())?;
    let out = out.or_else(|| out_dir.as_ref().map(|d| d.join(format!("{}.json", sc.name))));
    let plots = plots.or_else(|| out_dir.as_ref().map(|d| d.join("plots")));
    if let Some(dir) = &plots {
        let files = emit_plots(&report, dir).map_err(|e| e.to_string())?;
        report.body.artifacts = files.iter().map(|f| f.display().to_string()).collect();
    }
    eprint!("{}", report.pretty());
    match &out {
        Some(p) => {
            write_file(p, &(report.to_json() + "\n"))?;
            eprintln!("report written to {}", p.display());
        }
        None => println!("{}", report.to_json()),
    }
    Ok(report.all_as_expected())
}

fn cmd_calibrate(scenario: &str, seed: Option<u64>, h: Option<f64>, write: Option<PathBuf>) -> Res<bool> {
    let mut sc = load(scenario)?;
    let cal = calibrate(&sc, &RunOptions { seed, h }).map_err(|e| e.to_string())?;
    println!("scenario {}", sc.name);
    for (i, w) in cal.hs.windows(2).enumerate() {
        println!("  |viol({}) - viol({})| = {:.6e}", w[0], w[1], cal.diffs[i]);
    }
    for r in &cal.shrink_ratios {
        println!("  shrink ratio {r:.3}");
    }
    println!("  C = {:.6e} over {} pilot triangles", cal.c, cal.pilots);
    let ok = cal.min_shrink_ratio() >= 1.7;
    if !ok {
        eprintln!("warning: violation differences shrink by less than 1.7 per halving");
    }
    if let Some(p) = write {
        sc.numerics.tolerances.calibrated_c = Some(cal.c);
        write_file(&p, &scenario_to_toml(&sc))?;
        println!("scenario with calibrated C written to {}", p.display());
    }
    Ok(ok)
}

fn cmd_report(file: &Path) -> Res<bool> {
    let text = std::fs::read_to_string(file).map_err(|e| format!("{}: {e}", file.display()))?;
    let report: RunReport = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", file.display()))?;
    print!("{}", report.pretty());
    println!("  elapsed {} ms", report.metadata.elapsed_ms);
    Ok(report.all_as_expected())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, out, plots, seed, h, out_dir } => cmd_run(&scenario, out, plots, seed, h, out_dir),
        Command::List => {
            for name in list_builtins() {
                let desc = builtin(name).map(|s| s.description).unwrap_or_default();
                println!("{name:<24} {desc}");
            }
            Ok(true)
        }
        Command::Show { name } => match builtin_source(&name) {
            Some(s) => {
                print!("{s}");
                Ok(true)
            }
            None => Err(format!("unknown builtin scenario `{name}`")),
        },
        Command::Calibrate { scenario, seed, h, write } => cmd_calibrate(&scenario, seed, h, write),
        Command::Report { file } => cmd_report(&file),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
