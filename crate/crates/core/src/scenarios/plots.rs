use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::run::{Outline, RunReport};
use super::ScenarioError;
use crate::geodesics::Side;
use crate::hyperbolic::write_derivative_csv;

const PANEL: f64 = 420.0;
const MARGIN: f64 = 20.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"];

fn csv_err(e: csv::Error) -> ScenarioError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => ScenarioError::Io(io),
        other => ScenarioError::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, ScenarioError> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes the SVG overview and one CSV per path, audit, convergence table and
/// derivative suite into `dir`. Returns the written files in order.
pub fn emit_plots(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>, ScenarioError> {
    std::fs::create_dir_all(dir)?;
    let body = &report.body;
    let name = &body.scenario;
    let mut files = Vec::new();
    let svg = dir.join(format!("{name}.svg"));
    std::fs::write(&svg, overview_svg(report))?;
    files.push(svg);
    for c in &body.checks {
        let stem = format!("{name}_c{}_{}", c.index, c.kind);
        for (j, p) in c.paths.iter().enumerate() {
            let f = dir.join(format!("{stem}_path{j}.csv"));
            p.to_path().write_csv(create(&f)?).map_err(csv_err)?;
            files.push(f);
        }
        if let Some(a) = &c.audit {
            let f = dir.join(format!("{stem}_audit.csv"));
            a.write_csv(create(&f)?).map_err(csv_err)?;
            files.push(f);
        }
        if let Some(t) = &c.convergence {
            let f = dir.join(format!("{stem}_convergence.csv"));
            t.write_csv(create(&f)?).map_err(csv_err)?;
            files.push(f);
        }
        if !c.derivatives.is_empty() {
            let f = dir.join(format!("{stem}_derivative.csv"));
            write_derivative_csv(&c.derivatives, create(&f)?).map_err(csv_err)?;
            files.push(f);
        }
    }
    Ok(files)
}

/// Maps one side's plane coordinates into its panel.
struct Panel {
    x0: f64,
    lo: [f64; 2],
    scale: f64,
}

impl Panel {
    fn fit(x0: f64, pts: &[[f64; 2]]) -> Panel {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in pts {
            for i in 0..2 {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        if !lo[0].is_finite() {
            lo = [-1.0, -1.0];
            hi = [1.0, 1.0];
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
        let scale = (PANEL - 2.0 * MARGIN) / span;
        // Centre the drawing in the panel.
        let pad = [(span - (hi[0] - lo[0])) / 2.0, (span - (hi[1] - lo[1])) / 2.0];
        Panel { x0, lo: [lo[0] - pad[0], lo[1] - pad[1]], scale }
    }

    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        (self.x0 + MARGIN + (p[0] - self.lo[0]) * self.scale, PANEL - MARGIN - (p[1] - self.lo[1]) * self.scale + 30.0)
    }

    fn polyline(&self, out: &mut String, pts: &[[f64; 2]], closed: bool, style: &str) {
        if pts.is_empty() {
            return;
        }
        let mut d = String::new();
        for p in pts {
            let (x, y) = self.map(*p);
            let _ = write!(d, "{x:.2},{y:.2} ");
        }
        let tag = if closed { "polygon" } else { "polyline" };
        let _ = writeln!(out, "<{tag} points=\"{}\" fill=\"none\" {style}/>", d.trim_end());
    }

    fn dot(&self, out: &mut String, p: [f64; 2], r: f64, fill: &str) {
        let (x, y) = self.map(p);
        let _ = writeln!(out, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{r}\" fill=\"{fill}\"/>");
    }
}

/// Blue for slack, red for violation, scaled by `m`.
fn violation_color(v: f64, m: f64) -> String {
    let t = if m > 0.0 { (v / m).clamp(-1.0, 1.0) } else { 0.0 };
    let (r, g, b) = if t >= 0.0 {
        (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
    } else {
        (255.0 * (1.0 + t), 255.0 * (1.0 + t), 255.0)
    };
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn side_points(outline: &Outline, side: Side) -> Vec<[f64; 2]> {
    let Some(names) = &outline.side_domains else {
        return outline.loops.iter().flat_map(|l| l.points.iter().copied()).collect();
    };
    let name = &names[if side == Side::A { 0 } else { 1 }];
    outline.loops.iter().filter(|l| &l.domain == name).flat_map(|l| l.points.iter().copied()).collect()
}

/// Two panels, side A on the left and side B on the right, each in its own
/// coordinates; without a gluing all domains share one panel.
fn overview_svg(report: &RunReport) -> String {
    let body = &report.body;
    let o = &body.outline;
    let glued = o.side_domains.is_some();
    let width = if glued { 2.0 * PANEL } else { PANEL };
    let height = PANEL + 70.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(s, "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>");
    let _ = writeln!(s, "<text x=\"10\" y=\"18\">{} (seed {}, h = {})</text>", escape(&body.scenario), body.seed, body.environment.h);
    if o.loops.is_empty() {
        let _ = writeln!(s, "<text x=\"10\" y=\"60\">no planar geometry</text>");
        s.push_str("</svg>\n");
        return s;
    }
    let panels = if glued {
        let mut pa = side_points(o, Side::A);
        pa.extend(&o.seam_a);
        let mut pb = side_points(o, Side::B);
        pb.extend(&o.seam_b);
        vec![(Side::A, Panel::fit(0.0, &pa)), (Side::B, Panel::fit(PANEL, &pb))]
    } else {
        let all: Vec<[f64; 2]> = o.loops.iter().flat_map(|l| l.points.iter().copied()).collect();
        vec![(Side::A, Panel::fit(0.0, &all))]
    };
    for (side, panel) in &panels {
        if glued {
            let (label, x) = if *side == Side::A { ("A", 10.0) } else { ("B", PANEL + 10.0) };
            let _ = writeln!(s, "<text x=\"{x}\" y=\"40\">side {label}</text>");
        }
        for l in &o.loops {
            let on_side = match &o.side_domains {
                Some(n) => l.domain == n[if *side == Side::A { 0 } else { 1 }],
                None => true,
            };
            if on_side {
                panel.polyline(&mut s, &l.points, true, "stroke=\"#555\" stroke-width=\"1\"");
            }
        }
        if glued {
            let seam = if *side == Side::A { &o.seam_a } else { &o.seam_b };
            panel.polyline(&mut s, seam, false, "stroke=\"#ff7f0e\" stroke-width=\"3\"");
        }
    }
    let panel_of = |side: Side| panels.iter().find(|p| p.0 == side).or(panels.first()).map(|p| &p.1).expect("one panel");
    let mut color = 0;
    for c in &body.checks {
        for p in &c.paths {
            let col = PALETTE[color % PALETTE.len()];
            color += 1;
            // Split the path into same-side runs.
            let mut run: Vec<[f64; 2]> = Vec::new();
            let mut run_side = p.vertices.first().map(|v| v.side).unwrap_or(Side::A);
            for v in &p.vertices {
                if v.side != run_side {
                    panel_of(run_side).polyline(&mut s, &run, false, &format!("stroke=\"{col}\" stroke-width=\"1.5\""));
                    run.clear();
                    run_side = v.side;
                }
                run.push([v.p.x, v.p.y]);
            }
            panel_of(run_side).polyline(&mut s, &run, false, &format!("stroke=\"{col}\" stroke-width=\"1.5\""));
            if let (Some(a), Some(b)) = (p.vertices.first(), p.vertices.last()) {
                panel_of(a.side).dot(&mut s, [a.p.x, a.p.y], 2.5, col);
                panel_of(b.side).dot(&mut s, [b.p.x, b.p.y], 2.5, col);
            }
        }
    }
    let audits: Vec<_> = body.checks.iter().filter_map(|c| c.audit.as_ref()).collect();
    if !audits.is_empty() {
        let m = audits.iter().flat_map(|a| a.reports.iter()).map(|r| r.max_violation.abs()).fold(0.0, f64::max);
        for a in &audits {
            for r in &a.reports {
                if let Some(w) = &r.witness {
                    let col = violation_color(r.max_violation, m);
                    panel_of(w.a.side).dot(&mut s, [w.a.p.x, w.a.p.y], 2.0, &col);
                    panel_of(w.b.side).dot(&mut s, [w.b.p.x, w.b.p.y], 2.0, &col);
                }
            }
        }
        // Colour scale from −m to +m.
        let y = height - 22.0;
        for i in 0..=20 {
            let v = m * (i as f64 / 10.0 - 1.0);
            let _ = writeln!(
                s,
                "<rect x=\"{:.1}\" y=\"{y}\" width=\"8\" height=\"10\" fill=\"{}\"/>",
                10.0 + 8.0 * i as f64,
                violation_color(v, m)
            );
        }
        let _ = writeln!(s, "<text x=\"10\" y=\"{:.1}\">violation {:.3e} .. {:.3e}</text>", y - 4.0, -m, m);
    }
    s.push_str("</svg>\n");
    s
}
