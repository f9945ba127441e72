//! Static SVG line plots over the metrics CSVs: suboptimality or pattern
//! size against iterations or subspaces explored.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{CliError, CliResult};
use crate::experiment::CSV_HEADER;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// Suboptimality vs iterations, log-scale y.
    SuboptIters,
    /// Sparsity-pattern size vs iterations.
    PatternIters,
    /// Suboptimality vs cumulative subspaces explored, log-scale y.
    SuboptExplored,
}

impl Criterion {
    fn log_y(&self) -> bool {
        matches!(self, Criterion::SuboptIters | Criterion::SuboptExplored)
    }

    fn axis_labels(&self) -> (&'static str, &'static str) {
        match self {
            Criterion::SuboptIters => ("iterations", "suboptimality"),
            Criterion::PatternIters => ("iterations", "pattern size"),
            Criterion::SuboptExplored => ("subspaces explored", "suboptimality"),
        }
    }
}

struct Curve {
    name: String,
    points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy)]
struct Row {
    iter: f64,
    suboptimality: f64,
    pattern_size: f64,
    subspaces_explored: f64,
}

fn read_rows(path: &Path) -> CliResult<Vec<Row>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::data(format!("{}: empty file", path.display())))?;
    if header != CSV_HEADER {
        return Err(CliError::data(format!(
            "{}: header does not match the metrics schema",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(CliError::data(format!(
                "{}: row {} has {} columns, expected 7",
                path.display(),
                i + 2,
                cols.len()
            )));
        }
        let parse = |s: &str| -> CliResult<f64> {
            s.parse::<f64>()
                .map_err(|e| CliError::data(format!("{}: row {}: {e}", path.display(), i + 2)))
        };
        rows.push(Row {
            iter: parse(cols[0])?,
            suboptimality: parse(cols[2])?,
            pattern_size: parse(cols[3])?,
            subspaces_explored: parse(cols[4])?,
        });
    }
    if rows.is_empty() {
        return Err(CliError::data(format!("{}: no data rows", path.display())));
    }
    let mut prev = f64::NEG_INFINITY;
    for row in &rows {
        if row.subspaces_explored < prev {
            return Err(CliError::data(format!(
                "{}: subspaces_explored is not nondecreasing",
                path.display()
            )));
        }
        prev = row.subspaces_explored;
    }
    Ok(rows)
}

fn extract(rows: &[Row], criterion: Criterion) -> Vec<(f64, f64)> {
    rows.iter()
        .map(|r| match criterion {
            Criterion::SuboptIters => (r.iter, r.suboptimality),
            Criterion::PatternIters => (r.iter, r.pattern_size),
            Criterion::SuboptExplored => (r.subspaces_explored, r.suboptimality),
        })
        .filter(|&(_, y)| !criterion.log_y() || y > 0.0)
        .collect()
}

/// Render the selected criterion for every input CSV into one SVG document.
/// With `median`, a bold per-row median curve is overlaid.
pub fn plot(paths: &[std::path::PathBuf], criterion: Criterion, median: bool) -> CliResult<String> {
    if paths.is_empty() {
        return Err(CliError::data("no input files"));
    }
    let mut curves = Vec::new();
    let mut extracted_all = Vec::new();
    for path in paths {
        let rows = read_rows(path)?;
        let points = extract(&rows, criterion);
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        extracted_all.push(points.clone());
        curves.push(Curve { name, points });
    }
    if median && curves.len() > 1 {
        let shortest = extracted_all.iter().map(|p| p.len()).min().unwrap_or(0);
        let mut points = Vec::with_capacity(shortest);
        for i in 0..shortest {
            let mut xs: Vec<f64> = extracted_all.iter().map(|p| p[i].0).collect();
            let mut ys: Vec<f64> = extracted_all.iter().map(|p| p[i].1).collect();
            xs.sort_by(f64::total_cmp);
            ys.sort_by(f64::total_cmp);
            points.push((mid(&xs), mid(&ys)));
        }
        curves.push(Curve {
            name: "median".into(),
            points,
        });
    }
    render(&curves, criterion)
}

fn mid(sorted: &[f64]) -> f64 {
    let m = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[m]
    } else {
        0.5 * (sorted[m - 1] + sorted[m])
    }
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 560.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const PALETTE: [&str; 7] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf",
];

fn render(curves: &[Curve], criterion: Criterion) -> CliResult<String> {
    let transform = |y: f64| if criterion.log_y() { y.log10() } else { y };
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for curve in curves {
        for &(x, y) in &curve.points {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(transform(y));
            y_max = y_max.max(transform(y));
        }
    }
    if !x_min.is_finite() || !y_min.is_finite() {
        return Err(CliError::data(
            "no plottable points (all values filtered out)",
        ));
    }
    if x_max - x_min < 1e-12 {
        x_max = x_min + 1.0;
    }
    if y_max - y_min < 1e-12 {
        y_max = y_min + 1.0;
    }

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let to_px = |x: f64, ty: f64| -> (f64, f64) {
        let px = MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
        let py = MARGIN_TOP + (y_max - ty) / (y_max - y_min) * plot_h;
        (px, py)
    };

    let (x_label, y_label) = criterion.axis_labels();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );

    // axes
    let (x0, y0) = (MARGIN_LEFT, HEIGHT - MARGIN_BOTTOM);
    let _ = writeln!(
        svg,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{}\" y2=\"{y0}\" stroke=\"black\"/>",
        WIDTH - MARGIN_RIGHT
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{MARGIN_TOP}\" stroke=\"black\"/>"
    );

    // ticks
    for t in 0..=4 {
        let frac = t as f64 / 4.0;
        let x = x_min + frac * (x_max - x_min);
        let (px, _) = to_px(x, y_min);
        let _ = writeln!(
            svg,
            "<line x1=\"{px}\" y1=\"{y0}\" x2=\"{px}\" y2=\"{}\" stroke=\"black\"/>",
            y0 + 5.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{px}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
            y0 + 20.0,
            format_tick(x)
        );
        let ty = y_min + frac * (y_max - y_min);
        let (_, py) = to_px(x_min, ty);
        let label = if criterion.log_y() {
            format!("1e{}", format_tick(ty))
        } else {
            format_tick(ty)
        };
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{py}\" x2=\"{x0}\" y2=\"{py}\" stroke=\"black\"/>",
            x0 - 5.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{label}</text>",
            x0 - 9.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">{x_label}</text>",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"20\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 20 {})\">{y_label}</text>",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );

    for (i, curve) in curves.iter().enumerate() {
        if curve.points.is_empty() {
            continue;
        }
        let is_median = curve.name == "median";
        let color = if is_median {
            "black"
        } else {
            PALETTE[i % PALETTE.len()]
        };
        let width = if is_median { 3.0 } else { 1.3 };
        let mut points = String::new();
        for &(x, y) in &curve.points {
            let (px, py) = to_px(x, transform(y));
            let _ = write!(points, "{px:.2},{py:.2} ");
        }
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\" points=\"{}\"/>",
            points.trim_end()
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{color}\">{}</text>",
            WIDTH - MARGIN_RIGHT - 160.0,
            MARGIN_TOP + 16.0 * (i as f64 + 1.0),
            xml_escape(&curve.name)
        );
    }
    let _ = writeln!(svg, "</svg>");
    Ok(svg)
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 1000.0 || v.abs() < 0.01 {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
