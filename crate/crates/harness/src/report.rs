//! Report files for rate experiments and DKW tables.
//!
//! A rate report with stem `s` consists of
//! - `s_cells.csv`: columns `n, N, mean_excess, se, median, zero_fraction`
//!   (for threshold experiments the statistic is `|θ̂ − θ*|`);
//! - `s_fit.json`: the full [`RateFitResult`];
//! - `s.svg`: log-log scatter of the cell means with the fitted and the
//!   theoretical line.
//!
//! Floats are written in shortest round-trip form, so every file is a pure
//! function of the result and re-reading it reproduces the record exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fbeta_core::Result;
use serde::{Deserialize, Serialize};

use crate::dkw::DkwTable;
use crate::experiment::{CellSummary, RateFitResult, Statistic};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Svg,
}

pub const ALL_FORMATS: [ReportFormat; 3] = [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Svg];

#[derive(Debug, Serialize, Deserialize)]
struct CellRow {
    n: usize,
    #[serde(rename = "N")]
    big_n: u64,
    mean_excess: f64,
    se: f64,
    median: f64,
    zero_fraction: f64,
}

pub fn cells_path(dir: &Path, stem: &str) -> PathBuf {
    dir.join(format!("{stem}_cells.csv"))
}

pub fn fit_path(dir: &Path, stem: &str) -> PathBuf {
    dir.join(format!("{stem}_fit.json"))
}

pub fn svg_path(dir: &Path, stem: &str) -> PathBuf {
    dir.join(format!("{stem}.svg"))
}

/// Writes the requested files and returns their paths.
pub fn emit_report(result: &RateFitResult, dir: &Path, stem: &str, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for format in formats {
        let path = match format {
            ReportFormat::Csv => {
                let path = cells_path(dir, stem);
                write_cells_csv(&path, &result.cells)?;
                path
            }
            ReportFormat::Json => {
                let path = fit_path(dir, stem);
                std::fs::write(&path, serde_json::to_string_pretty(result)? + "\n")?;
                path
            }
            ReportFormat::Svg => {
                let path = svg_path(dir, stem);
                std::fs::write(&path, render_svg(result))?;
                path
            }
        };
        written.push(path);
    }
    Ok(written)
}

pub fn write_cells_csv(path: &Path, cells: &[CellSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for c in cells {
        w.serialize(CellRow {
            n: c.n,
            big_n: c.big_n,
            mean_excess: c.mean,
            se: c.se,
            median: c.median,
            zero_fraction: c.zero_fraction,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cells_csv(path: &Path) -> Result<Vec<CellSummary>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut cells = Vec::new();
    for row in r.deserialize() {
        let row: CellRow = row?;
        cells.push(CellSummary {
            n: row.n,
            big_n: row.big_n,
            mean: row.mean_excess,
            se: row.se,
            median: row.median,
            zero_fraction: row.zero_fraction,
        });
    }
    Ok(cells)
}

pub fn read_fit_json(path: &Path) -> Result<RateFitResult> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Writes `stem.csv` and `stem.json` for a DKW table.
pub fn emit_dkw_report(table: &DkwTable, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let mut w = csv::Writer::from_path(&csv_path)?;
    for row in &table.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    let json_path = dir.join(format!("{stem}.json"));
    std::fs::write(&json_path, serde_json::to_string_pretty(table)? + "\n")?;
    Ok(vec![csv_path, json_path])
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

/// Self-contained SVG: one circle per positive cell, `<line class="fit">`
/// and `<line class="theory">` when both are defined.
pub fn render_svg(result: &RateFitResult) -> String {
    let pts: Vec<(f64, f64)> = result
        .cells
        .iter()
        .filter(|c| c.mean > 0.0)
        .map(|c| ((c.n as f64).log10(), c.mean.log10()))
        .collect();
    let label = match result.statistic {
        Statistic::Excess => "mean excess score",
        Statistic::ThresholdError => "mean threshold error",
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{} ({})</text>"#,
        WIDTH / 2.0,
        label,
        escape(&result.family)
    );
    if pts.is_empty() {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle">all cells are zero: infinite rate</text>"#,
            WIDTH / 2.0,
            HEIGHT / 2.0
        );
        s.push_str("</svg>\n");
        return s;
    }

    let slope_line = |slope: f64, anchor: (f64, f64)| move |x: f64| anchor.1 + slope * (x - anchor.0);
    let (x0, x1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (x0, x1) = if x1 > x0 { (x0, x1) } else { (x0 - 0.5, x1 + 0.5) };
    let fitted = result.slope.zip(result.intercept).map(|(m, c)| {
        // the fit is in natural logs; slopes are base-free
        let f = move |x: f64| m * x + c / std::f64::consts::LN_10;
        (f(x0), f(x1))
    });
    let centroid = (
        pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64,
        pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64,
    );
    let theory = result.theoretical_exponent.map(|e| {
        let f = slope_line(e, centroid);
        (f(x0), f(x1))
    });
    let mut ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    for (a, b) in fitted.iter().chain(theory.iter()) {
        ys.extend([*a, *b]);
    }
    let (y0, y1) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
    let (y0, y1) = if y1 > y0 { (y0, y1) } else { (y0 - 0.5, y1 + 0.5) };
    let pad_x = 0.05 * (x1 - x0);
    let pad_y = 0.08 * (y1 - y0);
    let (x0, x1, y0, y1) = (x0 - pad_x, x1 + pad_x, y0 - pad_y, y1 + pad_y);
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (WIDTH - LEFT - RIGHT);
    let py = |y: f64| HEIGHT - BOTTOM - (y - y0) / (y1 - y0) * (HEIGHT - TOP - BOTTOM);

    let _ = writeln!(
        s,
        r#"<path d="M{:.2},{:.2} V{:.2} H{:.2}" stroke="black" fill="none"/>"#,
        LEFT,
        TOP,
        HEIGHT - BOTTOM,
        WIDTH - RIGHT
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">log10 n</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">log10 {}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        label
    );
    for c in result.cells.iter().filter(|c| c.mean > 0.0) {
        let (x, y) = ((c.n as f64).log10(), c.mean.log10());
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="steelblue"><title>n={} mean={:e}</title></circle>"#,
            px(x),
            py(y),
            c.n,
            c.mean
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"#,
            px(x),
            HEIGHT - BOTTOM + 14.0,
            c.n
        );
    }
    if let (Some((a, b)), Some((ta, tb))) = (fitted, theory) {
        let _ = writeln!(
            s,
            r#"<line class="fit" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick" stroke-width="2"/>"#,
            px(x0 + pad_x),
            py(a),
            px(x1 - pad_x),
            py(b)
        );
        let _ = writeln!(
            s,
            r#"<line class="theory" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-width="2" stroke-dasharray="6 4"/>"#,
            px(x0 + pad_x),
            py(ta),
            px(x1 - pad_x),
            py(tb)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">fitted slope {:.3}, theoretical {:.3}</text>"#,
            LEFT + 10.0,
            TOP + 14.0,
            result.slope.unwrap_or(f64::NAN),
            result.theoretical_exponent.unwrap_or(f64::NAN)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
