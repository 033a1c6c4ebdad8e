//! Bar chart of R' per UDA, as SVG plus the CSV it was drawn from.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::pipeline::RunReport;

#[derive(Debug, Error)]
pub enum ChartError {
    #[error("no UDA in the report has an R' value to plot")]
    Empty,
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartBar {
    pub uda_id: String,
    pub r_prime: f64,
    pub sum_abs_diff: u64,
    pub max_sum: u64,
}

/// UDAs with fewer than two ranked universities have no R' and are left out.
pub fn chart_bars(r: &RunReport) -> Vec<ChartBar> {
    r.udas
        .iter()
        .filter_map(|u| {
            u.r_prime.as_ref().map(|rp| ChartBar {
                uda_id: u.uda_id.clone(),
                r_prime: rp.r_prime,
                sum_abs_diff: rp.sum_abs_diff,
                max_sum: rp.max_sum,
            })
        })
        .collect()
}

pub fn render_chart_csv(bars: &[ChartBar]) -> String {
    let mut out = String::from("uda_id,r_prime,sum_abs_diff,max_sum\n");
    for b in bars {
        let _ = writeln!(out, "{},{:.2},{},{}", b.uda_id, b.r_prime, b.sum_abs_diff, b.max_sum);
    }
    out
}

fn axis_max(v: f64) -> f64 {
    let steps = [1.0, 2.0, 5.0, 10.0, 20.0, 25.0, 50.0, 100.0];
    steps.iter().copied().find(|s| *s >= v).unwrap_or(100.0)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn render_chart_svg(bars: &[ChartBar]) -> String {
    const LEFT: f64 = 60.0;
    const TOP: f64 = 40.0;
    const PLOT_H: f64 = 240.0;
    const SLOT: f64 = 56.0;
    const BAR: f64 = 36.0;
    let width = LEFT + SLOT * bars.len() as f64 + 20.0;
    let height = TOP + PLOT_H + 50.0;
    let ymax = axis_max(bars.iter().map(|b| b.r_prime).fold(0.0, f64::max));
    let y = |v: f64| TOP + PLOT_H * (1.0 - v / ymax);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="13">R' by UDA (%)</text>"#,
        width / 2.0
    );
    for i in 0..=5 {
        let v = ymax * i as f64 / 5.0;
        let yy = y(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.1}" y1="{yy:.1}" x2="{:.1}" y2="{yy:.1}" stroke="#ddd"/>"##,
            width - 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            yy + 4.0,
            format_tick(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT:.1}" y1="{TOP:.1}" x2="{LEFT:.1}" y2="{:.1}" stroke="black"/>"#,
        TOP + PLOT_H
    );
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT:.1}" y1="{0:.1}" x2="{1:.1}" y2="{0:.1}" stroke="black"/>"#,
        TOP + PLOT_H,
        width - 20.0
    );
    for (i, b) in bars.iter().enumerate() {
        let x = LEFT + SLOT * i as f64 + (SLOT - BAR) / 2.0;
        let top = y(b.r_prime);
        let _ = writeln!(
            s,
            r##"<rect x="{x:.1}" y="{top:.1}" width="{BAR:.1}" height="{:.1}" fill="#4a7ab5"/>"##,
            TOP + PLOT_H - top
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.2}</text>"#,
            x + BAR / 2.0,
            top - 4.0,
            b.r_prime
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            x + BAR / 2.0,
            TOP + PLOT_H + 16.0,
            escape(&b.uda_id)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn format_tick(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.1}")
    }
}

/// Writes the SVG to `path` and the data next to it with a `.csv` extension.
/// Returns the CSV path.
pub fn emit_chart(r: &RunReport, path: &Path) -> Result<PathBuf, ChartError> {
    let bars = chart_bars(r);
    if bars.is_empty() {
        return Err(ChartError::Empty);
    }
    let csv_path = path.with_extension("csv");
    let write = |p: &Path, body: String| std::fs::write(p, body).map_err(|source| ChartError::Io { path: p.to_path_buf(), source });
    write(path, render_chart_svg(&bars))?;
    write(&csv_path, render_chart_csv(&bars))?;
    Ok(csv_path)
}
