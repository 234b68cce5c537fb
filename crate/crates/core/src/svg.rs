//! Static SVG line chart of a report: one line per family, bound value
//! against the swept parameter, with the true error dashed.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::report::Report;
use crate::scalar::BoundFamily;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 60.0;
const LEGEND_WIDTH: f64 = 160.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the report. Non-finite values are skipped; an error is returned
/// when nothing finite is left to draw.
pub fn render_svg(report: &Report) -> Result<String> {
    let mut series: BTreeMap<BoundFamily, Vec<(f64, f64)>> = BTreeMap::new();
    let mut truth: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for r in &report.rows {
        if r.value.is_finite() && r.param_value.is_finite() {
            series.entry(r.family).or_default().push((r.param_value, r.value));
        }
        if r.true_gen.is_finite() {
            truth.insert(r.param_value.to_bits(), (r.param_value, r.true_gen));
        }
    }
    let mut truth: Vec<(f64, f64)> = truth.into_values().collect();
    truth.sort_by(|a, b| a.0.total_cmp(&b.0));
    let all: Vec<(f64, f64)> = series.values().flatten().chain(truth.iter()).copied().collect();
    if all.is_empty() {
        return Err(Error::invalid("report", "no finite values to plot"));
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for &(x, y) in &all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let plot_w = WIDTH - 2.0 * MARGIN - LEGEND_WIDTH;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * plot_h;
    let points = |pts: &[(f64, f64)]| {
        pts.iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (left, bottom, right, top) = (MARGIN, HEIGHT - MARGIN, MARGIN + plot_w, MARGIN);
    let _ = writeln!(s, r#"<path d="M{left},{top} V{bottom} H{right}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, px(xv), bottom + 18.0, format_tick(xv));
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, left - 6.0, py(yv) + 4.0, format_tick(yv));
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, left + plot_w / 2.0, HEIGHT - 15.0, escape(&report.param));
    let _ = writeln!(s, r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">bound</text>"#, top + plot_h / 2.0, top + plot_h / 2.0);

    let mut legend_y = top;
    if truth.len() > 1 {
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="black" stroke-dasharray="6 4"/>"#, points(&truth));
    }
    let _ = writeln!(s, r#"<line x1="{:.2}" y1="{legend_y}" x2="{:.2}" y2="{legend_y}" stroke="black" stroke-dasharray="6 4"/><text x="{:.2}" y="{:.2}">true error</text>"#, right + 15.0, right + 40.0, right + 45.0, legend_y + 4.0);
    for (k, (family, pts)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut pts = pts.clone();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, points(&pts));
        legend_y += 18.0;
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{legend_y}" x2="{:.2}" y2="{legend_y}" stroke="{color}" stroke-width="1.5"/><text x="{:.2}" y="{:.2}">{family}</text>"#, right + 15.0, right + 40.0, right + 45.0, legend_y + 4.0);
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn format_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-3) {
        format!("{v:.2e}")
    } else {
        format!("{}", (v * 1000.0).round() / 1000.0)
    }
}
