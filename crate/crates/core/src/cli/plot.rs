//! Plot-ready output: two-column log10 data files and a small SVG per panel.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::stats::LogHistogram;

/// One labelled distribution in a panel.
#[derive(Debug, Clone, Copy)]
pub struct Curve<'a> {
    pub label: &'a str,
    pub histogram: &'a LogHistogram,
    /// Apply the panel transform to this curve.
    pub rescale: bool,
}

impl<'a> Curve<'a> {
    pub fn raw(label: &'a str, histogram: &'a LogHistogram) -> Self {
        Curve { label, histogram, rescale: false }
    }

    pub fn rescaled(label: &'a str, histogram: &'a LogHistogram) -> Self {
        Curve { label, histogram, rescale: true }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotFiles {
    /// One data file per non-empty curve, in curve order.
    pub data: Vec<PathBuf>,
    pub svg: Option<PathBuf>,
    /// Labels of empty curves that were left out.
    pub skipped: Vec<String>,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn file_label(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

/// Writes `<panel>_<label>.dat` for every non-empty curve and `<panel>.svg`
/// with all of them on log-log axes. `transform = Some(a)` maps `S → S/a`
/// on curves marked for rescaling.
pub fn emit_plot_data(dir: &Path, panel: &str, curves: &[Curve], transform: Option<f64>) -> Result<PlotFiles> {
    if let Some(a) = transform {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Config(format!("rescale factor must be positive, got {a}")));
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = PlotFiles::default();
    let mut series: Vec<(&str, Vec<(f64, f64)>)> = Vec::new();
    for c in curves {
        let points = match (c.rescale, transform) {
            (true, Some(a)) => c.histogram.rescaled(a).log_curve(),
            _ => c.histogram.log_curve(),
        };
        if points.is_empty() {
            out.skipped.push(c.label.to_string());
            continue;
        }
        let mut text = String::new();
        let _ = writeln!(text, "# {}", c.label);
        if let (true, Some(a)) = (c.rescale, transform) {
            let _ = writeln!(text, "# sizes divided by {a}");
        }
        let _ = writeln!(text, "# log10_S log10_density");
        for (x, y) in &points {
            let _ = writeln!(text, "{x} {y}");
        }
        let path = dir.join(format!("{panel}_{}.dat", file_label(c.label)));
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        out.data.push(path);
        series.push((c.label, points));
    }
    if !series.is_empty() {
        let path = dir.join(format!("{panel}.svg"));
        fs::write(&path, render_svg(panel, &series)).map_err(|e| Error::io(&path, e))?;
        out.svg = Some(path);
    }
    Ok(out)
}

fn render_svg(title: &str, series: &[(&str, Vec<(f64, f64)>)]) -> String {
    let (w, h, left, right, top, bottom) = (640.0, 480.0, 70.0, 20.0, 30.0, 50.0);
    let all = series.iter().flat_map(|s| s.1.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let (x0, x1) = (x0.floor(), x1.ceil().max(x0.floor() + 1.0));
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    let px = |x: f64| left + (x - x0) / (x1 - x0) * (w - left - right);
    let py = |y: f64| h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle">{}</text>"#, w / 2.0, xml_escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - left - right,
        h - top - bottom
    );
    let mut k = x0;
    while k <= x1 {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">1e{k}</text>"#, px(k), h - bottom + 18.0);
        k += 1.0;
    }
    let mut k = y0;
    while k <= y1 {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">1e{k}</text>"#, left - 6.0, py(k) + 4.0);
        k += 1.0;
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">S</text>"#, w / 2.0, h - 10.0);
    let _ = writeln!(s, r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">P(S)</text>"#, h / 2.0, h / 2.0);
    for (i, (label, points)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" points="{}"/>"#, coords.join(" "));
        let ly = top + 16.0 + 16.0 * i as f64;
        let lx = w - right - 150.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, xml_escape(label));
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
