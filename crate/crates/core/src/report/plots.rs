//! Hand-written SVG plots with a CSV of every plotted series beside them.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{AuditReport, PairCurve, PairHistogram};
use crate::data::Side;

const W: f64 = 720.0;
const H: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 32.0;
const BOTTOM: f64 = 48.0;
const COLOR_A: &str = "#1f77b4";
const COLOR_B: &str = "#d62728";

/// Keeps `[A-Za-z0-9_-]`, replacing everything else with `_`.
pub fn sanitize_label(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        // widen empty ranges so the mapping stays finite
        let (x0, x1) = if x1 > x0 { (x0, x1) } else { (x0 - 0.5, x0 + 0.5) };
        let (y0, y1) = if y1 > y0 { (y0, y1) } else { (y0, y0 + 1.0) };
        Frame { x0, x1, y0, y1 }
    }

    fn sx(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn sy(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }

    fn axes(&self, svg: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (l, r, t, b) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
        let _ = writeln!(
            svg,
            r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            r - l,
            b - t
        );
        for i in 0..=4 {
            let fx = self.x0 + (self.x1 - self.x0) * i as f64 / 4.0;
            let fy = self.y0 + (self.y1 - self.y0) * i as f64 / 4.0;
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{:.4}</text>"#,
                self.sx(fx),
                b + 16.0,
                fx
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{:.3}</text>"#,
                l - 6.0,
                self.sy(fy) + 4.0,
                fy
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="20" font-size="14" text-anchor="middle">{}</text>"#,
            W / 2.0,
            escape(title)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
            (l + r) / 2.0,
            H - 8.0,
            escape(xlabel)
        );
        let _ = writeln!(
            svg,
            r#"<text x="14" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
            (t + b) / 2.0,
            (t + b) / 2.0,
            escape(ylabel)
        );
    }
}

fn svg_open() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

pub(crate) fn pcurve_svg(pc: &PairCurve) -> String {
    let c = &pc.curve;
    let frame = Frame::new(c.grid[0], c.grid[c.grid.len() - 1], 0.0, 1.0);
    let mut svg = svg_open();
    for r in &pc.regions {
        let x = frame.sx(r.lo);
        let _ = writeln!(
            svg,
            r##"<rect class="region" data-lo="{}" data-hi="{}" x="{x}" y="{TOP}" width="{}" height="{}" fill="#ffbf00" fill-opacity="0.35"/>"##,
            r.lo,
            r.hi,
            frame.sx(r.hi) - x,
            H - TOP - BOTTOM
        );
    }
    let _ = writeln!(
        svg,
        r#"<line class="alpha" x1="{LEFT}" x2="{}" y1="{y}" y2="{y}" stroke="gray" stroke-dasharray="6 4"/>"#,
        W - RIGHT,
        y = frame.sy(c.alpha)
    );
    svg.push_str(r#"<polyline fill="none" stroke="black" stroke-width="1.2" points=""#);
    for (i, (&t, &p)) in c.grid.iter().zip(&c.p_values).enumerate() {
        if i > 0 {
            svg.push(' ');
        }
        let _ = write!(svg, "{:.3},{:.3}", frame.sx(t), frame.sy(p));
    }
    svg.push_str("\"/>\n");
    frame.axes(
        &mut svg,
        &format!("{} vs {}: one-sided chi-squared p-value", c.pair.a, c.pair.b),
        "threshold",
        "p-value",
    );
    svg.push_str("</svg>\n");
    svg
}

pub(crate) fn pcurve_csv(pc: &PairCurve) -> String {
    let c = &pc.curve;
    let mut out = String::from("threshold,p_value,worse_group\n");
    for ((t, p), w) in c.grid.iter().zip(&c.p_values).zip(&c.worse) {
        let worse = match w {
            Some(Side::A) => c.pair.a.as_str(),
            Some(Side::B) => c.pair.b.as_str(),
            None => "",
        };
        let _ = writeln!(out, "{t},{p},{}", csv_field(worse));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub(crate) fn hist_svg(h: &PairHistogram) -> String {
    let n_a: u64 = h.counts_a.iter().sum::<u64>().max(1);
    let n_b: u64 = h.counts_b.iter().sum::<u64>().max(1);
    let dens = |c: u64, n: u64| c as f64 / n as f64;
    let top = h
        .counts_a
        .iter()
        .map(|&c| dens(c, n_a))
        .chain(h.counts_b.iter().map(|&c| dens(c, n_b)))
        .fold(0.0, f64::max);
    let frame = Frame::new(h.edges[0], h.edges[h.edges.len() - 1], 0.0, top);
    let mut svg = svg_open();
    for (counts, n, color) in [(&h.counts_a, n_a, COLOR_A), (&h.counts_b, n_b, COLOR_B)] {
        for (i, &c) in counts.iter().enumerate() {
            let x = frame.sx(h.edges[i]);
            let y = frame.sy(dens(c, n));
            let _ = writeln!(
                svg,
                r#"<rect x="{x:.3}" y="{y:.3}" width="{:.3}" height="{:.3}" fill="{color}" fill-opacity="0.45"/>"#,
                frame.sx(h.edges[i + 1]) - x,
                frame.sy(0.0) - y
            );
        }
    }
    for (i, (label, color)) in [(&h.pair.a, COLOR_A), (&h.pair.b, COLOR_B)].into_iter().enumerate() {
        let y = TOP + 14.0 + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}" fill-opacity="0.45"/><text x="{}" y="{}" font-size="12">{}</text>"#,
            W - RIGHT - 140.0,
            y - 9.0,
            W - RIGHT - 124.0,
            y,
            escape(label)
        );
    }
    frame.axes(
        &mut svg,
        &format!("{} vs {}: bona fide responses", h.pair.a, h.pair.b),
        "response",
        "fraction of group",
    );
    svg.push_str("</svg>\n");
    svg
}

pub(crate) fn hist_csv(h: &PairHistogram) -> String {
    let mut out = format!(
        "bin_lo,bin_hi,count_{},count_{}\n",
        sanitize_label(&h.pair.a),
        sanitize_label(&h.pair.b)
    );
    for i in 0..h.counts_a.len() {
        let _ = writeln!(out, "{},{},{},{}", h.edges[i], h.edges[i + 1], h.counts_a[i], h.counts_b[i]);
    }
    out
}

/// Writes `pcurve_<a>_vs_<b>.{svg,csv}` and `hist_<a>_vs_<b>.{svg,csv}` for
/// every pair, returning the paths in write order.
pub fn render_plots(r: &AuditReport, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> std::io::Result<()> {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    for (pc, h) in r.bias_curves.iter().zip(&r.histograms) {
        let stem = format!(
            "{}_vs_{}",
            sanitize_label(&pc.curve.pair.a),
            sanitize_label(&pc.curve.pair.b)
        );
        put(format!("pcurve_{stem}.svg"), pcurve_svg(pc))?;
        put(format!("pcurve_{stem}.csv"), pcurve_csv(pc))?;
        put(format!("hist_{stem}.svg"), hist_svg(h))?;
        put(format!("hist_{stem}.csv"), hist_csv(h))?;
    }
    Ok(written)
}
