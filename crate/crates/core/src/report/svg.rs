use std::fmt::Write as _;

use super::ecd::{EcdReport, PANELS};
use super::ReportError;
use crate::fmt::sig;

const CELL_W: f64 = 400.0;
const CELL_H: f64 = 300.0;
const MARGIN_L: f64 = 56.0;
const MARGIN_R: f64 = 12.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_B: f64 = 28.0;
const COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn style(panel: &str, index: usize) -> (&'static str, &'static str) {
    match (panel, index) {
        ("DISTANCE", _) => ("#2ca02c", " stroke-dasharray=\"6 4\""),
        ("SAFETY_FRONT", 1) => ("#d62728", " stroke-dasharray=\"4 3\""),
        _ => (COLORS[index % COLORS.len()], ""),
    }
}

/// Renders the report as a 3×2 grid, one `<g class="panel">` per panel slot
/// and one polyline per non-empty series. Coordinates carry two decimals so
/// identical reports give identical bytes.
pub fn render_svg(report: &EcdReport) -> Result<String, ReportError> {
    if report.t.is_empty() || report.panels.is_empty() {
        return Err(ReportError::Empty);
    }
    let t0 = report.t[0];
    let t1 = *report.t.last().unwrap();
    let span_t = if t1 > t0 { t1 - t0 } else { 1.0 };
    let plot_w = CELL_W - MARGIN_L - MARGIN_R;
    let plot_h = CELL_H - MARGIN_T - MARGIN_B;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"11\">",
        w = 3.0 * CELL_W,
        h = 2.0 * CELL_H
    );
    let _ = writeln!(out, "<title>ECD {}</title>", escape(&report.subject_id));
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");

    for (slot, name) in PANELS.iter().enumerate() {
        let ox = (slot % 3) as f64 * CELL_W;
        let oy = (slot / 3) as f64 * CELL_H;
        let _ = writeln!(
            out,
            "<g class=\"panel\" id=\"{name}\" transform=\"translate({ox:.2},{oy:.2})\">"
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"18.00\" font-weight=\"bold\">{name}</text>",
            MARGIN_L
        );
        let _ = writeln!(
            out,
            "<rect x=\"{MARGIN_L:.2}\" y=\"{MARGIN_T:.2}\" width=\"{plot_w:.2}\" height=\"{plot_h:.2}\" fill=\"none\" stroke=\"#999\"/>"
        );
        let series: Vec<_> = report
            .panel(name)
            .map(|p| p.series.iter().filter(|s| !s.values.is_empty()).collect())
            .unwrap_or_default();
        if series.is_empty() {
            let _ = writeln!(
                out,
                "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"#999\">no data</text>",
                MARGIN_L + 8.0,
                MARGIN_T + 18.0
            );
            let _ = writeln!(out, "</g>");
            continue;
        }
        let finite = series
            .iter()
            .flat_map(|s| s.values.iter())
            .filter(|x| x.is_finite());
        let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-9 {
            lo -= 1.0;
            hi += 1.0;
        }
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            MARGIN_L - 4.0,
            MARGIN_T + 10.0,
            sig(hi, 4)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            MARGIN_L - 4.0,
            MARGIN_T + plot_h,
            sig(lo, 4)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">t {} s</text>",
            MARGIN_L + plot_w,
            MARGIN_T + plot_h + 16.0,
            sig(t1, 4)
        );
        for (k, s) in series.iter().enumerate() {
            let (color, dash) = style(name, k);
            let mut points = String::with_capacity(s.values.len() * 14);
            for (i, &y) in s.values.iter().enumerate() {
                let t = report.t.get(i).copied().unwrap_or(t1);
                let x = MARGIN_L + (t - t0) / span_t * plot_w;
                let y = if y.is_finite() { y.clamp(lo, hi) } else { hi };
                let y = MARGIN_T + (hi - y) / (hi - lo) * plot_h;
                if i > 0 {
                    points.push(' ');
                }
                let _ = write!(points, "{x:.2},{y:.2}");
            }
            let _ = writeln!(
                out,
                "<polyline class=\"series\" data-name=\"{}\" data-unit=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1\"{dash} points=\"{points}\"/>",
                escape(&s.name),
                escape(&s.unit)
            );
        }
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    Ok(out)
}
