//! Tiny SVG line-chart writer for run diagnostics.
//!
//! Not a plotting library: just enough to eyeball an error or trace column
//! without leaving the terminal workflow. One polyline per series, axes,
//! min/max labels.

use std::fmt::Write as _;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series<'a> {
    pub label: &'a str,
    pub values: &'a [f64],
}

/// Renders series of per-frame values as an SVG line chart.
pub fn line_chart(title: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let frames = series.iter().map(|s| s.values.len()).max().unwrap_or(0);
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for &v in s.values {
            y_min = y_min.min(v);
            y_max = y_max.max(v);
        }
    }
    if !y_min.is_finite() || !y_max.is_finite() {
        y_min = 0.0;
        y_max = 1.0;
    }
    if (y_max - y_min).abs() < 1e-12 {
        y_max = y_min + 1.0;
    }

    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let x_of = |i: usize| MARGIN + plot_w * i as f64 / (frames.max(2) - 1) as f64;
    let y_of = |v: f64| MARGIN + plot_h * (1.0 - (v - y_min) / (y_max - y_min));

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    // Axes.
    let _ = writeln!(
        svg,
        r##"<line x1="{m}" y1="{m}" x2="{m}" y2="{b}" stroke="#333"/><line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="#333"/>"##,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    // Y range labels and axis caption.
    let _ = writeln!(
        svg,
        r#"<text x="{x}" y="{y}" font-family="sans-serif" font-size="11" text-anchor="end">{v:.3e}</text>"#,
        x = MARGIN - 6.0,
        y = MARGIN + 4.0,
        v = y_max
    );
    let _ = writeln!(
        svg,
        r#"<text x="{x}" y="{y}" font-family="sans-serif" font-size="11" text-anchor="end">{v:.3e}</text>"#,
        x = MARGIN - 6.0,
        y = HEIGHT - MARGIN + 4.0,
        v = y_min
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {})" text-anchor="middle">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">frame</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );

    for (idx, s) in series.iter().enumerate() {
        if s.values.is_empty() {
            continue;
        }
        let color = COLORS[idx % COLORS.len()];
        let mut points = String::new();
        for (i, &v) in s.values.iter().enumerate() {
            let _ = write!(points, "{:.2},{:.2} ", x_of(i), y_of(v));
        }
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            points.trim_end()
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{y}" font-family="sans-serif" font-size="12" fill="{color}">{label}</text>"#,
            x = WIDTH - MARGIN - 150.0,
            y = MARGIN + 16.0 * (idx + 1) as f64,
            label = escape(s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
