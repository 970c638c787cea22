//! Minimal SVG line/step plots. The plotted numbers are embedded verbatim as
//! CSV inside `<desc>` so a plot can be checked by parsing the file.

use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Style {
    Steps,
    Line,
    Points,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
    pub color: &'static str,
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Vertical markers `(x, label)`.
    pub markers: Vec<(f64, String)>,
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn bounds(plot: &Plot) -> (f64, f64, f64, f64) {
    let pts = plot.series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts.filter(|p| p.0.is_finite() && p.1.is_finite()) {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    for (x, _) in &plot.markers {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
    }
    if !x0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    y0 = y0.min(0.0);
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    (x0, x1, y0, y1 + 0.05 * (y1 - y0))
}

pub fn render(plot: &Plot) -> String {
    let (x0, x1, y0, y1) = bounds(plot);
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let sy = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(out, "<title>{}</title>", escape(&plot.title));
    let _ = writeln!(out, "<desc>");
    for s in &plot.series {
        let _ = writeln!(out, "# series: {}", escape(&s.name));
        let _ = writeln!(out, "x,y");
        for (x, y) in &s.points {
            let _ = writeln!(out, "{x:.9e},{y:.9e}");
        }
    }
    for (x, label) in &plot.markers {
        let _ = writeln!(out, "# marker: {} at {x:.9e}", escape(label));
    }
    let _ = writeln!(out, "</desc>");
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(&plot.title)
    );
    // Axes with min/max tick labels.
    let _ = writeln!(
        out,
        r#"<path d="M{l},{t} L{l},{b} L{r},{b}" stroke="black" fill="none"/>"#,
        l = LEFT,
        t = TOP,
        b = H - BOTTOM,
        r = W - RIGHT
    );
    for (x, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{x:.3e}</text>"#,
            sx(x),
            H - BOTTOM + 16.0
        );
    }
    for y in [y0, y1] {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{y:.3e}</text>"#,
            LEFT - 4.0,
            sy(y) + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 12.0,
        escape(&plot.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(&plot.y_label)
    );

    for s in &plot.series {
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .copied()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .collect();
        if pts.is_empty() {
            continue;
        }
        match s.style {
            Style::Points => {
                for (x, y) in &pts {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}"/>"#,
                        sx(*x),
                        sy(*y),
                        s.color
                    );
                }
            }
            Style::Line | Style::Steps => {
                let mut d = String::new();
                let half = if s.style == Style::Steps && pts.len() > 1 {
                    0.5 * (pts[1].0 - pts[0].0)
                } else {
                    0.0
                };
                for (i, (x, y)) in pts.iter().enumerate() {
                    let cmd = if i == 0 { 'M' } else { 'L' };
                    if s.style == Style::Steps {
                        let _ = write!(
                            d,
                            "{cmd}{:.2},{:.2} L{:.2},{:.2} ",
                            sx(x - half),
                            sy(*y),
                            sx(x + half),
                            sy(*y)
                        );
                    } else {
                        let _ = write!(d, "{cmd}{:.2},{:.2} ", sx(*x), sy(*y));
                    }
                }
                let _ = writeln!(
                    out,
                    r#"<path d="{}" stroke="{}" stroke-width="1.5" fill="none"/>"#,
                    d.trim_end(),
                    s.color
                );
            }
        }
    }
    for (x, label) in &plot.markers {
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{t}" x2="{x:.2}" y2="{b}" stroke="crimson" stroke-dasharray="4 3"/>"#,
            x = sx(*x),
            t = TOP,
            b = H - BOTTOM
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.1}" font-family="sans-serif" font-size="11" fill="crimson">{}</text>"#,
            sx(*x) + 3.0,
            TOP + 12.0,
            escape(label)
        );
    }
    // Legend.
    for (i, s) in plot.series.iter().enumerate() {
        let y = TOP + 14.0 * i as f64 + 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{y:.1}" font-family="sans-serif" font-size="11" fill="{}" text-anchor="end">{}</text>"#,
            W - RIGHT - 4.0,
            s.color,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Data series embedded in an SVG produced by [`render`].
pub fn embedded_series(svg: &str) -> Vec<(String, Vec<(f64, f64)>)> {
    let Some(start) = svg.find("<desc>") else {
        return Vec::new();
    };
    let end = svg[start..]
        .find("</desc>")
        .map_or(svg.len(), |e| start + e);
    let mut out: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for line in svg[start + 6..end].lines() {
        if let Some(name) = line.strip_prefix("# series: ") {
            out.push((name.to_string(), Vec::new()));
        } else if let (Some((x, y)), Some(last)) = (line.split_once(','), out.last_mut()) {
            if let (Ok(x), Ok(y)) = (x.parse(), y.parse()) {
                last.1.push((x, y));
            }
        }
    }
    out
}
