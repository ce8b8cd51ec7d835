//! Deterministic SVG scatter plots: fixed canvas, fixed palette and fixed
//! number formatting, so identical inputs give byte-identical files.

use std::fmt::Write;

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 640.0;
const MARGIN: f64 = 60.0;
const TICKS: usize = 5;

pub const GENERATED: &str = "#1f77b4";
pub const REAL: &str = "#2ca02c";

pub enum Fill {
    Solid(&'static str),
    /// Per-point value; higher values get darker shades of grey.
    Shade(Vec<f64>),
}

pub struct Series {
    pub label: String,
    pub points: Vec<[f64; 2]>,
    pub fill: Fill,
}

struct Bounds {
    x: (f64, f64),
    y: (f64, f64),
}

impl Bounds {
    fn of(series: &[Series]) -> Self {
        let mut x = (f64::INFINITY, f64::NEG_INFINITY);
        let mut y = x;
        for p in series.iter().flat_map(|s| &s.points) {
            if p[0].is_finite() && p[1].is_finite() {
                x = (x.0.min(p[0]), x.1.max(p[0]));
                y = (y.0.min(p[1]), y.1.max(p[1]));
            }
        }
        Self {
            x: padded(x),
            y: padded(y),
        }
    }

    fn to_canvas(&self, p: [f64; 2]) -> (f64, f64) {
        let span = WIDTH - 2.0 * MARGIN;
        let cx = MARGIN + (p[0] - self.x.0) / (self.x.1 - self.x.0) * span;
        let cy = HEIGHT - MARGIN - (p[1] - self.y.0) / (self.y.1 - self.y.0) * span;
        (cx, cy)
    }
}

/// Range with 5% padding; `[-1, 1]` when empty, `±1` around a single value.
fn padded((lo, hi): (f64, f64)) -> (f64, f64) {
    if lo > hi {
        return (-1.0, 1.0);
    }
    if lo == hi {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn shade(v: f64, lo: f64, hi: f64) -> String {
    let t = if hi > lo { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 };
    let level = (220.0 * (1.0 - t)).round() as u8;
    format!("#{level:02x}{level:02x}{level:02x}")
}

pub fn scatter(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let b = Bounds::of(series);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="30" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    axes(&mut s, &b, x_label, y_label);
    for series in series {
        let (lo, hi) = match &series.fill {
            Fill::Shade(v) => v
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x))),
            Fill::Solid(_) => (0.0, 0.0),
        };
        let _ = writeln!(s, r#"<g fill-opacity="0.6">"#);
        for (i, p) in series.points.iter().enumerate() {
            if !(p[0].is_finite() && p[1].is_finite()) {
                continue;
            }
            let (cx, cy) = b.to_canvas(*p);
            let color = match &series.fill {
                Fill::Solid(c) => c.to_string(),
                Fill::Shade(v) => shade(v[i], lo, hi),
            };
            let _ = writeln!(s, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="1.6" fill="{color}"/>"#);
        }
        let _ = writeln!(s, "</g>");
    }
    legend(&mut s, series);
    s.push_str("</svg>\n");
    s
}

fn axes(s: &mut String, b: &Bounds, x_label: &str, y_label: &str) {
    let (x0, x1) = (MARGIN, WIDTH - MARGIN);
    let (y0, y1) = (HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(
        s,
        r#"<rect x="{x0}" y="{y1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    for k in 0..TICKS {
        let t = k as f64 / (TICKS - 1) as f64;
        let xv = b.x.0 + t * (b.x.1 - b.x.0);
        let yv = b.y.0 + t * (b.y.1 - b.y.0);
        let (cx, _) = b.to_canvas([xv, b.y.0]);
        let (_, cy) = b.to_canvas([b.x.0, yv]);
        let _ = writeln!(
            s,
            r#"<line x1="{cx:.2}" y1="{y0}" x2="{cx:.2}" y2="{:.1}" stroke="black"/><text x="{cx:.2}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
            y0 + 5.0,
            y0 + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{cy:.2}" x2="{x0}" y2="{cy:.2}" stroke="black"/><text x="{:.1}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            cy + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="13">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 {:.1})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && (a < 1e-2 || a >= 1e4) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

fn legend(s: &mut String, series: &[Series]) {
    for (i, series) in series.iter().enumerate() {
        let y = MARGIN + 15.0 + 18.0 * i as f64;
        let color = match series.fill {
            Fill::Solid(c) => c,
            Fill::Shade(_) => "#404040",
        };
        let _ = writeln!(
            s,
            r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{color}"/><text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">{}</text>"#,
            WIDTH - MARGIN - 130.0,
            y - 9.0,
            WIDTH - MARGIN - 115.0,
            y,
            escape(&series.label)
        );
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
