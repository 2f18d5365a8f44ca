//! Minimal SVG scatter plots with curve overlays.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 540.0;
const MARGIN: f64 = 64.0;
const PALETTE: [&str; 6] = ["#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"];

#[derive(Debug, Clone)]
pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct Scatter {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
    pub curves: Vec<Curve>,
}

fn nice_step(range: f64) -> f64 {
    let raw = range / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let k = if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    };
    k * mag
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Scatter {
    fn bounds(&self) -> (f64, f64, f64, f64) {
        let mut it = self.points.iter();
        let (mut x0, mut x1, mut y0, mut y1) = match it.next() {
            Some(&(x, y)) => (x, x, y, y),
            None => (-1.0, 1.0, -1.0, 1.0),
        };
        for &(x, y) in it {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if x1 - x0 <= 0.0 {
            x0 -= 1.0;
            x1 += 1.0;
        }
        if y1 - y0 <= 0.0 {
            y0 -= 1.0;
            y1 += 1.0;
        }
        let (px, py) = (0.05 * (x1 - x0), 0.05 * (y1 - y0));
        (x0 - px, x1 + px, y0 - py, y1 + py)
    }

    /// The document; the first line is a version comment and everything
    /// after it depends only on the data.
    pub fn render(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let pw = WIDTH - 2.0 * MARGIN;
        let ph = HEIGHT - 2.0 * MARGIN;
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * ph;
        let mut s = String::new();
        let _ = writeln!(s, "<!-- tefree {} -->", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<clipPath id="plot"><rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}"/></clipPath>"#
        );
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        let step = nice_step(x1 - x0);
        let mut t = (x0 / step).ceil() * step;
        while t <= x1 {
            let x = sx(t);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                HEIGHT - MARGIN,
                HEIGHT - MARGIN + 5.0,
                HEIGHT - MARGIN + 18.0,
                fmt_tick(t)
            );
            t += step;
        }
        let step = nice_step(y1 - y0);
        let mut t = (y0 / step).ceil() * step;
        while t <= y1 {
            let y = sy(t);
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                MARGIN - 5.0,
                MARGIN - 8.0,
                y + 4.0,
                fmt_tick(t)
            );
            t += step;
        }
        let _ = writeln!(s, r#"<g clip-path="url(#plot)">"#);
        for (i, c) in self.curves.iter().enumerate() {
            if c.points.len() < 2 {
                continue;
            }
            let d: Vec<String> = c.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                d.join(" "),
                PALETTE[i % PALETTE.len()]
            );
        }
        for &(x, y) in &self.points {
            let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="2" fill="#1f77b4"/>"##, sx(x), sy(y));
        }
        let _ = writeln!(s, "</g>");
        for (i, c) in self.curves.iter().enumerate() {
            let y = MARGIN + 16.0 + 16.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{y:.2}" fill="{}">{}</text>"#,
                MARGIN + 8.0,
                PALETTE[i % PALETTE.len()],
                escape(&c.label)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            MARGIN / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );
        s.push_str("</svg>\n");
        s
    }
}
