//! Minimal self-contained SVG charts.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

#[derive(Debug, Clone, Copy)]
struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn from_values(values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return Self { lo: 0.0, hi: 1.0 };
        }
        if hi - lo < 1e-12 * (1.0 + lo.abs()) {
            let pad = 0.5 * (1.0 + lo.abs());
            return Self {
                lo: lo - pad,
                hi: hi + pad,
            };
        }
        let pad = 0.04 * (hi - lo);
        Self {
            lo: lo - pad,
            hi: hi + pad,
        }
    }

    fn ticks(&self, count: usize) -> Vec<f64> {
        (0..=count)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / count as f64)
            .collect()
    }
}

/// Plot area with axis transforms.
struct Frame {
    x: Range,
    y: Range,
    log_y: bool,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x.lo) / (self.x.hi - self.x.lo) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let y = if self.log_y { y.max(1e-300).log10() } else { y };
        HEIGHT - MARGIN_BOTTOM - (y - self.y.lo) / (self.y.hi - self.y.lo) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }

    fn open(&self, out: &mut String, title: &str, x_label: &str, y_label: &str) {
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            (WIDTH - MARGIN_RIGHT + MARGIN_LEFT) / 2.0,
            escape(title)
        );
        let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
        let (y0, y1) = (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
        let _ = writeln!(
            out,
            r##"<rect x="{x0}" y="{y1}" width="{:.1}" height="{:.1}" fill="none" stroke="#444"/>"##,
            x1 - x0,
            y0 - y1
        );
        for t in self.x.ticks(5) {
            let px = self.px(t);
            let _ = writeln!(
                out,
                r##"<line x1="{px:.1}" y1="{y0}" x2="{px:.1}" y2="{:.1}" stroke="#444"/><text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"##,
                y0 + 5.0,
                y0 + 18.0,
                fmt_tick(t)
            );
        }
        for t in self.y.ticks(5) {
            let py = HEIGHT - MARGIN_BOTTOM - (t - self.y.lo) / (self.y.hi - self.y.lo) * (y0 - y1);
            let label = if self.log_y {
                fmt_tick(10f64.powf(t))
            } else {
                fmt_tick(t)
            };
            let _ = writeln!(
                out,
                r##"<line x1="{:.1}" y1="{py:.1}" x2="{x0}" y2="{py:.1}" stroke="#444"/><text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"##,
                x0 - 5.0,
                x0 - 8.0,
                py + 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 12.0,
            escape(x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(y_label)
        );
    }

    fn legend(out: &mut String, entries: &[(String, &str)]) {
        for (i, (name, col)) in entries.iter().enumerate() {
            let y = MARGIN_TOP + 10.0 + 18.0 * i as f64;
            let x = WIDTH - MARGIN_RIGHT + 12.0;
            let _ = writeln!(
                out,
                r#"<rect x="{x:.1}" y="{:.1}" width="12" height="12" fill="{col}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                y - 10.0,
                x + 18.0,
                y,
                escape(name)
            );
        }
    }
}

fn polyline(out: &mut String, pts: &[(f64, f64)], stroke: &str, width: f64, extra: &str) {
    if pts.is_empty() {
        return;
    }
    let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let _ = writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"{extra}/>"#,
        coords.join(" ")
    );
}

/// One curve with an optional symmetric error band.
#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub errors: Option<Vec<f64>>,
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series], log_y: bool) -> String {
    let tr = |v: f64| if log_y { v.max(1e-300).log10() } else { v };
    // a band reaching zero would flatten a log axis
    let lower = |v: f64, e: f64| if log_y && v - e <= 0.0 { v } else { v - e };
    let x = Range::from_values(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let y = Range::from_values(series.iter().flat_map(|s| {
        s.points.iter().enumerate().flat_map(move |(i, p)| {
            let e = s.errors.as_ref().map_or(0.0, |e| e[i]);
            [tr(lower(p.1, e)), tr(p.1 + e)]
        })
    }));
    let frame = Frame { x, y, log_y };
    let mut out = String::new();
    frame.open(&mut out, title, x_label, y_label);
    for (i, s) in series.iter().enumerate() {
        let col = color(i);
        if let Some(errors) = &s.errors {
            let upper: Vec<(f64, f64)> = s
                .points
                .iter()
                .zip(errors)
                .map(|(p, e)| (frame.px(p.0), frame.py(p.1 + e)))
                .collect();
            let lower: Vec<(f64, f64)> = s
                .points
                .iter()
                .zip(errors)
                .rev()
                .map(|(p, e)| (frame.px(p.0), frame.py(lower(p.1, *e))))
                .collect();
            let coords: Vec<String> = upper
                .iter()
                .chain(&lower)
                .map(|(x, y)| format!("{x:.2},{y:.2}"))
                .collect();
            let _ = writeln!(
                out,
                r#"<polygon points="{}" fill="{col}" fill-opacity="0.2" stroke="none"/>"#,
                coords.join(" ")
            );
        }
        let pts: Vec<(f64, f64)> = s.points.iter().map(|p| (frame.px(p.0), frame.py(p.1))).collect();
        polyline(&mut out, &pts, col, 1.8, "");
        if s.points.len() <= 12 {
            for (px, py) in &pts {
                let _ = writeln!(out, r#"<circle cx="{px:.2}" cy="{py:.2}" r="3" fill="{col}"/>"#);
            }
        }
    }
    let entries: Vec<(String, &str)> = series
        .iter()
        .enumerate()
        .map(|(i, s)| (s.name.clone(), color(i)))
        .collect();
    Frame::legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}

/// Scatter of `(x, y)` groups with an optional `y = x` reference line.
pub fn scatter_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    groups: &[(String, Vec<(f64, f64)>)],
    diagonal: bool,
) -> String {
    let all = || groups.iter().flat_map(|g| g.1.iter().copied());
    let (mut x, mut y) = (
        Range::from_values(all().map(|p| p.0)),
        Range::from_values(all().map(|p| p.1)),
    );
    if diagonal {
        let lo = x.lo.min(y.lo);
        let hi = x.hi.max(y.hi);
        x = Range { lo, hi };
        y = Range { lo, hi };
    }
    let frame = Frame { x, y, log_y: false };
    let mut out = String::new();
    frame.open(&mut out, title, x_label, y_label);
    if diagonal {
        polyline(
            &mut out,
            &[(frame.px(x.lo), frame.py(x.lo)), (frame.px(x.hi), frame.py(x.hi))],
            "#999",
            1.0,
            r#" stroke-dasharray="4 3""#,
        );
    }
    for (i, (_, pts)) in groups.iter().enumerate() {
        for (px, py) in pts {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{}" fill-opacity="0.8"/>"#,
                frame.px(*px),
                frame.py(*py),
                color(i)
            );
        }
    }
    let entries: Vec<(String, &str)> = groups
        .iter()
        .enumerate()
        .map(|(i, g)| (g.0.clone(), color(i)))
        .collect();
    Frame::legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}

/// Planar data, prototypes and graph edges.
pub struct PlanarScene<'a> {
    pub title: &'a str,
    /// Sample coordinates with class index.
    pub samples: &'a [(f64, f64, usize)],
    pub prototypes: &'a [(f64, f64)],
    /// Prototypes drawn hollow.
    pub hollow: &'a [usize],
    pub edges: &'a [(usize, usize)],
    /// Per-prototype paths drawn as polylines.
    pub paths: &'a [Vec<(f64, f64)>],
}

pub fn planar_chart(scene: &PlanarScene) -> String {
    let xs = scene
        .samples
        .iter()
        .map(|s| s.0)
        .chain(scene.prototypes.iter().map(|p| p.0))
        .chain(scene.paths.iter().flatten().map(|p| p.0));
    let ys = scene
        .samples
        .iter()
        .map(|s| s.1)
        .chain(scene.prototypes.iter().map(|p| p.1))
        .chain(scene.paths.iter().flatten().map(|p| p.1));
    let frame = Frame {
        x: Range::from_values(xs),
        y: Range::from_values(ys),
        log_y: false,
    };
    let mut out = String::new();
    frame.open(&mut out, scene.title, "feature 0", "feature 1");
    let classes = scene.samples.iter().map(|s| s.2 + 1).max().unwrap_or(0);
    for (x, y, c) in scene.samples {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{}" fill-opacity="0.35"/>"#,
            frame.px(*x),
            frame.py(*y),
            if classes > 1 { color(c + 2) } else { "#777" }
        );
    }
    for path in scene.paths {
        let pts: Vec<(f64, f64)> = path.iter().map(|p| (frame.px(p.0), frame.py(p.1))).collect();
        polyline(&mut out, &pts, "#333", 1.0, r#" stroke-opacity="0.7""#);
        if let Some((sx, sy)) = pts.first() {
            let _ = writeln!(
                out,
                r##"<rect x="{:.2}" y="{:.2}" width="5" height="5" fill="#888"/>"##,
                sx - 2.5,
                sy - 2.5
            );
        }
    }
    for &(a, b) in scene.edges {
        let (pa, pb) = (scene.prototypes[a], scene.prototypes[b]);
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#000" stroke-width="1.2"/>"##,
            frame.px(pa.0),
            frame.py(pa.1),
            frame.px(pb.0),
            frame.py(pb.1)
        );
    }
    for (j, p) in scene.prototypes.iter().enumerate() {
        let fill = if scene.hollow.contains(&j) { "none" } else { color(1) };
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4.5" fill="{fill}" stroke="{}" stroke-width="1.5"/>"#,
            frame.px(p.0),
            frame.py(p.1),
            color(1)
        );
    }
    let mut entries: Vec<(String, &str)> = vec![("prototype".into(), color(1))];
    if classes > 1 {
        entries.extend((0..classes).map(|c| (format!("class {c}"), color(c + 2))));
    }
    Frame::legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}
