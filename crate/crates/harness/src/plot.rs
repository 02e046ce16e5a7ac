//! Minimal static SVG plotting for simulation traces.
//!
//! Panels stack vertically; each draws its series into a framed plot area
//! with auto-scaled axes and nice tick values. No scripting, no external
//! renderer — the output is plain SVG markup.

use std::fmt::Write as _;

pub const BLUE: &str = "#1f77b4";
pub const ORANGE: &str = "#ff7f0e";
pub const GREEN: &str = "#2ca02c";
pub const RED: &str = "#d62728";
pub const GRAY: &str = "#7f7f7f";
pub const PURPLE: &str = "#9467bd";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    Line,
    Points,
    Stems,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
    pub kind: SeriesKind,
    pub width: f64,
}

impl Series {
    pub fn line(name: &str, points: Vec<(f64, f64)>, color: &'static str) -> Self {
        Self { name: name.into(), points, color, kind: SeriesKind::Line, width: 1.3 }
    }

    pub fn points(name: &str, points: Vec<(f64, f64)>, color: &'static str) -> Self {
        Self { name: name.into(), points, color, kind: SeriesKind::Points, width: 2.0 }
    }

    pub fn stems(name: &str, points: Vec<(f64, f64)>, color: &'static str) -> Self {
        Self { name: name.into(), points, color, kind: SeriesKind::Stems, width: 1.5 }
    }
}

/// Filled region between a lower and an upper curve sharing x samples.
#[derive(Debug, Clone)]
pub struct Band {
    pub x: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub color: &'static str,
}

#[derive(Debug, Clone, Default)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub bands: Vec<Band>,
    pub y_range: Option<(f64, f64)>,
}

impl Panel {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            ..Self::default()
        }
    }
}

pub struct Figure {
    pub title: String,
    pub panels: Vec<Panel>,
    pub width: f64,
    pub panel_height: f64,
}

impl Figure {
    pub fn new(title: &str) -> Self {
        Self { title: title.into(), panels: Vec::new(), width: 860.0, panel_height: 220.0 }
    }

    pub fn panel(&mut self, panel: Panel) -> &mut Self {
        self.panels.push(panel);
        self
    }

    pub fn to_svg(&self) -> String {
        let margin_left = 68.0;
        let margin_right = 18.0;
        let margin_top = 44.0;
        let panel_gap = 16.0;
        let panel_bottom = 44.0;
        let total_height =
            margin_top + self.panels.len() as f64 * (self.panel_height + panel_bottom + panel_gap);
        let mut svg = String::new();
        let _ = write!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
            w = self.width,
            h = total_height
        );
        svg.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = write!(
            svg,
            r#"<text x="{x}" y="24" font-family="sans-serif" font-size="16" font-weight="bold" text-anchor="middle">{t}</text>"#,
            x = self.width / 2.0,
            t = escape(&self.title)
        );
        for (i, panel) in self.panels.iter().enumerate() {
            let top = margin_top + i as f64 * (self.panel_height + panel_bottom + panel_gap);
            let area = PlotArea {
                left: margin_left,
                top,
                width: self.width - margin_left - margin_right,
                height: self.panel_height,
            };
            render_panel(&mut svg, panel, &area);
        }
        svg.push_str("</svg>\n");
        svg
    }
}

struct PlotArea {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
}

fn data_bounds(panel: &Panel) -> ((f64, f64), (f64, f64)) {
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for s in &panel.series {
        for &(x, y) in &s.points {
            if x.is_finite() && y.is_finite() {
                xs.push(x);
                ys.push(y);
            }
        }
    }
    for b in &panel.bands {
        for ((&x, &lo), &hi) in b.x.iter().zip(&b.lo).zip(&b.hi) {
            if x.is_finite() && lo.is_finite() && hi.is_finite() {
                xs.push(x);
                ys.push(lo);
                ys.push(hi);
            }
        }
    }
    let span = |v: &[f64]| -> (f64, f64) {
        if v.is_empty() {
            return (0.0, 1.0);
        }
        let lo = v.iter().cloned().fold(f64::MAX, f64::min);
        let hi = v.iter().cloned().fold(f64::MIN, f64::max);
        if lo == hi {
            (lo - 0.5, hi + 0.5)
        } else {
            let pad = (hi - lo) * 0.05;
            (lo - pad, hi + pad)
        }
    };
    let x_range = span(&xs);
    let y_range = panel.y_range.unwrap_or_else(|| span(&ys));
    (x_range, y_range)
}

/// Tick positions with a 1-2-5 step covering the range.
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let range = hi - lo;
    if !(range > 0.0) || !range.is_finite() {
        return vec![lo];
    }
    let raw = range / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm < 1.5 {
        mag
    } else if norm < 3.5 {
        2.0 * mag
    } else if norm < 7.5 {
        5.0 * mag
    } else {
        10.0 * mag
    };
    let first = (lo / step).ceil() * step;
    let mut out = Vec::new();
    let mut t = first;
    while t <= hi + step * 1e-9 {
        // avoid "-0"
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e4).contains(&a) {
        format!("{v:.0e}")
    } else if a >= 10.0 {
        trim(format!("{v:.1}"))
    } else {
        trim(format!("{v:.3}"))
    }
}

fn trim(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn render_panel(svg: &mut String, panel: &Panel, area: &PlotArea) {
    let ((x_lo, x_hi), (y_lo, y_hi)) = data_bounds(panel);
    let sx = |x: f64| area.left + (x - x_lo) / (x_hi - x_lo) * area.width;
    let sy = |y: f64| area.top + area.height - (y - y_lo) / (y_hi - y_lo) * area.height;

    // frame and gridlines
    let _ = write!(
        svg,
        r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black" stroke-width="1"/>"#,
        area.left, area.top, area.width, area.height
    );
    for t in ticks(x_lo, x_hi, 6) {
        let x = sx(t);
        let _ = write!(
            svg,
            r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#dddddd" stroke-width="0.5"/>"##,
            area.top,
            area.top + area.height
        );
        let _ = write!(
            svg,
            r#"<line x1="{x:.1}" y1="{y:.1}" x2="{x:.1}" y2="{y2:.1}" stroke="black" stroke-width="1"/>"#,
            y = area.top + area.height,
            y2 = area.top + area.height + 5.0
        );
        let _ = write!(
            svg,
            r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{t}</text>"#,
            y = area.top + area.height + 17.0,
            t = format_tick(t)
        );
    }
    for t in ticks(y_lo, y_hi, 4) {
        let y = sy(t);
        let _ = write!(
            svg,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#dddddd" stroke-width="0.5"/>"##,
            area.left,
            area.left + area.width
        );
        let _ = write!(
            svg,
            r#"<line x1="{x:.1}" y1="{y:.1}" x2="{x2:.1}" y2="{y:.1}" stroke="black" stroke-width="1"/>"#,
            x = area.left - 5.0,
            x2 = area.left
        );
        let _ = write!(
            svg,
            r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="11" text-anchor="end" dominant-baseline="middle">{t}</text>"#,
            x = area.left - 8.0,
            t = format_tick(t)
        );
    }

    // bands under the series
    for band in &panel.bands {
        let mut d = String::new();
        let mut started = false;
        for (&x, &hi) in band.x.iter().zip(&band.hi) {
            if !x.is_finite() || !hi.is_finite() {
                continue;
            }
            let cmd = if started { 'L' } else { 'M' };
            let _ = write!(d, "{cmd}{:.1} {:.1} ", sx(x), sy(hi.clamp(y_lo, y_hi)));
            started = true;
        }
        for (&x, &lo) in band.x.iter().rev().zip(band.lo.iter().rev()) {
            if !x.is_finite() || !lo.is_finite() {
                continue;
            }
            let _ = write!(d, "L{:.1} {:.1} ", sx(x), sy(lo.clamp(y_lo, y_hi)));
        }
        if started {
            let _ = write!(
                svg,
                r#"<path d="{d}Z" fill="{c}" fill-opacity="0.25" stroke="none"/>"#,
                c = band.color
            );
        }
    }

    for series in &panel.series {
        match series.kind {
            SeriesKind::Line => {
                let mut d = String::new();
                let mut pen_down = false;
                for &(x, y) in &series.points {
                    if !x.is_finite() || !y.is_finite() {
                        pen_down = false;
                        continue;
                    }
                    let cmd = if pen_down { 'L' } else { 'M' };
                    let _ = write!(d, "{cmd}{:.1} {:.1} ", sx(x), sy(y.clamp(y_lo, y_hi)));
                    pen_down = true;
                }
                if !d.is_empty() {
                    let _ = write!(
                        svg,
                        r#"<path d="{d}" fill="none" stroke="{c}" stroke-width="{w}"/>"#,
                        c = series.color,
                        w = series.width
                    );
                }
            }
            SeriesKind::Points => {
                for &(x, y) in &series.points {
                    if !x.is_finite() || !y.is_finite() || y < y_lo || y > y_hi {
                        continue;
                    }
                    let _ = write!(
                        svg,
                        r#"<circle cx="{:.1}" cy="{:.1}" r="{w}" fill="{c}"/>"#,
                        sx(x),
                        sy(y),
                        w = series.width,
                        c = series.color
                    );
                }
            }
            SeriesKind::Stems => {
                let base = sy(y_lo.max(0.0).min(y_hi));
                for &(x, y) in &series.points {
                    if !x.is_finite() || !y.is_finite() {
                        continue;
                    }
                    let _ = write!(
                        svg,
                        r#"<line x1="{x1:.1}" y1="{base:.1}" x2="{x1:.1}" y2="{:.1}" stroke="{c}" stroke-width="{w}"/>"#,
                        sy(y.clamp(y_lo, y_hi)),
                        x1 = sx(x),
                        c = series.color,
                        w = series.width
                    );
                    let _ = write!(
                        svg,
                        r#"<circle cx="{:.1}" cy="{:.1}" r="2" fill="{c}"/>"#,
                        sx(x),
                        sy(y.clamp(y_lo, y_hi)),
                        c = series.color
                    );
                }
            }
        }
    }

    // title, labels, legend
    let _ = write!(
        svg,
        r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="13" font-weight="bold">{t}</text>"#,
        x = area.left,
        y = area.top - 6.0,
        t = escape(&panel.title)
    );
    let _ = write!(
        svg,
        r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{t}</text>"#,
        x = area.left + area.width / 2.0,
        y = area.top + area.height + 34.0,
        t = escape(&panel.x_label)
    );
    let _ = write!(
        svg,
        r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 {x:.1} {y:.1})">{t}</text>"#,
        x = area.left - 46.0,
        y = area.top + area.height / 2.0,
        t = escape(&panel.y_label)
    );
    let mut lx = area.left + area.width - 8.0;
    for series in panel.series.iter().rev() {
        if series.name.is_empty() {
            continue;
        }
        let _ = write!(
            svg,
            r#"<text x="{lx:.1}" y="{y:.1}" font-family="sans-serif" font-size="11" text-anchor="end" fill="{c}">{t}</text>"#,
            y = area.top + 14.0,
            c = series.color,
            t = escape(&series.name)
        );
        lx -= series.name.len() as f64 * 7.0 + 16.0;
    }
}

/// Reduce a series to at most `max_points` by striding.
pub fn decimate(points: &[(f64, f64)], max_points: usize) -> Vec<(f64, f64)> {
    if points.len() <= max_points {
        return points.to_vec();
    }
    let stride = points.len().div_ceil(max_points);
    let mut out: Vec<(f64, f64)> = points.iter().copied().step_by(stride).collect();
    if let Some(&last) = points.last() {
        if out.last() != Some(&last) {
            out.push(last);
        }
    }
    out
}
