//! SVG rendering of trajectories and histograms.

use std::fmt::Write;

use nashplan::batch::Histogram;

use crate::io::TrajectoryTable;

const PANEL: f64 = 480.0;
const MARGIN: f64 = 48.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn color(i: usize) -> &'static str {
    COLORS[i % COLORS.len()]
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Affine map from data bounds into a square panel, preserving aspect ratio
/// when `equal` is set.
struct Frame {
    x0: f64,
    y0: f64,
    sx: f64,
    sy: f64,
    left: f64,
    top: f64,
}

impl Frame {
    fn new(bounds: [f64; 4], left: f64, top: f64, equal: bool) -> Self {
        let [mut xmin, mut xmax, mut ymin, mut ymax] = bounds;
        for (lo, hi) in [(&mut xmin, &mut xmax), (&mut ymin, &mut ymax)] {
            if *hi - *lo < 1e-9 {
                *lo -= 0.5;
                *hi += 0.5;
            }
            let pad = 0.05 * (*hi - *lo);
            *lo -= pad;
            *hi += pad;
        }
        let (mut sx, mut sy) = (PANEL / (xmax - xmin), PANEL / (ymax - ymin));
        if equal {
            sx = sx.min(sy);
            sy = sx;
        }
        Self { x0: xmin, y0: ymax, sx, sy, left, top }
    }

    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        (self.left + (x - self.x0) * self.sx, self.top + (self.y0 - y) * self.sy)
    }

    fn data_x(&self, px: f64) -> f64 {
        self.x0 + (px - self.left) / self.sx
    }

    fn data_y(&self, py: f64) -> f64 {
        self.y0 - (py - self.top) / self.sy
    }
}

fn bounds(points: impl Iterator<Item = (f64, f64)>) -> [f64; 4] {
    points.fold([f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY], |b, (x, y)| {
        [b[0].min(x), b[1].max(x), b[2].min(y), b[3].max(y)]
    })
}

fn polyline(frame: &Frame, pts: impl Iterator<Item = (f64, f64)>) -> String {
    let mut d = String::new();
    for (k, (x, y)) in pts.enumerate() {
        let (px, py) = frame.px(x, y);
        let _ = write!(d, "{}{px:.2},{py:.2}", if k == 0 { "M" } else { " L" });
    }
    d
}

fn axes(out: &mut String, frame: &Frame, xlabel: &str, ylabel: &str) {
    let (l, t) = (frame.left, frame.top);
    let _ = writeln!(out, r##"<rect x="{l}" y="{t}" width="{PANEL}" height="{PANEL}" fill="none" stroke="#888"/>"##);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (x, y) = (l + f * PANEL, t + f * PANEL);
        let _ = writeln!(
            out,
            r#"<text x="{x:.1}" y="{:.1}" font-size="11" text-anchor="middle">{:.2}</text>"#,
            t + PANEL + 16.0,
            frame.data_x(x)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{:.2}</text>"#,
            l - 6.0,
            y + 4.0,
            frame.data_y(y)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">{}</text>"#,
        l + PANEL / 2.0,
        t + PANEL + 36.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
        l - 36.0,
        t + PANEL / 2.0,
        l - 36.0,
        t + PANEL / 2.0,
        escape(ylabel)
    );
}

/// Planned positions of one agent from one replan.
#[derive(Debug, Clone)]
pub struct PlannedPath {
    pub agent: usize,
    pub points: Vec<(f64, f64)>,
}

/// Top-down path plot with start circles and goal crosses; an altitude
/// panel is added when the table carries `pz`. Goals default to each
/// track's final position.
pub fn trajectory_svg(table: &TrajectoryTable, goals: Option<&[(f64, f64)]>, plans: &[PlannedPath]) -> String {
    let altitude = table.altitude_column();
    let width = if altitude.is_some() { 2.0 * PANEL + 3.0 * MARGIN + 24.0 } else { PANEL + 2.0 * MARGIN };
    let height = PANEL + 2.0 * MARGIN + 16.0;
    let final_positions: Vec<(f64, f64)> = table
        .tracks
        .iter()
        .map(|t| {
            let s = t.states.last().unwrap();
            (s[0], s[1])
        })
        .collect();
    let goals = goals.unwrap_or(&final_positions);

    let xy = table.tracks.iter().flat_map(|t| t.states.iter().map(|s| (s[0], s[1])));
    let frame = Frame::new(
        bounds(xy.chain(goals.iter().copied()).chain(plans.iter().flat_map(|p| p.points.iter().copied()))),
        MARGIN + 8.0,
        MARGIN,
        true,
    );

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    axes(&mut out, &frame, "x [m]", "y [m]");

    let _ = writeln!(out, r#"<g class="plans">"#);
    for p in plans {
        let _ = writeln!(
            out,
            r#"<polyline class="plan" fill="none" stroke="{}" stroke-width="0.8" stroke-dasharray="4 3" opacity="0.5" points="{}"/>"#,
            color(p.agent),
            p.points
                .iter()
                .map(|&(x, y)| {
                    let (px, py) = frame.px(x, y);
                    format!("{px:.2},{py:.2}")
                })
                .collect::<Vec<_>>()
                .join(" ")
        );
    }
    let _ = writeln!(out, "</g>");

    for (k, track) in table.tracks.iter().enumerate() {
        let c = color(track.agent);
        let d = polyline(&frame, track.states.iter().map(|s| (s[0], s[1])));
        let _ = writeln!(
            out,
            r#"<path class="trajectory" data-agent="{}" d="{d}" fill="none" stroke="{c}" stroke-width="2"/>"#,
            track.agent
        );
        let (sx, sy) = frame.px(track.states[0][0], track.states[0][1]);
        let _ = writeln!(out, r#"<circle class="start" cx="{sx:.2}" cy="{sy:.2}" r="6" fill="none" stroke="{c}" stroke-width="2"/>"#);
        let (gx, gy) = frame.px(goals[k].0, goals[k].1);
        let _ = writeln!(
            out,
            r#"<g class="goal" stroke="{c}" stroke-width="2"><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/></g>"#,
            gx - 6.0,
            gy - 6.0,
            gx + 6.0,
            gy + 6.0,
            gx - 6.0,
            gy + 6.0,
            gx + 6.0,
            gy - 6.0
        );
    }

    if let Some(z) = altitude {
        let tz = table.tracks.iter().flat_map(|t| t.times.iter().zip(&t.states).map(move |(&time, s)| (time, s[z])));
        let alt = Frame::new(bounds(tz), 2.0 * MARGIN + PANEL + 32.0, MARGIN, false);
        axes(&mut out, &alt, "t [s]", "z [m]");
        for track in &table.tracks {
            let d = polyline(&alt, track.times.iter().zip(&track.states).map(|(&t, s)| (t, s[z])));
            let _ = writeln!(
                out,
                r#"<path class="altitude" data-agent="{}" d="{d}" fill="none" stroke="{}" stroke-width="2"/>"#,
                track.agent,
                color(track.agent)
            );
        }
    }
    let _ = writeln!(out, "</svg>");
    out
}

/// Bar chart of a histogram with a caption line.
pub fn histogram_svg(h: &Histogram, xlabel: &str, caption: &str) -> String {
    let width = PANEL + 2.0 * MARGIN + 8.0;
    let height = PANEL + 2.0 * MARGIN + 32.0;
    let hi = h.lo + h.width * h.counts.len() as f64;
    let top = h.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let frame = Frame::new([h.lo, hi, 0.0, top], MARGIN + 8.0, MARGIN + 16.0, false);
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="28" font-size="14" text-anchor="middle">{}</text>"#,
        width / 2.0,
        escape(caption)
    );
    axes(&mut out, &frame, xlabel, "count");
    for (b, &count) in h.counts.iter().enumerate() {
        let (x1, y1) = frame.px(h.lo + b as f64 * h.width, count as f64);
        let (x2, y2) = frame.px(h.lo + (b + 1) as f64 * h.width, 0.0);
        let _ = writeln!(
            out,
            r##"<rect class="bar" x="{x1:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="#4c72b0" stroke="white"/>"##,
            (x2 - x1).max(0.0),
            (y2 - y1).max(0.0)
        );
    }
    let _ = writeln!(out, "</svg>");
    out
}
