//! Static SVG plot of a run: planar overlay of target, reference and
//! executed curves next to the disturbance time series, with disturbance
//! windows shaded.

use std::fmt::Write as _;

use l1ds_core::disturbance::Disturbances;
use l1ds_core::harness::RunResult;
use l1ds_core::state::StateVec;

const PANEL: f64 = 420.0;
const MARGIN: f64 = 40.0;
const MAX_POINTS: usize = 800;
const AXIS_COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

struct Frame {
    x0: f64,
    y0: f64,
    lo: [f64; 2],
    hi: [f64; 2],
}

impl Frame {
    fn new(x0: f64, y0: f64, mut lo: [f64; 2], mut hi: [f64; 2]) -> Self {
        for i in 0..2 {
            if !(hi[i] > lo[i]) {
                lo[i] -= 0.5;
                hi[i] += 0.5;
            }
            let pad = 0.05 * (hi[i] - lo[i]);
            lo[i] -= pad;
            hi[i] += pad;
        }
        Self { x0, y0, lo, hi }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.x0 + (x - self.lo[0]) / (self.hi[0] - self.lo[0]) * PANEL,
            self.y0 + PANEL - (y - self.lo[1]) / (self.hi[1] - self.lo[1]) * PANEL,
        )
    }
}

fn stride(n: usize) -> usize {
    n.div_ceil(MAX_POINTS).max(1)
}

fn polyline(out: &mut String, frame: &Frame, pts: &[(f64, f64)], color: &str, width: f64, dash: Option<&str>) {
    let step = stride(pts.len());
    let mut coords = String::new();
    let last = pts.len().saturating_sub(1);
    for (i, &(x, y)) in pts.iter().enumerate() {
        if i % step != 0 && i != last {
            continue;
        }
        if !(x.is_finite() && y.is_finite()) {
            continue;
        }
        let (px, py) = frame.map(x, y);
        let _ = write!(coords, "{px:.2},{py:.2} ");
    }
    let dash = dash.map_or(String::new(), |d| format!(" stroke-dasharray=\"{d}\""));
    let _ = writeln!(
        out,
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\"{dash} points=\"{}\"/>",
        coords.trim_end()
    );
}

fn bounds<'a>(sets: impl Iterator<Item = &'a [(f64, f64)]>) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for &(x, y) in sets.flatten() {
        if x.is_finite() && y.is_finite() {
            lo = [lo[0].min(x), lo[1].min(y)];
            hi = [hi[0].max(x), hi[1].max(y)];
        }
    }
    if !lo[0].is_finite() {
        return ([0.0, 0.0], [1.0, 1.0]);
    }
    (lo, hi)
}

fn planar(states: &[StateVec<f64>]) -> Vec<(f64, f64)> {
    states
        .iter()
        .map(|s| (s[0], if s.dim() > 1 { s[1] } else { 0.0 }))
        .collect()
}

fn legend(out: &mut String, x: f64, y: f64, items: &[(&str, &str)]) {
    for (i, (label, color)) in items.iter().enumerate() {
        let yy = y + 14.0 * i as f64;
        let _ = writeln!(
            out,
            "<line x1=\"{x}\" y1=\"{yy}\" x2=\"{}\" y2=\"{yy}\" stroke=\"{color}\" stroke-width=\"2\"/>\
             <text x=\"{}\" y=\"{}\" font-size=\"11\">{label}</text>",
            x + 18.0,
            x + 22.0,
            yy + 4.0
        );
    }
}

/// Renders `result` with the disturbance windows of `dist` shaded.
pub fn render(result: &RunResult<f64>, dist: &Disturbances<f64>, title: &str) -> String {
    let width = 2.0 * PANEL + 3.0 * MARGIN;
    let height = PANEL + 2.0 * MARGIN;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{MARGIN}\" y=\"{}\" font-size=\"14\">{}</text>",
        MARGIN * 0.6,
        escape(title)
    );

    // planar overlay
    let target = planar(result.target.states());
    let reference = planar(result.reference.states());
    let executed = planar(result.executed.states());
    let (lo, hi) = bounds([&target[..], &reference[..], &executed[..]].into_iter());
    let f = Frame::new(MARGIN, MARGIN, lo, hi);
    let _ = writeln!(
        out,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{PANEL}\" height=\"{PANEL}\" fill=\"none\" stroke=\"#999\"/>"
    );
    polyline(&mut out, &f, &target, "#000000", 2.0, Some("6,4"));
    polyline(&mut out, &f, &reference, "#ff7f0e", 1.2, None);
    polyline(&mut out, &f, &executed, "#1f77b4", 2.0, None);
    legend(
        &mut out,
        MARGIN + 8.0,
        MARGIN + 14.0,
        &[("target", "#000000"), ("reference", "#ff7f0e"), ("executed", "#1f77b4")],
    );

    // disturbance time series
    let x0 = 2.0 * MARGIN + PANEL;
    let times = result.executed.times();
    let d = result.executed.dim();
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for (name, trace) in [("d_m/σ", &result.matched_trace), ("d_um", &result.unmatched_trace)] {
        if trace.iter().all(StateVec::is_zero) {
            continue;
        }
        for axis in 0..d {
            series.push((
                format!("{name} axis {}", axis + 1),
                times.iter().zip(trace).map(|(&t, v)| (t, v[axis])).collect(),
            ));
        }
    }
    let (mut lo, mut hi) = bounds(series.iter().map(|(_, s)| &s[..]));
    lo[0] = 0.0;
    hi[0] = 1.0;
    let g = Frame::new(x0, MARGIN, lo, hi);
    let mut windows: Vec<[f64; 2]> = dist.specs.iter().flat_map(|s| s.signal.active_windows()).collect();
    if let Some(h) = dist.hold {
        windows.push([h.start, h.stop]);
    }
    for [a, b] in windows {
        if a <= 0.0 && b >= 1.0 {
            continue;
        }
        let (xa, _) = g.map(a, 0.0);
        let (xb, _) = g.map(b, 0.0);
        let _ = writeln!(
            out,
            "<rect x=\"{xa:.2}\" y=\"{MARGIN}\" width=\"{:.2}\" height=\"{PANEL}\" fill=\"#f2c14e\" fill-opacity=\"0.3\"/>",
            (xb - xa).max(0.5)
        );
    }
    let _ = writeln!(
        out,
        "<rect x=\"{x0}\" y=\"{MARGIN}\" width=\"{PANEL}\" height=\"{PANEL}\" fill=\"none\" stroke=\"#999\"/>"
    );
    let mut items = Vec::new();
    for (i, (label, pts)) in series.iter().enumerate() {
        let color = AXIS_COLORS[i % AXIS_COLORS.len()];
        polyline(&mut out, &g, pts, color, 1.2, None);
        items.push((label.as_str(), color));
    }
    legend(&mut out, x0 + 8.0, MARGIN + 14.0, &items);
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-size=\"11\">normalized time</text>",
        x0 + PANEL / 2.0 - 40.0,
        MARGIN + PANEL + 18.0
    );
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
