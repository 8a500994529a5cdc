//! Deterministic SVG rendering: clock polygons, chronotonic box curves, and
//! contour-plus-steps overlays.
//!
//! Output is a pure function of the input (no timestamps, no ids), so a
//! rerun writes byte-identical files. Beat labels on the clock face are
//! 1-based like every other textual surface; the chronotonic time axis is
//! elapsed beats, so it starts at 0.

use std::fmt::Write;

use compas::geometry::{chronotonic, clock_vertex};
use compas::notation::{RhythmPattern, TimedPitchSequence};
use compas::segmentation::StepApproximation;

const STYLE: &str = "\
.title{font:12px sans-serif;fill:#333}\
.cycle{fill:none;stroke:#cccccc}\
.beat{fill:#b8b8b8}\
.onset{fill:#c43333}\
.onset-polygon{fill:#c43333;fill-opacity:0.15;stroke:#c43333;stroke-width:1.5}\
.label{font:10px sans-serif;fill:#555;text-anchor:middle;dominant-baseline:middle}\
.axis{stroke:#888888}\
.tick{font:9px sans-serif;fill:#555;text-anchor:middle}\
.box{fill:#4a7fb5;fill-opacity:0.15;stroke:#4a7fb5}\
.pt{fill:#444444}\
.step{stroke:#c43333;stroke-width:2}";

fn document(width: f64, height: f64, body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\">\n<style>{STYLE}</style>\n{body}</svg>\n",
        fmt(width),
        fmt(height)
    )
}

/// Two-decimal fixed-point with trailing zeros trimmed; enough for pixel
/// coordinates and stable across runs.
fn fmt(v: f64) -> String {
    let mut s = format!("{v:.2}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn title_text(title: &str) -> String {
    format!("<text class=\"title\" x=\"8\" y=\"16\">{title}</text>\n")
}

/// Clock-face plot: beats on a circle with beat 1 at the top, advancing
/// clockwise, onsets highlighted and joined into the onset polygon.
pub fn polygon_svg(p: &RhythmPattern) -> String {
    let (cx, cy, r) = (130.0, 136.0, 90.0);
    let place = |beat: usize, radius: f64| {
        let (x, y) = clock_vertex(beat, p.cycle_len());
        (cx + radius * x, cy - radius * y)
    };
    let mut body = title_text(p.name().unwrap_or("pattern"));
    let _ = writeln!(
        body,
        "<circle class=\"cycle\" cx=\"{}\" cy=\"{}\" r=\"{}\"/>",
        fmt(cx),
        fmt(cy),
        fmt(r)
    );
    let points: Vec<String> = p
        .onsets()
        .iter()
        .map(|&b| {
            let (x, y) = place(b, r);
            format!("{},{}", fmt(x), fmt(y))
        })
        .collect();
    let _ = writeln!(body, "<polygon class=\"onset-polygon\" points=\"{}\"/>", points.join(" "));
    for beat in 0..p.cycle_len() {
        let (x, y) = place(beat, r);
        let class = if p.has_onset_at(beat) { "onset" } else { "beat" };
        let radius = if p.has_onset_at(beat) { 5.0 } else { 3.0 };
        let _ = writeln!(
            body,
            "<circle class=\"{class}\" cx=\"{}\" cy=\"{}\" r=\"{}\"/>",
            fmt(x),
            fmt(y),
            fmt(radius)
        );
        let (lx, ly) = place(beat, r + 14.0);
        let _ = writeln!(
            body,
            "<text class=\"label\" x=\"{}\" y=\"{}\">{}</text>",
            fmt(lx),
            fmt(ly),
            beat + 1
        );
    }
    document(260.0, 272.0, &body)
}

/// Chronotonic plot: one square box per inter-onset span, height equal to
/// width, over a time axis in elapsed beats.
pub fn chronotonic_svg(p: &RhythmPattern) -> String {
    let curve = chronotonic(p);
    let unit = 18.0;
    let (left, base) = (34.0, 30.0);
    let max_h = curve.heights().into_iter().max().unwrap_or(1) as f64;
    let base_y = base + max_h * unit;
    let width = left + curve.cycle_len() as f64 * unit + 20.0;

    let mut body = title_text(p.name().unwrap_or("pattern"));
    for (start, end) in curve.segments() {
        let h = (end - start) as f64;
        let _ = writeln!(
            body,
            "<rect class=\"box\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/>",
            fmt(left + start as f64 * unit),
            fmt(base_y - h * unit),
            fmt(h * unit),
            fmt(h * unit)
        );
    }
    let _ = writeln!(
        body,
        "<line class=\"axis\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
        fmt(left),
        fmt(base_y),
        fmt(left + curve.cycle_len() as f64 * unit),
        fmt(base_y)
    );
    for t in (0..=curve.cycle_len()).step_by(3) {
        let x = left + t as f64 * unit;
        let _ = writeln!(
            body,
            "<line class=\"axis\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
            fmt(x),
            fmt(base_y),
            fmt(x),
            fmt(base_y + 4.0)
        );
        let _ = writeln!(
            body,
            "<text class=\"tick\" x=\"{}\" y=\"{}\">{t}</text>",
            fmt(x),
            fmt(base_y + 15.0)
        );
    }
    document(width, base_y + 24.0, &body)
}

/// Contour samples with the fitted steps drawn over them.
pub fn segment_svg(track: &TimedPitchSequence, approx: &StepApproximation) -> String {
    let (width, height, margin) = (480.0, 260.0, 36.0);
    let (t0, t1) = track.span();
    let t_span = if t1 > t0 { t1 - t0 } else { 1.0 };
    let mut vlo = f64::INFINITY;
    let mut vhi = f64::NEG_INFINITY;
    for &(_, y) in track.points() {
        vlo = vlo.min(y);
        vhi = vhi.max(y);
    }
    for s in approx.steps() {
        vlo = vlo.min(s.value);
        vhi = vhi.max(s.value);
    }
    let v_span = if vhi > vlo { vhi - vlo } else { 1.0 };
    let sx = |t: f64| margin + (t - t0) / t_span * (width - 2.0 * margin);
    let sy = |v: f64| height - margin - (v - vlo) / v_span * (height - 2.0 * margin);

    let mut body = title_text(&format!("steps at tolerance {}", fmt(approx.alpha())));
    let _ = writeln!(
        body,
        "<line class=\"axis\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
        fmt(margin),
        fmt(height - margin),
        fmt(width - margin),
        fmt(height - margin)
    );
    for s in approx.steps() {
        let _ = writeln!(
            body,
            "<line class=\"step\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
            fmt(sx(s.start)),
            fmt(sy(s.value)),
            fmt(sx(s.end)),
            fmt(sy(s.value))
        );
    }
    for &(t, y) in track.points() {
        let _ = writeln!(
            body,
            "<circle class=\"pt\" cx=\"{}\" cy=\"{}\" r=\"2.5\"/>",
            fmt(sx(t)),
            fmt(sy(y))
        );
    }
    document(width, height, &body)
}
