//! Minimal SVG output for phase portraits and input sequences.

use std::fmt::Write;

use nalgebra::DVector;

use crate::polytope::PolyhedralCSet;

const LEVEL_FLOOR: f64 = 0.05;
const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 360.0;

/// Vertices of a planar set ordered counter-clockwise around the origin.
fn ordered_vertices(set: &PolyhedralCSet) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = set.vertices().iter().map(|v| (v[0], v[1])).collect();
    pts.sort_by(|a, b| a.1.atan2(a.0).total_cmp(&b.1.atan2(b.0)));
    pts
}

/// Scales `λ^k` drawn inside the set, stopping before the first one below 0.05.
pub fn nested_levels(lambda: f64) -> Vec<f64> {
    let mut levels = Vec::new();
    if !(lambda > 0.0 && lambda < 1.0) {
        return levels;
    }
    let mut level = lambda;
    while level >= LEVEL_FLOOR {
        levels.push(level);
        level *= lambda;
    }
    levels
}

fn points_attr(pts: impl Iterator<Item = (f64, f64)>) -> String {
    pts.map(|(x, y)| format!("{x:.6},{:.6}", -y)).collect::<Vec<_>>().join(" ")
}

/// Phase portrait of a 2-D trajectory over `S` and its nested copies `λ^k S`.
/// Returns `None` for sets that are not planar.
pub fn phase_portrait_svg(set: &PolyhedralCSet, lambda: f64, states: &[DVector<f64>]) -> Option<String> {
    if set.dim() != 2 {
        return None;
    }
    let outline = ordered_vertices(set);
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &outline {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    let (dx, dy) = (0.1 * (xmax - xmin), 0.1 * (ymax - ymin));
    let (vx, vy, vw, vh) = (xmin - dx, -(ymax + dy), xmax - xmin + 2.0 * dx, ymax - ymin + 2.0 * dy);
    let stroke = 0.004 * vw.max(vh);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="{vx:.6} {vy:.6} {vw:.6} {vh:.6}" preserveAspectRatio="xMidYMid meet">"#
    );
    let _ = writeln!(
        svg,
        r#"  <polygon points="{}" fill="none" stroke="green" stroke-width="{stroke:.6}"/>"#,
        points_attr(outline.iter().copied())
    );
    for level in nested_levels(lambda) {
        let _ = writeln!(
            svg,
            r#"  <polygon points="{}" fill="none" stroke="green" stroke-width="{stroke:.6}" stroke-dasharray="{:.6}"/>"#,
            points_attr(outline.iter().map(|&(x, y)| (level * x, level * y))),
            3.0 * stroke
        );
    }
    let _ = writeln!(
        svg,
        r#"  <polyline points="{}" fill="none" stroke="black" stroke-width="{stroke:.6}"/>"#,
        points_attr(states.iter().map(|x| (x[0], x[1])))
    );
    for x in states {
        let _ = writeln!(
            svg,
            r#"  <circle cx="{:.6}" cy="{:.6}" r="{:.6}" fill="black"/>"#,
            x[0],
            -x[1],
            2.0 * stroke
        );
    }
    svg.push_str("</svg>\n");
    Some(svg)
}

/// Plot of a scalar input sequence between its bounds `[lo, hi]`.
pub fn input_svg(inputs: &[f64], lo: f64, hi: f64) -> String {
    let steps = inputs.len().max(2) as f64 - 1.0;
    let span = (hi - lo).max(f64::EPSILON);
    let (ylo, yhi) = (lo - 0.1 * span, hi + 0.1 * span);
    let map_x = |t: f64| 40.0 + (WIDTH - 60.0) * t / steps;
    let map_y = |u: f64| 20.0 + (HEIGHT - 40.0) * (yhi - u) / (yhi - ylo);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    for bound in [lo, hi] {
        let y = map_y(bound);
        let _ = writeln!(
            svg,
            r#"  <line x1="{:.3}" y1="{y:.3}" x2="{:.3}" y2="{y:.3}" stroke="red" stroke-dasharray="4"/>"#,
            map_x(0.0),
            map_x(steps)
        );
        let _ = writeln!(svg, r#"  <text x="2" y="{:.3}" font-size="10">{bound}</text>"#, y + 3.0);
    }
    let pts: Vec<String> = inputs
        .iter()
        .enumerate()
        .map(|(t, &u)| format!("{:.3},{:.3}", map_x(t as f64), map_y(u)))
        .collect();
    let _ = writeln!(svg, r#"  <polyline points="{}" fill="none" stroke="black"/>"#, pts.join(" "));
    for p in &pts {
        let (x, y) = p.split_once(',').unwrap_or(("0", "0"));
        let _ = writeln!(svg, r#"  <circle cx="{x}" cy="{y}" r="2" fill="black"/>"#);
    }
    svg.push_str("</svg>\n");
    svg
}
