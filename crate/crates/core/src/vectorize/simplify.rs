//! Ramer-Douglas-Peucker stroke simplification.

use crate::vectorize::{Polyline, VectorDrawing};

/// Distance from `p` to the segment `a`-`b`.
fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let (wx, wy) = (p.0 - a.0, p.1 - a.1);
    let len2 = vx * vx + vy * vy;
    if len2 == 0.0 {
        return (wx * wx + wy * wy).sqrt();
    }
    let t = ((wx * vx + wy * vy) / len2).clamp(0.0, 1.0);
    let (dx, dy) = (wx - t * vx, wy - t * vy);
    (dx * dx + dy * dy).sqrt()
}

fn rdp(points: &[(f64, f64)], epsilon: f64, keep: &mut Vec<(f64, f64)>) {
    let last = points.len() - 1;
    let (a, b) = (points[0], points[last]);
    let mut worst = 0.0;
    let mut worst_idx = 0;
    for (i, &p) in points.iter().enumerate().take(last).skip(1) {
        let d = segment_distance(p, a, b);
        if d > worst {
            worst = d;
            worst_idx = i;
        }
    }
    if worst > epsilon {
        rdp(&points[..=worst_idx], epsilon, keep);
        keep.pop();
        rdp(&points[worst_idx..], epsilon, keep);
    } else {
        keep.push(a);
        keep.push(b);
    }
}

fn dedup_consecutive(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &p in points {
        if out.last() != Some(&p) {
            out.push(p);
        }
    }
    out
}

fn simplify_points(points: &[(f64, f64)], epsilon: f64) -> Vec<(f64, f64)> {
    let deduped = dedup_consecutive(points);
    if epsilon == 0.0 || deduped.len() <= 2 {
        return deduped;
    }
    let mut keep = Vec::new();
    rdp(&deduped, epsilon, &mut keep);
    // A closed stroke can keep the same coordinate twice in a row (its two
    // ends); collapse so the polyline invariant holds.
    dedup_consecutive(&keep)
}

/// Simplifies one stroke with tolerance `epsilon` (pixels).
///
/// Endpoints survive, point counts never grow, every dropped point stays
/// within `epsilon` of the simplified stroke, and `epsilon == 0` only strips
/// consecutive duplicate points. Running it twice at the same epsilon
/// changes nothing.
pub fn simplify(stroke: &Polyline, epsilon: f64) -> Polyline {
    assert!(epsilon >= 0.0 && epsilon.is_finite(), "epsilon must be finite and non-negative");
    let pts = simplify_points(stroke.points(), epsilon);
    if pts.len() < 2 {
        // A fully-degenerate stroke (a closed loop inside epsilon) keeps
        // its original points rather than vanish.
        return stroke.clone();
    }
    Polyline::new(pts)
}

/// [`simplify`] applied to every stroke of a drawing.
pub fn simplify_drawing(drawing: &VectorDrawing, epsilon: f64) -> VectorDrawing {
    let strokes = drawing.strokes.iter().map(|s| simplify(s, epsilon)).collect();
    VectorDrawing::new(strokes, drawing.source_width, drawing.source_height)
}
