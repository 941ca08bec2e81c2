//! Skeleton-to-polyline tracing.
//!
//! The skeleton is read as a graph: cardinal neighbors are always connected;
//! a diagonal neighbor is connected only when neither of the two cardinal
//! pixels it shares with us is ink (otherwise the connection already exists
//! through that pixel, and counting it again would turn every pixel beside a
//! crossing into a junction). Pixels whose degree in this graph differs from
//! 2 are nodes (endpoints, junctions, isolated dots). Every maximal chain of
//! degree-2 pixels between two nodes becomes one stroke; chains with no node
//! at all are pure cycles and close on themselves. The scan order, walk
//! order, and final sort are all fixed so the same skeleton always yields
//! the same drawing.

use std::collections::HashSet;

use crate::vectorize::{Polyline, SkeletonImage, VectorDrawing};

/// Neighbor offsets in row-major order, the tie-break order for walks.
const NEIGHBORS: [(i64, i64); 8] =
    [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

/// Reduced-graph neighbors of an ink pixel (see module docs). The pruning
/// rule is symmetric, so (a adjacent to b) == (b adjacent to a).
fn ink_neighbors(skel: &SkeletonImage, x: usize, y: usize) -> Vec<(usize, usize)> {
    let (w, h) = (skel.width() as i64, skel.height() as i64);
    let at = |nx: i64, ny: i64| -> bool {
        nx >= 0 && ny >= 0 && nx < w && ny < h && skel.get(nx as usize, ny as usize)
    };
    let mut out = Vec::new();
    for &(dx, dy) in &NEIGHBORS {
        let (nx, ny) = (x as i64 + dx, y as i64 + dy);
        if !at(nx, ny) {
            continue;
        }
        let diagonal = dx != 0 && dy != 0;
        if diagonal && (at(x as i64 + dx, y as i64) || at(x as i64, y as i64 + dy)) {
            continue;
        }
        out.push((nx as usize, ny as usize));
    }
    out
}

fn center(p: (usize, usize)) -> (f64, f64) {
    (p.0 as f64, p.1 as f64)
}

/// Follows a chain starting at `node` through `first`, stopping at the next
/// pixel whose degree differs from 2 (which may be `node` itself for loops).
fn walk(
    skel: &SkeletonImage,
    degree: impl Fn((usize, usize)) -> usize,
    node: (usize, usize),
    first: (usize, usize),
) -> Vec<(usize, usize)> {
    let mut path = vec![node, first];
    let (mut prev, mut cur) = (node, first);
    while degree(cur) == 2 {
        let next = ink_neighbors(skel, cur.0, cur.1)
            .into_iter()
            .find(|&n| n != prev)
            .expect("degree-2 pixel must have a second neighbor");
        path.push(next);
        prev = cur;
        cur = next;
    }
    path
}

/// Lexicographic (y, x) order on pixel coordinates.
fn yx_key(p: (usize, usize)) -> (usize, usize) {
    (p.1, p.0)
}

fn compare_point_lists(a: &[(f64, f64)], b: &[(f64, f64)]) -> std::cmp::Ordering {
    let key = |&(x, y): &(f64, f64)| (y, x);
    let left = a.iter().map(key);
    let right = b.iter().map(key);
    left.partial_cmp(right).expect("traced coordinates are finite")
}

/// Converts a skeleton into ordered strokes.
///
/// Every ink pixel appears in exactly one stroke (plus shared junction
/// pixels at stroke ends). Isolated pixels become a short horizontal dash
/// around the pixel center so the drawing still marks them.
pub fn extract_polylines(skel: &SkeletonImage) -> VectorDrawing {
    let pixels = skel.ink_pixels();
    let degree_of = |p: (usize, usize)| ink_neighbors(skel, p.0, p.1).len();

    let mut strokes: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut covered: HashSet<(usize, usize)> = HashSet::new();
    // Directed chain entries already traced, keyed (node, first step).
    let mut walked: HashSet<((usize, usize), (usize, usize))> = HashSet::new();

    // Pass 1: chains anchored at nodes.
    for &p in &pixels {
        let deg = degree_of(p);
        if deg == 2 {
            continue;
        }
        if deg == 0 {
            let (x, y) = center(p);
            let half = 0.25;
            let start = if x - half < 0.0 { x } else { x - half };
            strokes.push(vec![(start, y), (start + 2.0 * half, y)]);
            covered.insert(p);
            continue;
        }
        for first in ink_neighbors(skel, p.0, p.1) {
            if walked.contains(&(p, first)) {
                continue;
            }
            let path = walk(skel, degree_of, p, first);
            walked.insert((p, first));
            let last = path[path.len() - 1];
            let before_last = path[path.len() - 2];
            walked.insert((last, before_last));
            covered.extend(path.iter().copied());
            strokes.push(path.into_iter().map(center).collect());
        }
    }

    // Pass 2: pure cycles (every pixel degree 2, never touched above).
    for &p in &pixels {
        if covered.contains(&p) || degree_of(p) != 2 {
            continue;
        }
        let mut around = ink_neighbors(skel, p.0, p.1);
        around.sort_by_key(|&n| yx_key(n));
        let mut path = vec![p, around[0]];
        let (mut prev, mut cur) = (p, around[0]);
        while cur != p {
            let next = ink_neighbors(skel, cur.0, cur.1)
                .into_iter()
                .find(|&n| n != prev)
                .expect("cycle pixel must have a second neighbor");
            path.push(next);
            prev = cur;
            cur = next;
        }
        covered.extend(path.iter().copied());
        strokes.push(path.into_iter().map(center).collect());
    }

    // Canonical orientation: open strokes run from their lexicographically
    // smaller end.
    for stroke in &mut strokes {
        let first = *stroke.first().expect("stroke is non-empty");
        let last = *stroke.last().expect("stroke is non-empty");
        if first != last && (last.1, last.0) < (first.1, first.0) {
            stroke.reverse();
        }
    }
    strokes.sort_by(|a, b| compare_point_lists(a, b));

    let polylines = strokes.into_iter().map(Polyline::new).collect();
    VectorDrawing::new(polylines, skel.width(), skel.height())
}
