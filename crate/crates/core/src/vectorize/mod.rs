//! Centerline extraction: binarized signatures become skeletons, skeletons
//! become ordered polyline strokes ready for G-code compilation.

mod simplify;
mod thin;
mod trace;

pub mod io;

pub use simplify::{simplify, simplify_drawing};
pub use thin::thin;
pub use trace::extract_polylines;

use crate::raster::BinaryImage;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VectorizeError {
    #[error("drawing line {line}: {msg}")]
    MalformedDrawing { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One-pixel-wide skeleton. Produced by [`thin`]; carries the guarantee
/// that no 2x2 block is fully ink.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonImage {
    inner: BinaryImage,
}

impl SkeletonImage {
    pub(crate) fn from_binary(inner: BinaryImage) -> Self {
        SkeletonImage { inner }
    }

    pub fn width(&self) -> usize {
        self.inner.width()
    }

    pub fn height(&self) -> usize {
        self.inner.height()
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.inner.get(x, y)
    }

    pub fn ink_count(&self) -> usize {
        self.inner.ink_count()
    }

    pub fn as_binary(&self) -> &BinaryImage {
        &self.inner
    }

    /// Ink pixel coordinates in row-major order.
    pub fn ink_pixels(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for y in 0..self.height() {
            for x in 0..self.width() {
                if self.get(x, y) {
                    out.push((x, y));
                }
            }
        }
        out
    }
}

/// Open or closed chain of points in pixel coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<(f64, f64)>,
}

impl Polyline {
    /// Panics on fewer than 2 points or consecutive duplicates.
    pub fn new(points: Vec<(f64, f64)>) -> Self {
        assert!(points.len() >= 2, "polyline needs at least 2 points");
        for pair in points.windows(2) {
            assert!(pair[0] != pair[1], "consecutive duplicate point {:?}", pair[0]);
        }
        Polyline { points }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// A traced drawing: ordered strokes plus the source raster dimensions the
/// coordinates live in.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorDrawing {
    pub strokes: Vec<Polyline>,
    pub source_width: usize,
    pub source_height: usize,
}

impl VectorDrawing {
    /// Panics if any point falls outside `[0, source_width] x [0, source_height]`.
    pub fn new(strokes: Vec<Polyline>, source_width: usize, source_height: usize) -> Self {
        for stroke in &strokes {
            for &(x, y) in stroke.points() {
                assert!(
                    x >= 0.0 && x <= source_width as f64 && y >= 0.0 && y <= source_height as f64,
                    "point ({x},{y}) outside source bounds {source_width}x{source_height}"
                );
            }
        }
        VectorDrawing { strokes, source_width, source_height }
    }

    pub fn point_count(&self) -> usize {
        self.strokes.iter().map(Polyline::len).sum()
    }
}

/// Number of 8-connected ink components.
pub fn components8(img: &BinaryImage) -> usize {
    let (w, h) = (img.width(), img.height());
    let mut seen = vec![false; w * h];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !img.ink()[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let (x, y) = (idx % w, idx / w);
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let nidx = ny as usize * w + nx as usize;
                    if img.ink()[nidx] && !seen[nidx] {
                        seen[nidx] = true;
                        stack.push(nidx);
                    }
                }
            }
        }
    }
    count
}

/// True if some 2x2 block is entirely ink.
pub fn has_full_2x2_block(img: &BinaryImage) -> bool {
    for y in 0..img.height().saturating_sub(1) {
        for x in 0..img.width().saturating_sub(1) {
            if img.get(x, y) && img.get(x + 1, y) && img.get(x, y + 1) && img.get(x + 1, y + 1) {
                return true;
            }
        }
    }
    false
}
