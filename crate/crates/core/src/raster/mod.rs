//! Image ingestion and preprocessing for the verification pipeline.
//!
//! Scanned signatures arrive as PGM or PNG, are letterboxed and resized to a
//! square, binarized with Otsu's threshold, and optionally augmented with
//! random rotations. Grayscale follows the scanner convention: 0 is black
//! ink, 255 is white paper.

mod dataset;
mod draw;
mod ops;
mod pgm;

pub use dataset::{load_dataset, DatasetEntry, Label};
pub use draw::{stamp_polyline, stamp_segment, Disc};
pub use ops::{augment, binarize_otsu, otsu_threshold, resize_bilinear, rotate};
pub use pgm::{load_image, save_pgm, ImageFormat};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("malformed image header: {0}")]
    MalformedHeader(String),
    #[error("truncated payload: expected {expected} samples, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("png decode failed: {0}")]
    PngDecode(String),
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// 8-bit grayscale raster, row-major. 0 = black ink, 255 = white paper.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    /// Panics if `pixels.len() != width * height` or either dimension is 0.
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Self {
        assert!(width >= 1 && height >= 1, "empty image");
        assert_eq!(pixels.len(), width * height, "pixel buffer size mismatch");
        GrayImage { width, height, pixels }
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }
}

/// Binary raster, row-major. `true` = ink.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    ink: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, ink: Vec<bool>) -> Self {
        assert_eq!(ink.len(), width * height, "ink buffer size mismatch");
        BinaryImage { width, height, ink }
    }

    pub fn blank(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![false; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn ink(&self) -> &[bool] {
        &self.ink
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.ink[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.ink[y * self.width + x] = v;
    }

    pub fn ink_count(&self) -> usize {
        self.ink.iter().filter(|&&b| b).count()
    }

    /// Render as 8-bit grayscale: ink 0, background 255.
    pub fn to_gray(&self) -> GrayImage {
        let pixels = self.ink.iter().map(|&b| if b { 0 } else { 255 }).collect();
        GrayImage::new(self.width, self.height, pixels)
    }
}

/// Rotation augmentation parameters. Angles are drawn uniformly from
/// `[-max_rotation, +max_rotation]` degrees.
#[derive(Debug, Clone, Copy)]
pub struct AugmentationSpec {
    pub max_rotation: f64,
    pub seed: u64,
}

impl AugmentationSpec {
    /// Panics unless `0 <= max_rotation <= 180`.
    pub fn new(max_rotation: f64, seed: u64) -> Self {
        assert!(
            (0.0..=180.0).contains(&max_rotation),
            "max_rotation {max_rotation} out of [0, 180]"
        );
        AugmentationSpec { max_rotation, seed }
    }
}
