//! Preprocessing: letterbox resize, Otsu binarization, rotation, rotation
//! augmentation.

use super::{AugmentationSpec, BinaryImage, GrayImage};
use crate::rng::{derive, streams, SplitMix64};

/// Resize to `target` x `target`. The image is first letterboxed onto a
/// white square canvas of side `max(width, height)` (centered, integer
/// offsets rounded down), then resampled bilinearly using half-pixel sample
/// centers. Results are rounded half-up to 8 bits.
pub fn resize_bilinear(img: &GrayImage, target: usize) -> GrayImage {
    assert!(target >= 1, "target must be >= 1");
    let side = img.width().max(img.height());
    let ox = (side - img.width()) / 2;
    let oy = (side - img.height()) / 2;

    let mut canvas = vec![255u8; side * side];
    for y in 0..img.height() {
        let src = &img.pixels()[y * img.width()..(y + 1) * img.width()];
        let dst = &mut canvas[(y + oy) * side + ox..(y + oy) * side + ox + img.width()];
        dst.copy_from_slice(src);
    }

    let scale = side as f64 / target as f64;
    let mut out = vec![0u8; target * target];
    for j in 0..target {
        let sy = ((j as f64 + 0.5) * scale - 0.5).clamp(0.0, (side - 1) as f64);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(side - 1);
        let fy = sy - y0 as f64;
        for i in 0..target {
            let sx = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (side - 1) as f64);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(side - 1);
            let fx = sx - x0 as f64;
            let p00 = canvas[y0 * side + x0] as f64;
            let p10 = canvas[y0 * side + x1] as f64;
            let p01 = canvas[y1 * side + x0] as f64;
            let p11 = canvas[y1 * side + x1] as f64;
            let top = p00 + (p10 - p00) * fx;
            let bot = p01 + (p11 - p01) * fx;
            let v = top + (bot - top) * fy;
            out[j * target + i] = round_half_up(v);
        }
    }
    GrayImage::new(target, target, out)
}

#[inline]
fn round_half_up(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Otsu threshold over the 256-bin histogram: the smallest `t` maximizing
/// between-class variance of the split `[0, t)` vs `[t, 255]`. A constant
/// image yields `t = 0`.
pub fn otsu_threshold(img: &GrayImage) -> u8 {
    let mut hist = [0u64; 256];
    for &p in img.pixels() {
        hist[p as usize] += 1;
    }
    let total = img.pixels().len() as f64;
    let total_sum: f64 = hist.iter().enumerate().map(|(v, &c)| v as f64 * c as f64).sum();

    let mut best_t = 0u16;
    let mut best_var = 0.0f64;
    let mut count_below = 0u64;
    let mut sum_below = 0.0f64;
    for t in 0..=255u16 {
        // Classes for threshold t: below = values < t, above = values >= t.
        if t > 0 {
            let v = (t - 1) as usize;
            count_below += hist[v];
            sum_below += v as f64 * hist[v] as f64;
        }
        let w0 = count_below as f64 / total;
        let w1 = 1.0 - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let mu0 = sum_below / count_below as f64;
        let mu1 = (total_sum - sum_below) / (total - count_below as f64);
        let var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if var > best_var {
            best_var = var;
            best_t = t;
        }
    }
    best_t as u8
}

/// Binarize with the Otsu threshold: pixels strictly below the threshold
/// become ink.
pub fn binarize_otsu(img: &GrayImage) -> BinaryImage {
    let t = otsu_threshold(img);
    let ink = img.pixels().iter().map(|&p| p < t).collect();
    BinaryImage::new(img.width(), img.height(), ink)
}

/// Rotate about the image center by `angle` degrees (positive angles turn
/// the +x axis toward +y), sampling bilinearly; samples outside the source
/// are `fill`. Output dimensions equal the input's.
pub fn rotate(img: &GrayImage, angle: f64, fill: u8) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let rad = angle.to_radians();
    let (sin, cos) = rad.sin_cos();

    let mut out = vec![0u8; w * h];
    for y in 0..h {
        let dy = y as f64 - cy;
        for x in 0..w {
            let dx = x as f64 - cx;
            // Inverse mapping: source position of this output pixel.
            let sx = cx + dx * cos + dy * sin;
            let sy = cy - dx * sin + dy * cos;
            out[y * w + x] = round_half_up(sample_bilinear_filled(img, sx, sy, fill));
        }
    }
    GrayImage::new(w, h, out)
}

fn sample_bilinear_filled(img: &GrayImage, sx: f64, sy: f64, fill: u8) -> f64 {
    let x0 = sx.floor() as i64;
    let y0 = sy.floor() as i64;
    let fx = sx - x0 as f64;
    let fy = sy - y0 as f64;
    let tap = |x: i64, y: i64| -> f64 {
        if x >= 0 && y >= 0 && (x as usize) < img.width() && (y as usize) < img.height() {
            img.get(x as usize, y as usize) as f64
        } else {
            fill as f64
        }
    };
    let top = tap(x0, y0) + (tap(x0 + 1, y0) - tap(x0, y0)) * fx;
    let bot = tap(x0, y0 + 1) + (tap(x0 + 1, y0 + 1) - tap(x0, y0 + 1)) * fx;
    top + (bot - top) * fy
}

/// The rotation angles `augment` would draw: one per image, uniform in
/// `[-max_rotation, +max_rotation]`, from a SplitMix64 stream derived from
/// the spec seed.
pub fn rotation_angles(spec: &AugmentationSpec, n: usize) -> Vec<f64> {
    let mut rng = SplitMix64::new(derive(spec.seed, streams::AUGMENT));
    (0..n).map(|_| rng.range_f64(-spec.max_rotation, spec.max_rotation)).collect()
}

/// Rotation augmentation: each image is rotated by its own angle drawn from
/// the spec's seeded stream, with white fill. The same spec applied to the
/// same inputs reproduces outputs byte-for-byte.
pub fn augment(images: &[GrayImage], spec: &AugmentationSpec) -> Vec<GrayImage> {
    let angles = rotation_angles(spec, images.len());
    images.iter().zip(angles).map(|(img, a)| rotate(img, a, 255)).collect()
}
