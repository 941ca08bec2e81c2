//! Robot-style forgeries: re-draw a genuine signature through the plotter
//! toolchain and bring the simulated page back to signature resolution.
//!
//! The chain is the full physical loop: binarize, thin to a centerline,
//! trace to strokes, simplify, compile to the device profile, simulate the
//! pen, then map the simulated page back into the source pixel grid. What
//! comes out is the same signature with plotter artifacts: quantized
//! coordinates, uniform pen width, lost pressure detail.

use super::{stage, HarnessError};
use crate::gcode::{compile, simulate, DeviceProfile};
use crate::raster::{binarize_otsu, resize_bilinear, BinaryImage, GrayImage};
use crate::vectorize::{extract_polylines, simplify_drawing, thin};
use crate::verify::Sample;

/// Polyline simplification tolerance (px) applied before compilation.
const SIMPLIFY_EPSILON: f64 = 0.75;

/// Converts a grayscale signature to a verifier sample: bilinear resize to
/// the model input side, bytes mapped to ink intensity in `[0, 1]`
/// (dark = 1).
pub fn gray_to_sample(img: &GrayImage, input_size: usize, genuine: bool) -> Sample {
    let resized = if img.width() == input_size && img.height() == input_size {
        img.clone()
    } else {
        resize_bilinear(img, input_size)
    };
    let pixels = resized.pixels().iter().map(|&b| 1.0 - b as f64 / 255.0).collect();
    Sample::new(pixels, genuine)
}

/// Maps a simulated page (work-area raster at `dpi`) back into the source
/// pixel grid by inverting the compiler's centered uniform fit: every ink
/// pixel of the page scatters into the source cell it came from.
pub(crate) fn rasterize_back(
    page: &BinaryImage,
    profile: &DeviceProfile,
    dpi: f64,
    source_width: usize,
    source_height: usize,
) -> BinaryImage {
    let ppm = dpi / 25.4;
    let (avail_w, avail_h) = profile.work_size();
    let (src_w, src_h) = (source_width as f64, source_height as f64);
    let scale = (avail_w / src_w).min(avail_h / src_h);
    let margin_x = (avail_w - scale * src_w) / 2.0;
    let margin_y = (avail_h - scale * src_h) / 2.0;

    let mut out = BinaryImage::blank(source_width, source_height);
    for row in 0..page.height() {
        for col in 0..page.width() {
            if !page.get(col, row) {
                continue;
            }
            let px = ((col as f64 + 0.5) / ppm - margin_x) / scale;
            let py = ((row as f64 + 0.5) / ppm - margin_y) / scale;
            let x = px.floor().clamp(0.0, src_w - 1.0) as usize;
            let y = py.floor().clamp(0.0, src_h - 1.0) as usize;
            out.set(x, y, true);
        }
    }
    out
}

/// Re-draws a signature with a pen plotter: trace the centerline, compile
/// for the device, simulate the pen at `dpi`, and return the re-drawn
/// signature at the source resolution. A blank source yields a blank page.
pub fn robot_forge(
    source: &GrayImage,
    profile: &DeviceProfile,
    dpi: f64,
) -> Result<GrayImage, HarnessError> {
    let skeleton = thin(&binarize_otsu(source));
    let drawing = simplify_drawing(&extract_polylines(&skeleton), SIMPLIFY_EPSILON);
    let program = compile(&drawing, profile);
    let page = simulate(&program, profile, dpi).map_err(|e| stage("simulate", e))?;
    Ok(rasterize_back(&page, profile, dpi, source.width(), source.height()).to_gray())
}

/// Mean symmetric point distance between two point sets: average of the
/// mean nearest-neighbor distance from `a` to `b` and from `b` to `a`.
/// Infinite when exactly one side is empty, zero when both are.
pub fn symmetric_point_distance(a: &[(usize, usize)], b: &[(usize, usize)]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return f64::INFINITY,
        _ => {}
    }
    let one_way = |from: &[(usize, usize)], to: &[(usize, usize)]| -> f64 {
        let total: f64 = from
            .iter()
            .map(|&(x, y)| {
                to.iter()
                    .map(|&(u, v)| {
                        let dx = x as f64 - u as f64;
                        let dy = y as f64 - v as f64;
                        dx * dx + dy * dy
                    })
                    .fold(f64::INFINITY, f64::min)
                    .sqrt()
            })
            .sum();
        total / from.len() as f64
    };
    0.5 * (one_way(a, b) + one_way(b, a))
}
