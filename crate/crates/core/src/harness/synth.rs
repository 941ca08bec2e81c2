//! Desk-scale synthetic signature corpus.
//!
//! Each "writer" owns a latent template: a handful of smooth strokes, each
//! a Catmull-Rom curve through random control points flowing left to right.
//! Genuine samples re-draw the writer's own template with small
//! control-point jitter (a steady hand); forged samples re-draw another
//! writer's template with larger jitter (an unpracticed copyist). The
//! jitter gap is what makes the two classes separable by a small CNN, which
//! is the property the corpus is tuned for.

use std::ops::RangeInclusive;
use std::path::Path;

use super::HarnessError;
use crate::raster::{save_pgm, stamp_polyline, BinaryImage, GrayImage};
use crate::rng::{derive, streams, SplitMix64};

/// Shape of the synthetic corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSignatureSpec {
    /// Strokes per signature template.
    pub strokes: RangeInclusive<usize>,
    /// Control points per stroke.
    pub control_points: RangeInclusive<usize>,
    /// Square canvas side in pixels.
    pub canvas: usize,
    /// Control-point jitter std-dev (px) applied when forging; genuine
    /// re-draws use [`GENUINE_JITTER_FRACTION`] of it.
    pub jitter: f64,
    pub seed: u64,
}

/// Fraction of the forgery jitter applied to genuine re-draws. Frozen after
/// tuning so that a small CNN separates the classes on a 200-image corpus.
pub const GENUINE_JITTER_FRACTION: f64 = 0.3;

impl SyntheticSignatureSpec {
    /// Desk-scale defaults: 3-5 strokes of 4-7 control points on a 128 px
    /// canvas with 2.5 px forgery jitter.
    pub fn desk_default(seed: u64) -> SyntheticSignatureSpec {
        SyntheticSignatureSpec {
            strokes: 3..=5,
            control_points: 4..=7,
            canvas: 128,
            jitter: 2.5,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::BadSpec(msg));
        if self.strokes.is_empty() || *self.strokes.start() == 0 {
            return bad(format!("stroke range {:?} is empty or starts at 0", self.strokes));
        }
        if self.control_points.is_empty() || *self.control_points.start() < 2 {
            return bad(format!(
                "control point range {:?} is empty or below 2",
                self.control_points
            ));
        }
        if self.canvas < 32 {
            return bad(format!("canvas {} below the 32 px minimum", self.canvas));
        }
        if !self.jitter.is_finite() || self.jitter < 0.0 {
            return bad(format!("jitter {} must be finite and non-negative", self.jitter));
        }
        Ok(())
    }
}

/// One writer's latent signature: control points per stroke.
struct Template {
    strokes: Vec<Vec<(f64, f64)>>,
}

fn pick(rng: &mut SplitMix64, range: &RangeInclusive<usize>) -> usize {
    range.start() + rng.below(range.end() - range.start() + 1)
}

/// Draws a fresh template: strokes flow left to right at staggered heights,
/// like initials dashed on a receipt.
fn make_template(rng: &mut SplitMix64, spec: &SyntheticSignatureSpec) -> Template {
    let side = spec.canvas as f64;
    let margin = side * 0.12;
    let n_strokes = pick(rng, &spec.strokes);
    let mut strokes = Vec::with_capacity(n_strokes);
    for s in 0..n_strokes {
        let k = pick(rng, &spec.control_points);
        // Each stroke wanders around its own horizontal band.
        let band = margin
            + (side - 2.0 * margin) * (s as f64 + 0.5 + rng.range_f64(-0.2, 0.2))
                / n_strokes as f64;
        let mut points = Vec::with_capacity(k);
        for i in 0..k {
            let x = margin
                + (side - 2.0 * margin)
                    * ((i as f64 + rng.range_f64(0.0, 0.6)) / (k as f64 - 0.4));
            let y = band + rng.range_f64(-0.22, 0.22) * side;
            points.push((x.clamp(0.0, side - 1.0), y.clamp(0.0, side - 1.0)));
        }
        strokes.push(points);
    }
    Template { strokes }
}

/// Catmull-Rom interpolation through `points` with clamped ends, sampled
/// densely enough that consecutive samples sit within ~2 px.
fn catmull_rom(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    if points.len() < 2 {
        return points.to_vec();
    }
    let at = |i: isize| -> (f64, f64) {
        points[i.clamp(0, points.len() as isize - 1) as usize]
    };
    let mut out = vec![points[0]];
    for seg in 0..points.len() - 1 {
        let p0 = at(seg as isize - 1);
        let p1 = at(seg as isize);
        let p2 = at(seg as isize + 1);
        let p3 = at(seg as isize + 2);
        let span = ((p2.0 - p1.0).powi(2) + (p2.1 - p1.1).powi(2)).sqrt();
        let steps = ((span / 2.0).ceil() as usize).max(4);
        for step in 1..=steps {
            let t = step as f64 / steps as f64;
            let t2 = t * t;
            let t3 = t2 * t;
            let interp = |a: f64, b: f64, c: f64, d: f64| -> f64 {
                0.5 * (2.0 * b
                    + (c - a) * t
                    + (2.0 * a - 5.0 * b + 4.0 * c - d) * t2
                    + (3.0 * b - a - 3.0 * c + d) * t3)
            };
            out.push((
                interp(p0.0, p1.0, p2.0, p3.0),
                interp(p0.1, p1.1, p2.1, p3.1),
            ));
        }
    }
    out
}

/// Renders a template with per-control-point Gaussian jitter.
fn render(
    template: &Template,
    rng: &mut SplitMix64,
    jitter: f64,
    canvas: usize,
) -> GrayImage {
    let side = canvas as f64;
    let mut img = BinaryImage::blank(canvas, canvas);
    let radius = (side / 96.0).max(0.8);
    for stroke in &template.strokes {
        let wobbled: Vec<(f64, f64)> = stroke
            .iter()
            .map(|&(x, y)| {
                (
                    (x + jitter * rng.normal()).clamp(0.0, side - 1.0),
                    (y + jitter * rng.normal()).clamp(0.0, side - 1.0),
                )
            })
            .collect();
        stamp_polyline(&mut img, &catmull_rom(&wobbled), radius);
    }
    img.to_gray()
}

/// Generates the corpus in memory: per writer, `per_writer.0` genuine
/// re-draws of the writer's own template and `per_writer.1` forgeries
/// (another writer's template, larger jitter). Returned as
/// (writer, image, genuine) tuples in generation order.
pub(crate) fn synth_images(
    spec: &SyntheticSignatureSpec,
    n_writers: usize,
    per_writer: (usize, usize),
) -> Result<Vec<(usize, GrayImage, bool)>, HarnessError> {
    spec.validate()?;
    if n_writers == 0 {
        return Err(HarnessError::BadSpec("need at least one writer".into()));
    }
    if n_writers == 1 && per_writer.1 > 0 {
        return Err(HarnessError::BadSpec(
            "forgeries need a second writer to copy from".into(),
        ));
    }
    let base = derive(spec.seed, streams::SYNTH);
    let templates: Vec<Template> = (0..n_writers)
        .map(|w| make_template(&mut SplitMix64::new(derive(base, w as u64)), spec))
        .collect();

    let mut out = Vec::with_capacity(n_writers * (per_writer.0 + per_writer.1));
    for w in 0..n_writers {
        // Independent stream per writer so corpus shape changes do not
        // ripple across writers.
        let mut rng = SplitMix64::new(derive(base, (n_writers + w) as u64));
        for _ in 0..per_writer.0 {
            let img = render(&templates[w], &mut rng, GENUINE_JITTER_FRACTION * spec.jitter, spec.canvas);
            out.push((w, img, true));
        }
        let victim = (w + 1) % n_writers;
        for _ in 0..per_writer.1 {
            let img = render(&templates[victim], &mut rng, spec.jitter, spec.canvas);
            out.push((w, img, false));
        }
    }
    Ok(out)
}

/// Writes a synthetic corpus to `root` in the dataset layout: PGM images
/// under `genuine/` and `forged/`, plus a `dataset.tsv` manifest.
/// Deterministic: the same spec writes byte-identical files.
pub fn synth_corpus(
    spec: &SyntheticSignatureSpec,
    n_writers: usize,
    per_writer: (usize, usize),
    root: &Path,
) -> Result<usize, HarnessError> {
    let images = synth_images(spec, n_writers, per_writer)?;
    std::fs::create_dir_all(root.join("genuine"))?;
    std::fs::create_dir_all(root.join("forged"))?;

    let mut manifest = String::new();
    let mut counters = vec![(0usize, 0usize); n_writers];
    for (w, img, genuine) in &images {
        let rel = if *genuine {
            let i = counters[*w].0;
            counters[*w].0 += 1;
            format!("genuine/w{w:03}_g{i:03}.pgm")
        } else {
            let i = counters[*w].1;
            counters[*w].1 += 1;
            format!("forged/w{w:03}_f{i:03}.pgm")
        };
        std::fs::write(root.join(&rel), save_pgm(img))?;
        manifest.push_str(&rel);
        manifest.push('\t');
        manifest.push_str(if *genuine { "genuine" } else { "forged" });
        manifest.push('\n');
    }
    std::fs::write(root.join("dataset.tsv"), manifest)?;
    Ok(images.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{load_dataset, Label};

    #[test]
    fn spec_validation_catches_nonsense() {
        let good = SyntheticSignatureSpec::desk_default(1);
        good.validate().unwrap();
        #[allow(clippy::reversed_empty_ranges)]
        let empty_strokes = SyntheticSignatureSpec { strokes: 3..=2, ..good.clone() };
        assert!(empty_strokes.validate().is_err());
        let zero_strokes = SyntheticSignatureSpec { strokes: 0..=2, ..good.clone() };
        assert!(zero_strokes.validate().is_err());
        let one_point = SyntheticSignatureSpec { control_points: 1..=3, ..good.clone() };
        assert!(one_point.validate().is_err());
        let tiny = SyntheticSignatureSpec { canvas: 16, ..good.clone() };
        assert!(tiny.validate().is_err());
        let bad_jitter = SyntheticSignatureSpec { jitter: f64::NAN, ..good };
        assert!(bad_jitter.validate().is_err());
    }

    #[test]
    fn counts_and_labels_come_out_right() {
        let spec = SyntheticSignatureSpec { canvas: 64, ..SyntheticSignatureSpec::desk_default(7) };
        let dir = tempfile::tempdir().unwrap();
        let n = synth_corpus(&spec, 5, (4, 4), dir.path()).unwrap();
        assert_eq!(n, 40);
        let entries = load_dataset(dir.path()).unwrap();
        assert_eq!(entries.len(), 40);
        let genuine = entries.iter().filter(|e| e.label == Label::Genuine).count();
        assert_eq!(genuine, 20);
        assert!(entries.iter().all(|e| e.image.width() == 64 && e.image.height() == 64));
        // Signatures have ink but are not ink-flooded.
        for e in &entries {
            let ink = e.image.pixels().iter().filter(|&&p| p < 128).count();
            let area = 64 * 64;
            assert!(ink > area / 100, "{} nearly blank", e.path.display());
            assert!(ink < area / 2, "{} nearly solid", e.path.display());
        }
    }

    #[test]
    fn same_seed_is_byte_identical_and_seeds_differ() {
        let spec = SyntheticSignatureSpec { canvas: 64, ..SyntheticSignatureSpec::desk_default(9) };
        let a = synth_images(&spec, 3, (2, 2)).unwrap();
        let b = synth_images(&spec, 3, (2, 2)).unwrap();
        assert_eq!(a.len(), b.len());
        for ((_, x, _), (_, y, _)) in a.iter().zip(&b) {
            assert_eq!(x.pixels(), y.pixels());
        }
        let other_spec =
            SyntheticSignatureSpec { seed: 10, ..spec };
        let c = synth_images(&other_spec, 3, (2, 2)).unwrap();
        assert!(a.iter().zip(&c).any(|((_, x, _), (_, y, _))| x.pixels() != y.pixels()));
    }

    #[test]
    fn degenerate_requests_are_rejected() {
        let spec = SyntheticSignatureSpec::desk_default(3);
        assert!(synth_images(&spec, 0, (1, 1)).is_err());
        assert!(synth_images(&spec, 1, (1, 1)).is_err());
        // A single writer with no forgeries is fine.
        assert!(synth_images(&spec, 1, (2, 0)).is_ok());
    }

    #[test]
    fn catmull_rom_passes_through_control_points() {
        let pts = vec![(0.0, 0.0), (10.0, 5.0), (20.0, 0.0), (30.0, 8.0)];
        let curve = catmull_rom(&pts);
        for p in &pts {
            let hit = curve
                .iter()
                .any(|q| (q.0 - p.0).abs() < 1e-9 && (q.1 - p.1).abs() < 1e-9);
            assert!(hit, "control point {p:?} not on curve");
        }
        // Samples are dense: consecutive points within ~2.5 px.
        for pair in curve.windows(2) {
            let d = ((pair[1].0 - pair[0].0).powi(2) + (pair[1].1 - pair[0].1).powi(2)).sqrt();
            assert!(d < 2.5, "gap {d}");
        }
    }
}
