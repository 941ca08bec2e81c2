//! Pen-stroke rasterization: Bresenham lines dilated by a disc, shared by
//! the plotter simulator and the synthetic corpus generator.

use super::BinaryImage;

/// Disc footprint of a pen nib, as integer offsets with
/// `dx^2 + dy^2 <= radius^2`. A radius below 1 stamps a single pixel.
#[derive(Debug, Clone)]
pub struct Disc {
    offsets: Vec<(i32, i32)>,
}

impl Disc {
    pub fn new(radius: f64) -> Self {
        let r = radius.max(0.0);
        let ri = r.floor() as i32;
        let r2 = r * r;
        let mut offsets = Vec::new();
        for dy in -ri..=ri {
            for dx in -ri..=ri {
                if (dx * dx + dy * dy) as f64 <= r2 {
                    offsets.push((dx, dy));
                }
            }
        }
        if offsets.is_empty() {
            offsets.push((0, 0));
        }
        Disc { offsets }
    }

    fn stamp(&self, img: &mut BinaryImage, x: i64, y: i64) {
        for &(dx, dy) in &self.offsets {
            let px = x + dx as i64;
            let py = y + dy as i64;
            if px >= 0 && py >= 0 && (px as usize) < img.width() && (py as usize) < img.height() {
                img.set(px as usize, py as usize, true);
            }
        }
    }
}

/// Stamp the Bresenham line between two cells, dilated by `disc`.
pub fn stamp_segment(img: &mut BinaryImage, from: (i64, i64), to: (i64, i64), disc: &Disc) {
    let (mut x, mut y) = from;
    let (x1, y1) = to;
    let dx = (x1 - x).abs();
    let dy = -(y1 - y).abs();
    let sx = if x < x1 { 1 } else { -1 };
    let sy = if y < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        disc.stamp(img, x, y);
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Stamp a polyline given in pixel coordinates; each vertex is rounded to
/// its nearest cell first.
pub fn stamp_polyline(img: &mut BinaryImage, points: &[(f64, f64)], radius: f64) {
    let disc = Disc::new(radius);
    let cells: Vec<(i64, i64)> =
        points.iter().map(|&(x, y)| (x.round() as i64, y.round() as i64)).collect();
    match cells.len() {
        0 => {}
        1 => disc.stamp(img, cells[0].0, cells[0].1),
        _ => {
            for pair in cells.windows(2) {
                stamp_segment(img, pair[0], pair[1], &disc);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizontal_segment_no_dilation() {
        let mut img = BinaryImage::blank(8, 3);
        stamp_segment(&mut img, (1, 1), (6, 1), &Disc::new(0.0));
        for x in 0..8 {
            assert_eq!(img.get(x, 1), (1..=6).contains(&x), "x={x}");
            assert!(!img.get(x, 0) && !img.get(x, 2));
        }
    }

    #[test]
    fn disc_radius_one_is_plus_shape() {
        let disc = Disc::new(1.0);
        let mut img = BinaryImage::blank(5, 5);
        disc.stamp(&mut img, 2, 2);
        let expected = [(2, 2), (1, 2), (3, 2), (2, 1), (2, 3)];
        let mut count = 0;
        for y in 0..5 {
            for x in 0..5 {
                if img.get(x, y) {
                    count += 1;
                    assert!(expected.contains(&(x, y)), "unexpected ink at ({x},{y})");
                }
            }
        }
        assert_eq!(count, expected.len());
    }

    #[test]
    fn stamping_clips_at_borders() {
        let mut img = BinaryImage::blank(4, 4);
        stamp_polyline(&mut img, &[(-2.0, 0.0), (5.0, 0.0)], 1.5);
        assert!(img.ink_count() > 0);
    }
}
