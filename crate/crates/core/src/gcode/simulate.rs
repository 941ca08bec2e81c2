//! Pen-on-paper execution: turns a program back into a raster, standing in
//! for the physical plotter photographed after the fact.

use crate::gcode::{DeviceProfile, GCodeCommand, GCodeError, GCodeProgram};
use crate::raster::{stamp_segment, BinaryImage, Disc};

/// Executes a program on a white canvas spanning the profile's work area.
///
/// Resolution is `dpi` dots per inch. Pen starts up at `work_min`; every
/// Linear executed while the pen is down stamps a Bresenham line dilated by
/// a disc of radius `pen_width / 2` (in pixels); Rapid and pen-up moves
/// leave no ink. Coordinates beyond the work area (with a 1e-6 mm slack)
/// abort with [`GCodeError::OutOfWorkArea`].
pub fn simulate(
    program: &GCodeProgram,
    profile: &DeviceProfile,
    dpi: f64,
) -> Result<BinaryImage, GCodeError> {
    assert!(dpi > 0.0 && dpi.is_finite(), "dpi must be positive");
    let ppm = dpi / 25.4;
    let (avail_w, avail_h) = profile.work_size();
    let width = ((avail_w * ppm).round() as usize).max(1);
    let height = ((avail_h * ppm).round() as usize).max(1);
    let mut canvas = BinaryImage::blank(width, height);

    let cell = |x: f64, y: f64| -> (i64, i64) {
        let col = ((x - profile.work_min.0) * ppm).floor() as i64;
        let row = if profile.y_axis_inverted {
            ((profile.work_max.1 - y) * ppm).floor() as i64
        } else {
            ((y - profile.work_min.1) * ppm).floor() as i64
        };
        (col.clamp(0, width as i64 - 1), row.clamp(0, height as i64 - 1))
    };
    let check = |x: f64, y: f64| -> Result<(), GCodeError> {
        let eps = 1e-6;
        if x < profile.work_min.0 - eps
            || x > profile.work_max.0 + eps
            || y < profile.work_min.1 - eps
            || y > profile.work_max.1 + eps
        {
            return Err(GCodeError::OutOfWorkArea { x, y });
        }
        Ok(())
    };

    let disc = Disc::new(profile.pen_width / 2.0 * ppm);
    let mut pos = profile.work_min;
    let mut pen_down = false;
    for cmd in &program.commands {
        match *cmd {
            GCodeCommand::Rapid { x, y } => {
                check(x, y)?;
                pos = (x, y);
            }
            GCodeCommand::Linear { x, y, .. } => {
                check(x, y)?;
                if pen_down {
                    stamp_segment(&mut canvas, cell(pos.0, pos.1), cell(x, y), &disc);
                }
                pos = (x, y);
            }
            GCodeCommand::PenUp => pen_down = false,
            GCodeCommand::PenDown => pen_down = true,
            GCodeCommand::Comment(_) => {}
        }
    }
    Ok(canvas)
}
