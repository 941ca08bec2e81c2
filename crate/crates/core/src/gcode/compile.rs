//! Drawing-to-program compilation: uniform fit into the work area.

use crate::gcode::{DeviceProfile, GCodeCommand, GCodeProgram};
use crate::vectorize::VectorDrawing;

/// Snaps to the 0.001 mm grid the text form renders, normalizing -0.0.
fn quantize(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0 + 0.0
}

/// Compiles a drawing into pen-plotter commands.
///
/// The drawing is scaled uniformly (aspect preserved) to fit the profile's
/// work area and centered; each stroke becomes pen-up travel to its first
/// point, pen-down, draw moves at `draw_feed`, pen-up. All coordinates land
/// on the 0.001 mm grid, so the program survives emit/parse unchanged. An
/// empty drawing yields just the pen-up preamble.
pub fn compile(drawing: &VectorDrawing, profile: &DeviceProfile) -> GCodeProgram {
    assert!(
        drawing.source_width >= 1 && drawing.source_height >= 1,
        "drawing source dimensions must be at least 1x1"
    );
    let (avail_w, avail_h) = profile.work_size();
    let (src_w, src_h) = (drawing.source_width as f64, drawing.source_height as f64);
    let scale = (avail_w / src_w).min(avail_h / src_h);
    let margin_x = (avail_w - scale * src_w) / 2.0;
    let margin_y = (avail_h - scale * src_h) / 2.0;

    let place = |(px, py): (f64, f64)| -> (f64, f64) {
        let x = profile.work_min.0 + margin_x + scale * px;
        let y = if profile.y_axis_inverted {
            profile.work_min.1 + margin_y + scale * (src_h - py)
        } else {
            profile.work_min.1 + margin_y + scale * py
        };
        (quantize(x), quantize(y))
    };

    let mut commands = vec![GCodeCommand::PenUp];
    for stroke in &drawing.strokes {
        let mut points = stroke.points().iter().copied().map(place);
        let (x, y) = points.next().expect("polyline has at least 2 points");
        commands.push(GCodeCommand::Rapid { x, y });
        commands.push(GCodeCommand::PenDown);
        for (x, y) in points {
            commands.push(GCodeCommand::Linear { x, y, feed: profile.draw_feed });
        }
        commands.push(GCodeCommand::PenUp);
    }

    GCodeProgram { commands, profile_name: profile.name.clone() }
}
