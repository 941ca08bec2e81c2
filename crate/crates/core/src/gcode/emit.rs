//! Text rendering of programs: the dialect real plotters consume.

use std::fmt::Write as _;

use crate::gcode::{DeviceProfile, GCodeCommand, GCodeError, GCodeProgram, PenControl};

/// Renders `v` with up to 3 decimals, trailing zeros trimmed (`5` not
/// `5.000`). Used for Z heights and feeds.
fn trimmed(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// Renders a program to its bit-exact text form.
///
/// `G0 X.. Y..` travels, `G1 X.. Y.. F..` draws, pen control renders per
/// the profile (`G0 Z<h>`/`G0 Z0` for a z-lift pen, `M5`/`M3` for a spindle
/// toggle). Coordinates carry exactly 3 decimals; lines end with LF; the
/// first line is a `; profile: <name>` header.
pub fn emit(program: &GCodeProgram, profile: &DeviceProfile) -> Result<String, GCodeError> {
    if !program.profile_name.is_empty() && program.profile_name != profile.name {
        return Err(GCodeError::ProfileMismatch {
            expected: program.profile_name.clone(),
            found: profile.name.clone(),
        });
    }
    let (up, down) = match profile.pen_control {
        PenControl::ZLift { height } => (format!("G0 Z{}", trimmed(height)), "G0 Z0".to_string()),
        PenControl::SpindleToggle => ("M5".to_string(), "M3".to_string()),
    };
    let mut out = String::new();
    writeln!(out, "; profile: {}", profile.name).unwrap();
    for cmd in &program.commands {
        match cmd {
            GCodeCommand::Rapid { x, y } => writeln!(out, "G0 X{x:.3} Y{y:.3}").unwrap(),
            GCodeCommand::Linear { x, y, feed } => {
                writeln!(out, "G1 X{x:.3} Y{y:.3} F{}", trimmed(*feed)).unwrap()
            }
            GCodeCommand::PenUp => writeln!(out, "{up}").unwrap(),
            GCodeCommand::PenDown => writeln!(out, "{down}").unwrap(),
            GCodeCommand::Comment(text) => writeln!(out, "; {text}").unwrap(),
        }
    }
    Ok(out)
}
