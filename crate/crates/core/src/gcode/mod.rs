//! Pen-plotter G-code: compile vector drawings to a minimal dialect
//! (G0/G1 moves plus pen control), render and parse the text form, and
//! simulate pen-on-paper execution to get the "robot forgery" raster back.

mod compile;
mod emit;
mod parse;
mod profile;
mod simulate;

pub use compile::compile;
pub use emit::emit;
pub use parse::parse;
pub use profile::{builtin_profile, builtin_profile_names, load_profile, DeviceProfile, PenControl};
pub use simulate::simulate;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GCodeError {
    #[error("profile `{0}`: {1}")]
    BadProfile(String, String),
    #[error("program targets profile `{expected}` but `{found}` was supplied")]
    ProfileMismatch { expected: String, found: String },
    #[error("line {line}: unsupported word `{word}`")]
    UnknownWord { line: usize, word: String },
    #[error("line {line}: missing {what}")]
    MissingCoordinate { line: usize, what: String },
    #[error("line {line}: `{token}` is not a usable number")]
    NonNumeric { line: usize, token: String },
    #[error("coordinate ({x}, {y}) mm is outside the work area")]
    OutOfWorkArea { x: f64, y: f64 },
    #[error("program violates pen discipline: {0}")]
    InvalidProgram(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One motion or pen command in the minimal dialect.
#[derive(Debug, Clone, PartialEq)]
pub enum GCodeCommand {
    /// Travel move, pen state unchanged (mm).
    Rapid { x: f64, y: f64 },
    /// Draw move at a feed rate (mm, mm/min).
    Linear { x: f64, y: f64, feed: f64 },
    PenUp,
    PenDown,
    Comment(String),
}

/// An ordered command list bound to the profile it was compiled for.
///
/// [`compile`] output always satisfies [`GCodeProgram::validate`]; [`parse`]
/// is deliberately tolerant (hand-written files need not follow the pen
/// discipline), so validate explicitly where the guarantee matters.
#[derive(Debug, Clone, PartialEq)]
pub struct GCodeProgram {
    pub commands: Vec<GCodeCommand>,
    /// Name of the device profile this program was compiled against;
    /// empty when the source text carried no profile header.
    pub profile_name: String,
}

impl GCodeProgram {
    /// Checks pen discipline: the first and last non-comment commands raise
    /// the pen, and no Linear runs before the pen state is known.
    pub fn validate(&self) -> Result<(), GCodeError> {
        let mut pen_known = false;
        let mut last_motion: Option<&GCodeCommand> = None;
        for cmd in &self.commands {
            match cmd {
                GCodeCommand::Comment(_) => continue,
                GCodeCommand::PenUp | GCodeCommand::PenDown => pen_known = true,
                GCodeCommand::Linear { .. } if !pen_known => {
                    return Err(GCodeError::InvalidProgram(
                        "Linear before any pen command".into(),
                    ));
                }
                _ => {}
            }
            if last_motion.is_none() {
                if !matches!(cmd, GCodeCommand::PenUp) {
                    return Err(GCodeError::InvalidProgram(
                        "program must begin pen-up".into(),
                    ));
                }
            }
            last_motion = Some(cmd);
        }
        match last_motion {
            None | Some(GCodeCommand::PenUp) => Ok(()),
            Some(_) => Err(GCodeError::InvalidProgram("program must end pen-up".into())),
        }
    }
}
