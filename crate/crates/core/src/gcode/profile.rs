//! Device profiles: flat `key = value` descriptions of a pen plotter.
//!
//! Two profiles ship with the workbench (see `profiles/` in the repository
//! root): `lineus`, a Line-us-class arm that lifts the pen with a Z move,
//! and `idraw2`, a GRBL-class XY plotter that toggles the pen with M3/M5.
//! Their work areas and feeds are plausible documented defaults, not
//! manufacturer data.

use std::path::Path;

use crate::gcode::GCodeError;
use crate::kv::KvFile;

/// How the device raises and lowers its pen.
#[derive(Debug, Clone, PartialEq)]
pub enum PenControl {
    /// `G0 Z<height>` lifts, `G0 Z0` lowers.
    ZLift { height: f64 },
    /// `M5` lifts, `M3` lowers.
    SpindleToggle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceProfile {
    pub name: String,
    pub work_min: (f64, f64),
    pub work_max: (f64, f64),
    pub pen_control: PenControl,
    pub travel_feed: f64,
    pub draw_feed: f64,
    pub pen_width: f64,
    /// True when the machine's y axis points up, opposite to image rows.
    pub y_axis_inverted: bool,
}

const LINEUS: &str = include_str!("../../../../profiles/lineus.profile");
const IDRAW2: &str = include_str!("../../../../profiles/idraw2.profile");

/// Names of the profiles compiled into the binary.
pub fn builtin_profile_names() -> &'static [&'static str] {
    &["lineus", "idraw2"]
}

/// Fetches a built-in profile by name (with or without `.profile`).
pub fn builtin_profile(name: &str) -> Option<DeviceProfile> {
    let stem = name.strip_suffix(".profile").unwrap_or(name);
    let text = match stem {
        "lineus" => LINEUS,
        "idraw2" => IDRAW2,
        _ => return None,
    };
    Some(DeviceProfile::from_kv_text(text).expect("built-in profile must parse"))
}

/// Loads a profile from a file path, falling back to a built-in profile of
/// that name when no such file exists.
pub fn load_profile(path: &Path) -> Result<DeviceProfile, GCodeError> {
    if !path.exists() {
        if let Some(profile) = path.to_str().and_then(builtin_profile) {
            return Ok(profile);
        }
    }
    let text = std::fs::read_to_string(path)?;
    DeviceProfile::from_kv_text(&text)
}

/// True when `v` sits exactly on the 0.001 grid the text form can render.
fn on_millis_grid(v: f64) -> bool {
    (v * 1000.0).round() == v * 1000.0
}

impl DeviceProfile {
    pub fn from_kv_text(text: &str) -> Result<Self, GCodeError> {
        let name_hint = KvFile::parse(text)
            .ok()
            .and_then(|kv| kv.get("name").map(str::to_string))
            .unwrap_or_else(|| "<unnamed>".to_string());
        let bad = |msg: String| GCodeError::BadProfile(name_hint.clone(), msg);

        let kv = KvFile::parse(text).map_err(|e| bad(e.to_string()))?;
        let req_f64 = |key: &str| -> Result<f64, GCodeError> {
            kv.require(key)
                .and_then(|_| kv.get_f64(key).map(|v| v.expect("checked by require")))
                .map_err(|e| bad(e.to_string()))
        };

        let name = kv.require("name").map_err(|e| bad(e.to_string()))?.to_string();
        let work_min = (req_f64("work_min_x")?, req_f64("work_min_y")?);
        let work_max = (req_f64("work_max_x")?, req_f64("work_max_y")?);
        let pen_control = match kv.require("pen_mode").map_err(|e| bad(e.to_string()))? {
            "z_lift" => PenControl::ZLift { height: req_f64("pen_lift_height")? },
            "spindle_toggle" => PenControl::SpindleToggle,
            other => {
                return Err(bad(format!(
                    "pen_mode must be `z_lift` or `spindle_toggle`, got `{other}`"
                )))
            }
        };
        let profile = DeviceProfile {
            name,
            work_min,
            work_max,
            pen_control,
            travel_feed: req_f64("travel_feed")?,
            draw_feed: req_f64("draw_feed")?,
            pen_width: req_f64("pen_width")?,
            y_axis_inverted: kv
                .get_bool("y_axis_inverted")
                .map_err(|e| bad(e.to_string()))?
                .unwrap_or(false),
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<(), GCodeError> {
        let bad = |msg: String| Err(GCodeError::BadProfile(self.name.clone(), msg));
        if !(self.work_min.0 < self.work_max.0 && self.work_min.1 < self.work_max.1) {
            return bad("work_min must be strictly below work_max on both axes".into());
        }
        if self.travel_feed <= 0.0 || self.draw_feed <= 0.0 {
            return bad("feeds must be positive".into());
        }
        if self.pen_width <= 0.0 {
            return bad("pen_width must be positive".into());
        }
        // The text form renders 3 decimals, so anything that flows into a
        // program must already live on that grid or round trips would drift.
        let gridded = [
            ("work_min_x", self.work_min.0),
            ("work_min_y", self.work_min.1),
            ("work_max_x", self.work_max.0),
            ("work_max_y", self.work_max.1),
            ("draw_feed", self.draw_feed),
            ("travel_feed", self.travel_feed),
        ];
        for (key, v) in gridded {
            if !v.is_finite() || !on_millis_grid(v) {
                return bad(format!("{key} = {v} is not on the 0.001 mm grid"));
            }
        }
        if let PenControl::ZLift { height } = self.pen_control {
            if !(height > 0.0) || !on_millis_grid(height) {
                return bad(format!("pen_lift_height = {height} must be positive on the 0.001 mm grid"));
            }
        }
        Ok(())
    }

    /// Work-area width and height in mm.
    pub fn work_size(&self) -> (f64, f64) {
        (self.work_max.0 - self.work_min.0, self.work_max.1 - self.work_min.1)
    }
}
