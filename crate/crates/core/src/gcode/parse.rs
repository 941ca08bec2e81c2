//! Tolerant parser for the minimal dialect.
//!
//! Accepts anything emit produces plus reasonable hand-written variations:
//! extra whitespace, lowercase words, `;` comments, and a modal feed (an
//! F persists until changed). On emit's own output it is an exact inverse.

use crate::gcode::{GCodeCommand, GCodeError, GCodeProgram};

struct Words {
    x: Option<f64>,
    y: Option<f64>,
    z: Option<f64>,
    feed: Option<f64>,
}

fn parse_number(line_no: usize, token: &str) -> Result<f64, GCodeError> {
    let v: f64 = token[1..].parse().map_err(|_| GCodeError::NonNumeric {
        line: line_no,
        token: token.to_string(),
    })?;
    if !v.is_finite() {
        return Err(GCodeError::NonNumeric { line: line_no, token: token.to_string() });
    }
    Ok(v)
}

fn parse_words<'a>(
    line_no: usize,
    tokens: impl Iterator<Item = &'a str>,
) -> Result<Words, GCodeError> {
    let mut words = Words { x: None, y: None, z: None, feed: None };
    for token in tokens {
        let slot = match token.chars().next().map(|c| c.to_ascii_uppercase()) {
            Some('X') => &mut words.x,
            Some('Y') => &mut words.y,
            Some('Z') => &mut words.z,
            Some('F') => &mut words.feed,
            _ => {
                return Err(GCodeError::UnknownWord { line: line_no, word: token.to_string() })
            }
        };
        *slot = Some(parse_number(line_no, token)?);
    }
    Ok(words)
}

/// Parses dialect text into a program.
///
/// The `; profile: <name>` header (first line only) fills `profile_name`;
/// other `;` lines become Comment commands; comments after a command on the
/// same line are ignored. Both pen encodings are recognized regardless of
/// profile: `M5`/`M3` and Z-only `G0`/`G1` moves (`Z0` lowers, any other
/// height lifts).
pub fn parse(text: &str) -> Result<GCodeProgram, GCodeError> {
    let mut commands = Vec::new();
    let mut profile_name = String::new();
    let mut modal_feed: Option<f64> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let (body, comment) = match raw.find(';') {
            Some(pos) => (&raw[..pos], Some(&raw[pos + 1..])),
            None => (raw, None),
        };
        let body = body.trim();
        if body.is_empty() {
            if let Some(comment) = comment {
                let text = comment.strip_prefix(' ').unwrap_or(comment);
                if idx == 0 {
                    if let Some(name) = text.strip_prefix("profile: ") {
                        profile_name = name.trim().to_string();
                        continue;
                    }
                }
                commands.push(GCodeCommand::Comment(text.to_string()));
            }
            continue;
        }

        let mut tokens = body.split_whitespace();
        let head = tokens.next().expect("non-empty body has a first token");
        match head.to_ascii_uppercase().as_str() {
            "G0" | "G00" | "G1" | "G01" => {
                let is_draw = matches!(head.to_ascii_uppercase().as_str(), "G1" | "G01");
                let words = parse_words(line_no, tokens)?;
                if let Some(feed) = words.feed {
                    if feed <= 0.0 {
                        return Err(GCodeError::NonNumeric {
                            line: line_no,
                            token: format!("F{feed} (feed must be positive)"),
                        });
                    }
                    modal_feed = Some(feed);
                }
                match (words.x, words.y, words.z) {
                    (None, None, Some(z)) => {
                        commands.push(if z == 0.0 {
                            GCodeCommand::PenDown
                        } else {
                            GCodeCommand::PenUp
                        });
                    }
                    (Some(_), _, Some(_)) | (_, Some(_), Some(_)) => {
                        return Err(GCodeError::UnknownWord {
                            line: line_no,
                            word: "Z combined with X/Y".to_string(),
                        });
                    }
                    (x, y, None) => {
                        let x = x.ok_or_else(|| GCodeError::MissingCoordinate {
                            line: line_no,
                            what: "X".to_string(),
                        })?;
                        let y = y.ok_or_else(|| GCodeError::MissingCoordinate {
                            line: line_no,
                            what: "Y".to_string(),
                        })?;
                        if is_draw {
                            let feed = modal_feed.ok_or_else(|| GCodeError::MissingCoordinate {
                                line: line_no,
                                what: "F (no feed set yet)".to_string(),
                            })?;
                            commands.push(GCodeCommand::Linear { x, y, feed });
                        } else {
                            commands.push(GCodeCommand::Rapid { x, y });
                        }
                    }
                }
            }
            "M3" | "M03" => commands.push(GCodeCommand::PenDown),
            "M5" | "M05" => commands.push(GCodeCommand::PenUp),
            other => {
                return Err(GCodeError::UnknownWord { line: line_no, word: other.to_string() })
            }
        }
    }

    Ok(GCodeProgram { commands, profile_name })
}
