//! Line-based text serialization for vector drawings.
//!
//! One stroke per line, points as `x,y` pairs separated by spaces with three
//! decimal places. `#` starts a comment; the `# source: <width> <height>`
//! header records the raster dimensions the coordinates live in and is
//! written (and consumed) by this module.

use std::fmt::Write as _;
use std::path::Path;

use crate::vectorize::{Polyline, VectorDrawing, VectorizeError};

/// Renders a drawing to its text form.
pub fn drawing_to_text(drawing: &VectorDrawing) -> String {
    let mut out = String::new();
    writeln!(out, "# source: {} {}", drawing.source_width, drawing.source_height).unwrap();
    for stroke in &drawing.strokes {
        let mut first = true;
        for &(x, y) in stroke.points() {
            if !first {
                out.push(' ');
            }
            write!(out, "{x:.3},{y:.3}").unwrap();
            first = false;
        }
        out.push('\n');
    }
    out
}

/// Parses the text form back into a drawing.
///
/// A missing `# source:` header falls back to the smallest integer box
/// containing every point.
pub fn drawing_from_text(text: &str) -> Result<VectorDrawing, VectorizeError> {
    let mut source: Option<(usize, usize)> = None;
    let mut strokes = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(dims) = rest.strip_prefix("source:") {
                source = Some(parse_dims(dims, line_no)?);
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut points = Vec::new();
        for token in line.split_whitespace() {
            let (xs, ys) = token.split_once(',').ok_or_else(|| {
                VectorizeError::MalformedDrawing {
                    line: line_no,
                    msg: format!("expected `x,y`, got `{token}`"),
                }
            })?;
            let x = parse_coord(xs, line_no)?;
            let y = parse_coord(ys, line_no)?;
            points.push((x, y));
        }
        if points.len() < 2 {
            return Err(VectorizeError::MalformedDrawing {
                line: line_no,
                msg: format!("stroke has {} point(s), need at least 2", points.len()),
            });
        }
        if points.windows(2).any(|w| w[0] == w[1]) {
            return Err(VectorizeError::MalformedDrawing {
                line: line_no,
                msg: "consecutive duplicate point".into(),
            });
        }
        strokes.push(points);
    }

    let (width, height) = source.unwrap_or_else(|| {
        let mut w = 0f64;
        let mut h = 0f64;
        for stroke in &strokes {
            for &(x, y) in stroke {
                w = w.max(x);
                h = h.max(y);
            }
        }
        (w.ceil() as usize, h.ceil() as usize)
    });

    for (i, stroke) in strokes.iter().enumerate() {
        for &(x, y) in stroke {
            if x < 0.0 || y < 0.0 || x > width as f64 || y > height as f64 {
                return Err(VectorizeError::MalformedDrawing {
                    line: 0,
                    msg: format!(
                        "stroke {i} point ({x},{y}) outside source bounds {width}x{height}"
                    ),
                });
            }
        }
    }

    let strokes = strokes.into_iter().map(Polyline::new).collect();
    Ok(VectorDrawing::new(strokes, width, height))
}

pub fn save_drawing(drawing: &VectorDrawing, path: &Path) -> Result<(), VectorizeError> {
    std::fs::write(path, drawing_to_text(drawing))?;
    Ok(())
}

pub fn load_drawing(path: &Path) -> Result<VectorDrawing, VectorizeError> {
    let text = std::fs::read_to_string(path)?;
    drawing_from_text(&text)
}

fn parse_dims(s: &str, line: usize) -> Result<(usize, usize), VectorizeError> {
    let mut it = s.split_whitespace();
    let parse = |tok: Option<&str>| -> Result<usize, VectorizeError> {
        tok.and_then(|t| t.parse().ok()).ok_or_else(|| VectorizeError::MalformedDrawing {
            line,
            msg: format!("bad source header `{s}`"),
        })
    };
    let w = parse(it.next())?;
    let h = parse(it.next())?;
    if it.next().is_some() {
        return Err(VectorizeError::MalformedDrawing {
            line,
            msg: format!("bad source header `{s}`"),
        });
    }
    Ok((w, h))
}

fn parse_coord(s: &str, line: usize) -> Result<f64, VectorizeError> {
    let v: f64 = s.parse().map_err(|_| VectorizeError::MalformedDrawing {
        line,
        msg: format!("bad coordinate `{s}`"),
    })?;
    if !v.is_finite() {
        return Err(VectorizeError::MalformedDrawing {
            line,
            msg: format!("non-finite coordinate `{s}`"),
        });
    }
    Ok(v)
}
