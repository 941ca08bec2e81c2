//! PGM (P2/P5) codec and PNG ingestion.
//!
//! PGM is parsed natively. PNG goes through the `image` crate's decoder and
//! is then reduced to 8-bit gray here: color uses the integer luminance
//! `(r*299 + g*587 + b*114) / 1000`, 16-bit samples keep their high byte.

use super::{GrayImage, RasterError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Png,
}

impl ImageFormat {
    /// Guess from a file extension (case-insensitive).
    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext.to_ascii_lowercase().as_str() {
            "pgm" => Some(ImageFormat::Pgm),
            "png" => Some(ImageFormat::Png),
            _ => None,
        }
    }
}

/// Decode an image. `format_hint` picks the codec; the PGM magic is still
/// verified against the payload.
pub fn load_image(bytes: &[u8], format_hint: ImageFormat) -> Result<GrayImage, RasterError> {
    if bytes.is_empty() {
        return Err(RasterError::MalformedHeader("empty input".into()));
    }
    match format_hint {
        ImageFormat::Pgm => load_pgm(bytes),
        ImageFormat::Png => load_png(bytes),
    }
}

/// Encode as binary (P5) PGM with maxval 255.
pub fn save_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}

fn load_png(bytes: &[u8]) -> Result<GrayImage, RasterError> {
    use image::DynamicImage;

    let decoded = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| RasterError::PngDecode(e.to_string()))?;
    let (width, height) = (decoded.width() as usize, decoded.height() as usize);
    if width == 0 || height == 0 {
        return Err(RasterError::MalformedHeader("zero-sized png".into()));
    }
    let pixels: Vec<u8> = match decoded {
        DynamicImage::ImageLuma8(img) => img.into_raw(),
        DynamicImage::ImageLumaA8(img) => img.pixels().map(|p| p.0[0]).collect(),
        DynamicImage::ImageLuma16(img) => img.pixels().map(|p| (p.0[0] >> 8) as u8).collect(),
        DynamicImage::ImageLumaA16(img) => img.pixels().map(|p| (p.0[0] >> 8) as u8).collect(),
        DynamicImage::ImageRgb8(img) => img.pixels().map(|p| luminance(p.0[0], p.0[1], p.0[2])).collect(),
        DynamicImage::ImageRgba8(img) => img.pixels().map(|p| luminance(p.0[0], p.0[1], p.0[2])).collect(),
        DynamicImage::ImageRgb16(img) => img
            .pixels()
            .map(|p| luminance((p.0[0] >> 8) as u8, (p.0[1] >> 8) as u8, (p.0[2] >> 8) as u8))
            .collect(),
        DynamicImage::ImageRgba16(img) => img
            .pixels()
            .map(|p| luminance((p.0[0] >> 8) as u8, (p.0[1] >> 8) as u8, (p.0[2] >> 8) as u8))
            .collect(),
        other => {
            let rgb = other.to_rgb8();
            rgb.pixels().map(|p| luminance(p.0[0], p.0[1], p.0[2])).collect()
        }
    };
    Ok(GrayImage::new(width, height, pixels))
}

#[inline]
fn luminance(r: u8, g: u8, b: u8) -> u8 {
    ((r as u32 * 299 + g as u32 * 587 + b as u32 * 114) / 1000) as u8
}

fn load_pgm(bytes: &[u8]) -> Result<GrayImage, RasterError> {
    let mut cursor = PgmCursor::new(bytes);
    let magic = cursor.token()?;
    let ascii = match magic.as_str() {
        "P5" => false,
        "P2" => true,
        other => {
            return Err(RasterError::MalformedHeader(format!(
                "bad magic `{other}`, expected P2 or P5"
            )))
        }
    };
    let width = cursor.number()? as usize;
    let height = cursor.number()? as usize;
    let maxval = cursor.number()?;
    if width == 0 || height == 0 {
        return Err(RasterError::MalformedHeader("zero dimension".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(RasterError::MalformedHeader(format!("maxval {maxval} out of range")));
    }
    let expected = width * height;
    let pixels = if ascii {
        let mut pixels = Vec::with_capacity(expected);
        for _ in 0..expected {
            let v = match cursor.number() {
                Ok(v) => v,
                Err(RasterError::MalformedHeader(_)) => {
                    return Err(RasterError::TruncatedPayload { expected, found: pixels.len() })
                }
                Err(e) => return Err(e),
            };
            pixels.push(sample_to_u8(v, maxval));
        }
        pixels
    } else {
        // One whitespace byte separates the header from the raster.
        cursor.skip_single_whitespace()?;
        let bytes_per_sample = if maxval > 255 { 2 } else { 1 };
        let raw = cursor.rest();
        if raw.len() < expected * bytes_per_sample {
            return Err(RasterError::TruncatedPayload {
                expected,
                found: raw.len() / bytes_per_sample,
            });
        }
        if bytes_per_sample == 1 {
            raw[..expected].to_vec()
        } else {
            // Big-endian 16-bit; the high byte is the first of the pair.
            raw.chunks_exact(2).take(expected).map(|c| c[0]).collect()
        }
    };
    Ok(GrayImage::new(width, height, pixels))
}

fn sample_to_u8(v: u32, maxval: u32) -> u8 {
    if maxval > 255 {
        (v >> 8).min(255) as u8
    } else {
        v.min(255) as u8
    }
}

/// Header scanner: whitespace-separated tokens, `#` comments run to EOL.
struct PgmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PgmCursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        PgmCursor { bytes, pos: 0 }
    }

    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<String, RasterError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(RasterError::MalformedHeader("unexpected end of header".into()));
        }
        String::from_utf8(self.bytes[start..self.pos].to_vec())
            .map_err(|_| RasterError::MalformedHeader("non-ascii header token".into()))
    }

    fn number(&mut self) -> Result<u32, RasterError> {
        let tok = self.token()?;
        tok.parse::<u32>()
            .map_err(|_| RasterError::MalformedHeader(format!("expected number, got `{tok}`")))
    }

    fn skip_single_whitespace(&mut self) -> Result<(), RasterError> {
        if self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
            Ok(())
        } else {
            Err(RasterError::MalformedHeader("missing separator before raster".into()))
        }
    }

    fn rest(&self) -> &'a [u8] {
        &self.bytes[self.pos..]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_p5() {
        let bytes = b"P5 1 1 255 \x00";
        let img = load_image(bytes, ImageFormat::Pgm).unwrap();
        assert_eq!((img.width(), img.height()), (1, 1));
        assert_eq!(img.pixels(), &[0]);
    }

    #[test]
    fn bad_magic() {
        let err = load_image(b"Q5 1 1 255 \x00", ImageFormat::Pgm).unwrap_err();
        assert!(matches!(err, RasterError::MalformedHeader(_)), "{err:?}");
    }

    // Hand-decoded per the plain-PGM text rules: tokens are whitespace
    // separated, row-major.
    #[test]
    fn ascii_p2() {
        let bytes = b"P2\n2 2\n255\n0 85\n170 255\n";
        let img = load_image(bytes, ImageFormat::Pgm).unwrap();
        assert_eq!(img.pixels(), &[0, 85, 170, 255]);
    }

    #[test]
    fn truncated_p5() {
        let err = load_image(b"P5 2 2 255 \x00\x01", ImageFormat::Pgm).unwrap_err();
        assert!(matches!(err, RasterError::TruncatedPayload { expected: 4, found: 2 }), "{err:?}");
    }

    #[test]
    fn truncated_p2() {
        let err = load_image(b"P2 2 2 255 0 1", ImageFormat::Pgm).unwrap_err();
        assert!(matches!(err, RasterError::TruncatedPayload { expected: 4, found: 2 }), "{err:?}");
    }

    #[test]
    fn sixteen_bit_p5_keeps_high_byte() {
        // maxval 65535, one sample 0xABCD (big-endian) -> 0xAB.
        let bytes = b"P5 1 1 65535 \xAB\xCD";
        let img = load_image(bytes, ImageFormat::Pgm).unwrap();
        assert_eq!(img.pixels(), &[0xAB]);
    }

    #[test]
    fn p5_round_trip_is_byte_exact() {
        let img = GrayImage::new(3, 2, vec![0, 10, 20, 200, 254, 255]);
        let bytes = save_pgm(&img);
        let back = load_image(&bytes, ImageFormat::Pgm).unwrap();
        assert_eq!(back, img);
        assert_eq!(save_pgm(&back), bytes);
    }

    #[test]
    fn comments_in_header() {
        let bytes = b"P5 # magic\n# a comment\n2 1 255\n\x05\x06";
        let img = load_image(bytes, ImageFormat::Pgm).unwrap();
        assert_eq!(img.pixels(), &[5, 6]);
    }

    #[test]
    fn png_gray_round_trip() {
        // Encode a tiny PNG with the image crate, decode through our path.
        let mut buf = std::io::Cursor::new(Vec::new());
        let img = image::GrayImage::from_raw(2, 2, vec![0u8, 85, 170, 255]).unwrap();
        image::DynamicImage::ImageLuma8(img)
            .write_to(&mut buf, image::ImageFormat::Png)
            .unwrap();
        let gray = load_image(buf.get_ref(), ImageFormat::Png).unwrap();
        assert_eq!(gray.pixels(), &[0, 85, 170, 255]);
    }

    #[test]
    fn png_rgb_uses_integer_luminance() {
        let mut buf = std::io::Cursor::new(Vec::new());
        let img = image::RgbImage::from_raw(1, 1, vec![200u8, 100, 50]).unwrap();
        image::DynamicImage::ImageRgb8(img)
            .write_to(&mut buf, image::ImageFormat::Png)
            .unwrap();
        let gray = load_image(buf.get_ref(), ImageFormat::Png).unwrap();
        // (200*299 + 100*587 + 50*114) / 1000 = 124 (integer division)
        assert_eq!(gray.pixels(), &[124]);
    }

    #[test]
    fn empty_input() {
        assert!(load_image(b"", ImageFormat::Pgm).is_err());
    }
}
