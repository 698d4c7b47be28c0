//! Binary greymap (P5) reading and writing.
//!
//! Grammar: `P5`, whitespace, width, whitespace, height, whitespace, maxval,
//! exactly one whitespace byte, then `width·height` samples (one byte each
//! for maxval 255, two big-endian bytes for 65535). `#` starts a comment that
//! runs to the end of the line and may appear wherever whitespace may before
//! the maxval. Nothing may follow the samples.

use std::path::Path;

use crate::error::{Error, Result};
use crate::transforms::ImagePlane;

/// Largest accepted width or height.
pub const MAX_DIMENSION: usize = 1 << 16;

const COLOR_HINT: &str = "convert to 8- or 16-bit greyscale binary PGM first, \
     e.g. `magick in.png -colorspace Gray -depth 8 out.pgm`";

pub fn load_image(path: impl AsRef<Path>) -> Result<ImagePlane> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

/// Parse a P5 file into samples normalized to [0, 1].
pub fn decode_pgm(bytes: &[u8]) -> Result<ImagePlane> {
    match bytes.get(..2) {
        Some(b"P5") => {}
        Some(b"P6") | Some(b"P3") => {
            return Err(Error::UnsupportedFormat(format!(
                "colour PPM input; {COLOR_HINT}"
            )))
        }
        Some(b"P1") | Some(b"P2") | Some(b"P4") | Some(b"P7") => {
            return Err(Error::UnsupportedFormat(format!(
                "only binary greymaps (P5) are read; {COLOR_HINT}"
            )))
        }
        _ => return Err(Error::parse(0, "missing P5 magic number")),
    }
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.header_field("width")?;
    let height = cur.header_field("height")?;
    let maxval_at = cur.pos;
    let maxval = cur.header_field("maxval")?;
    for (name, v) in [("width", width), ("height", height)] {
        if v == 0 || v > MAX_DIMENSION {
            return Err(Error::parse(
                maxval_at,
                format!("{name} {v} outside 1..={MAX_DIMENSION}"),
            ));
        }
    }
    let depth = match maxval {
        255 => 1,
        65535 => 2,
        _ => {
            return Err(Error::parse(
                maxval_at,
                format!("unsupported maxval {maxval} (expected 255 or 65535)"),
            ))
        }
    };
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        Some(_) => {
            return Err(Error::parse(
                cur.pos,
                "expected one whitespace byte after maxval",
            ))
        }
        None => return Err(Error::parse(cur.pos, "file ends before the sample data")),
    }

    let start = cur.pos;
    let count = width * height;
    let needed = count * depth;
    let available = bytes.len() - start;
    if available < needed {
        return Err(Error::parse(
            bytes.len(),
            format!("truncated sample data: expected {needed} bytes, found {available}"),
        ));
    }
    if available > needed {
        return Err(Error::parse(
            start + needed,
            "trailing bytes after sample data",
        ));
    }
    let data = &bytes[start..];
    let scale = maxval as f64;
    let samples = if depth == 1 {
        data.iter().map(|&b| b as f64 / scale).collect()
    } else {
        data.chunks_exact(2)
            .map(|p| u16::from_be_bytes([p[0], p[1]]) as f64 / scale)
            .collect()
    };
    ImagePlane::new(width, height, samples)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) -> bool {
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.pos > start
    }

    fn header_field(&mut self, name: &str) -> Result<usize> {
        if !self.skip_space_and_comments() {
            return Err(Error::parse(
                self.pos,
                format!("expected whitespace before {name}"),
            ));
        }
        let start = self.pos;
        let mut value: usize = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add((b - b'0') as usize))
                .filter(|&v| v <= u32::MAX as usize)
                .ok_or_else(|| Error::parse(start, format!("{name} is too large")))?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(Error::parse(start, format!("expected decimal {name}")));
        }
        Ok(value)
    }
}

/// Encode `image` as P5, clamping samples to [0, 1] and rounding to the
/// nearest level. `maxval` must be 255 or 65535.
pub fn encode_pgm(image: &ImagePlane, maxval: u16) -> Result<Vec<u8>> {
    if maxval != 255 && maxval != 65535 {
        return Err(Error::invalid(format!(
            "maxval must be 255 or 65535, got {maxval}"
        )));
    }
    let mut out = format!("P5\n{} {}\n{}\n", image.width(), image.height(), maxval).into_bytes();
    let scale = maxval as f64;
    for &s in image.samples() {
        let level = (s.clamp(0.0, 1.0) * scale).round() as u16;
        if maxval == 255 {
            out.push(level as u8);
        } else {
            out.extend_from_slice(&level.to_be_bytes());
        }
    }
    Ok(out)
}

pub fn write_pgm(image: &ImagePlane, maxval: u16, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_pgm(image, maxval)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let mut f = b"P5\n2 2\n255\n".to_vec();
        f.extend_from_slice(&[0, 255, 128, 64]);
        let img = decode_pgm(&f).unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.samples(), &[0.0, 1.0, 128.0 / 255.0, 64.0 / 255.0]);
    }

    #[test]
    fn sixteen_bit_is_big_endian() {
        let mut f = b"P5 1 1 65535\n".to_vec();
        f.extend_from_slice(&[0x80, 0x00]);
        assert_eq!(decode_pgm(&f).unwrap().samples(), &[32768.0 / 65535.0]);
    }

    #[test]
    fn comments_in_header() {
        let mut f = b"P5 # made by hand\n1 # w\n 1\n255\n".to_vec();
        f.push(7);
        assert_eq!(decode_pgm(&f).unwrap().samples(), &[7.0 / 255.0]);
    }

    #[test]
    fn colour_rejected() {
        let f = b"P6\n1 1\n255\n\x00\x00\x00";
        assert!(matches!(decode_pgm(f), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn truncation_names_offset() {
        let mut f = b"P5\n4 4\n255\n".to_vec();
        f.extend_from_slice(&[1; 8]);
        match decode_pgm(&f) {
            Err(Error::Parse { offset, reason }) => {
                assert_eq!(offset, f.len());
                assert!(reason.contains("truncated"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn header_errors() {
        for bad in [
            &b""[..],
            b"P5",
            b"P5\n",
            b"P5\nx 1\n255\n\x00",
            b"P5\n0 1\n255\n",
            b"P5\n1 1\n1023\n\x00\x00",
            b"P5\n1 1\n255",
            b"P51 1 255\n\x00",
            b"P5\n1 1\n255x\x00",
            b"P5\n99999999999999999999 1\n255\n",
            b"P5\n1 1\n255\n\x00\x00",
        ] {
            assert!(
                matches!(decode_pgm(bad), Err(Error::Parse { .. })),
                "{:?}",
                String::from_utf8_lossy(bad)
            );
        }
    }

    #[test]
    fn encode_round_trip() {
        let img = ImagePlane::new(3, 2, vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]).unwrap();
        for maxval in [255u16, 65535] {
            let back = decode_pgm(&encode_pgm(&img, maxval).unwrap()).unwrap();
            for (a, b) in img.samples().iter().zip(back.samples()) {
                assert!((a - b).abs() <= 0.5 / maxval as f64 + 1e-15);
            }
        }
        assert!(encode_pgm(&img, 1000).is_err());
    }
}
