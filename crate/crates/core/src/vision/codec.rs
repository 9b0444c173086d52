//! Binary PGM (`P5`) and PPM (`P6`) with maxval 255.

use std::fs;
use std::path::Path;

use super::Image;
use crate::error::{Error, Result};

fn format(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset,
        message: message.into(),
    }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    /// Skips whitespace and `#` comments.
    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(match self.bytes.get(self.pos) {
                None => format(self.pos, format!("truncated header: missing {what}")),
                Some(&b) => format(self.pos, format!("expected {what}, found byte {b:#04x}")),
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| format(start, format!("{what} too large")))
    }
}

/// Decodes a binary PGM or PPM image.
pub fn decode_pnm(bytes: &[u8]) -> Result<Image> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(format(0, "bad magic: expected P5 or P6")),
    };
    let mut h = Header { bytes, pos: 2 };
    if !h.bytes.get(2).is_some_and(u8::is_ascii_whitespace) && h.bytes.get(2) != Some(&b'#') {
        return Err(format(2, "expected whitespace after magic"));
    }
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval_at = {
        h.skip_space();
        h.pos
    };
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(format(maxval_at, format!("zero image extent {width}x{height}")));
    }
    match bytes.get(h.pos) {
        Some(b) if b.is_ascii_whitespace() => h.pos += 1,
        Some(_) => return Err(format(h.pos, "expected a single whitespace byte after maxval")),
        None => return Err(format(h.pos, "truncated header: no pixel data")),
    }
    match maxval {
        255 => {}
        1..=65535 => return Err(Error::Unsupported(format!("maxval {maxval} (only 255 is supported)"))),
        _ => return Err(format(maxval_at, format!("maxval {maxval} outside 1..=65535"))),
    }
    let len = width
        .checked_mul(height)
        .and_then(|v| v.checked_mul(channels))
        .ok_or_else(|| format(maxval_at, "image extent overflows"))?;
    let payload = &bytes[h.pos..];
    if payload.len() < len {
        return Err(format(bytes.len(), format!("truncated pixel data: {} of {len} bytes", payload.len())));
    }
    if payload.len() > len {
        return Err(format(h.pos + len, format!("{} trailing bytes after pixel data", payload.len() - len)));
    }
    Image::new(width, height, channels, payload.to_vec())
}

/// Encodes gray images as `P5` and RGB images as `P6`.
pub fn encode_pnm(img: &Image) -> Vec<u8> {
    let magic = if img.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}

pub fn read_pnm(path: impl AsRef<Path>) -> Result<Image> {
    decode_pnm(&fs::read(path)?)
}

pub fn write_pnm(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pnm(img))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_pixel_round_trip() {
        let img = Image::new(1, 1, 3, vec![255, 255, 255]).unwrap();
        let bytes = encode_pnm(&img);
        assert_eq!(bytes, b"P6\n1 1\n255\n\xff\xff\xff");
        assert_eq!(decode_pnm(&bytes).unwrap(), img);
    }

    #[test]
    fn header_comments_are_skipped() {
        let img = decode_pnm(b"P5 # gray\n2 # w\n1\n255\n\x01\x02").unwrap();
        assert_eq!(img.pixels(), &[1, 2]);
    }

    #[test]
    fn errors() {
        assert!(matches!(decode_pnm(b"P6\n1 1\n65535\n\0\0\0\0\0\0"), Err(Error::Unsupported(_))));
        assert!(matches!(decode_pnm(b"P3\n1 1\n255\n"), Err(Error::Format { offset: 0, .. })));
        assert!(matches!(decode_pnm(b"P6\n2 1\n255\n\0\0\0"), Err(Error::Format { offset: 14, .. })));
        assert!(matches!(decode_pnm(b"P6\n1 x\n255\n"), Err(Error::Format { offset: 5, .. })));
        assert!(matches!(decode_pnm(b"P5\n1 1\n0\n\0"), Err(Error::Format { offset: 7, .. })));
        assert!(matches!(decode_pnm(b"P5\n1 1\n255"), Err(Error::Format { offset: 10, .. })));
    }
}
