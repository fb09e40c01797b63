use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{read_bytes, write_atomic};

/// Grayscale image with pixels normalized to [0, 1], row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageBuffer {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
    pub max_val: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PgmEncoding {
    /// P2
    Ascii,
    /// P5
    #[default]
    Binary,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>, max_val: u16) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                got: pixels.len(),
            });
        }
        if max_val == 0 {
            return Err(pgm("max value must be positive"));
        }
        if let Some(i) = pixels.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(pgm(format!("pixel {i} outside [0, 1]: {}", pixels[i])));
        }
        Ok(ImageBuffer {
            width,
            height,
            pixels,
            max_val,
        })
    }

    /// Same geometry and bit depth, new pixel values.
    pub fn with_pixels(&self, pixels: Vec<f64>) -> Result<Self> {
        ImageBuffer::new(self.width, self.height, pixels, self.max_val)
    }
}

fn pgm(msg: impl Into<String>) -> Error {
    Error::Pgm(msg.into())
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u64> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(pgm(format!("malformed header: expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| pgm(format!("malformed header: {what} out of range")))
    }
}

pub fn parse_pgm(bytes: &[u8]) -> Result<ImageBuffer> {
    let encoding = match bytes.get(..2) {
        Some(b"P2") => PgmEncoding::Ascii,
        Some(b"P5") => PgmEncoding::Binary,
        Some([b'P', b'1' | b'3' | b'4' | b'6' | b'7']) => {
            return Err(pgm("grayscale only: expected P2 or P5"))
        }
        _ => return Err(pgm("malformed header: missing P2/P5 magic")),
    };
    let mut h = Header { bytes, pos: 2 };
    if !bytes
        .get(2)
        .is_some_and(|b| b.is_ascii_whitespace() || *b == b'#')
    {
        return Err(pgm("malformed header: bad magic"));
    }
    let width = h.number("width")? as usize;
    let height = h.number("height")? as usize;
    let max_val = h.number("max value")?;
    if max_val == 0 || max_val > 65535 {
        return Err(pgm(format!("max value {max_val} not in 1..=65535")));
    }
    let max_val = max_val as u16;
    let count = width
        .checked_mul(height)
        .ok_or_else(|| pgm("malformed header: image too large"))?;

    let mut raw = Vec::with_capacity(count);
    match encoding {
        PgmEncoding::Ascii => {
            for i in 0..count {
                let v = h
                    .number("pixel")
                    .map_err(|_| pgm(format!("truncated payload: got {i} of {count} pixels")))?;
                raw.push(v);
            }
        }
        PgmEncoding::Binary => {
            // Exactly one whitespace byte separates the header from the data.
            if !bytes.get(h.pos).is_some_and(|b| b.is_ascii_whitespace()) {
                return Err(pgm("malformed header: missing separator before data"));
            }
            let data = &bytes[h.pos + 1..];
            let wide = max_val > 255;
            let need = if wide { count * 2 } else { count };
            if data.len() < need {
                return Err(pgm(format!(
                    "truncated payload: expected {need} bytes, got {}",
                    data.len()
                )));
            }
            if wide {
                raw.extend(
                    data[..need]
                        .chunks_exact(2)
                        .map(|c| u64::from(u16::from_be_bytes([c[0], c[1]]))),
                );
            } else {
                raw.extend(data[..need].iter().map(|&b| u64::from(b)));
            }
        }
    }
    if let Some(i) = raw.iter().position(|&v| v > u64::from(max_val)) {
        return Err(pgm(format!("pixel {i} exceeds max value {max_val}")));
    }
    let scale = f64::from(max_val);
    let pixels = raw.into_iter().map(|v| v as f64 / scale).collect();
    Ok(ImageBuffer {
        width,
        height,
        pixels,
        max_val,
    })
}

fn to_level(p: f64, max_val: u16) -> u16 {
    // Round half up.
    let x = (p * f64::from(max_val) + 0.5).floor();
    x.clamp(0.0, f64::from(max_val)) as u16
}

pub fn encode_pgm(img: &ImageBuffer, encoding: PgmEncoding) -> Result<Vec<u8>> {
    let checked = ImageBuffer::new(img.width, img.height, img.pixels.clone(), img.max_val)?;
    let levels: Vec<u16> = checked
        .pixels
        .iter()
        .map(|&p| to_level(p, img.max_val))
        .collect();
    let magic = match encoding {
        PgmEncoding::Ascii => "P2",
        PgmEncoding::Binary => "P5",
    };
    let mut out = format!("{magic}\n{} {}\n{}\n", img.width, img.height, img.max_val).into_bytes();
    match encoding {
        PgmEncoding::Ascii => {
            for row in levels.chunks(img.width.max(1)) {
                let line: Vec<String> = row.iter().map(u16::to_string).collect();
                out.extend_from_slice(line.join(" ").as_bytes());
                out.push(b'\n');
            }
        }
        PgmEncoding::Binary if img.max_val > 255 => {
            for v in levels {
                out.extend_from_slice(&v.to_be_bytes());
            }
        }
        PgmEncoding::Binary => out.extend(levels.into_iter().map(|v| v as u8)),
    }
    Ok(out)
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    parse_pgm(&read_bytes(path.as_ref())?)
}

pub fn write_pgm(path: impl AsRef<Path>, img: &ImageBuffer, encoding: PgmEncoding) -> Result<()> {
    write_atomic(path.as_ref(), &encode_pgm(img, encoding)?)
}
