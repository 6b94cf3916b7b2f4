//! Netpbm greymaps and pixmaps (P2, P3, P5, P6).
//!
//! An image becomes a `height x width x channels` tensor with samples divided
//! by `maxval`, so every entry lies in `[0, 1]`.

use std::path::Path;

use hqtc_core::Tensor3;

use crate::error::{FormatError, Result, ToolError};

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub tensor: Tensor3,
    /// `maxval` of the source file.
    pub i_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Ascii,
    Binary,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> std::result::Result<Option<u32>, FormatError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#') {
            self.pos += 1;
        }
        if start == self.pos {
            return Ok(None);
        }
        let tok = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap_or("");
        tok.parse()
            .map(Some)
            .map_err(|_| FormatError::Header(format!("bad {what} {:?}", String::from_utf8_lossy(&self.bytes[start..self.pos]))))
    }

    fn header_field(&mut self, what: &str) -> std::result::Result<u32, FormatError> {
        self.number(what)?.ok_or_else(|| FormatError::Header(format!("missing {what}")))
    }
}

pub fn decode_pnm(bytes: &[u8]) -> std::result::Result<Image, FormatError> {
    let magic = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
    let (channels, encoding) = match magic.as_str() {
        "P2" => (1, Encoding::Ascii),
        "P3" => (3, Encoding::Ascii),
        "P5" => (1, Encoding::Binary),
        "P6" => (3, Encoding::Binary),
        _ => return Err(FormatError::UnsupportedMagic(magic)),
    };
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.header_field("width")? as usize;
    let height = cur.header_field("height")? as usize;
    let maxval = cur.header_field("maxval")?;
    if width == 0 || height == 0 {
        return Err(FormatError::EmptyDimension { n1: height, n2: width, n3: channels });
    }
    if !(1..=65535).contains(&maxval) {
        return Err(FormatError::Header(format!("maxval {maxval} outside 1..=65535")));
    }
    let expected = width * height * channels;
    let samples: Vec<u32> = match encoding {
        Encoding::Ascii => {
            let mut v = Vec::with_capacity(expected);
            while let Some(s) = cur.number("sample")? {
                v.push(s);
            }
            v
        }
        Encoding::Binary => {
            // exactly one whitespace byte separates maxval from the raster
            if !bytes.get(cur.pos).is_some_and(u8::is_ascii_whitespace) {
                return Err(FormatError::Header("missing whitespace after maxval".into()));
            }
            let raster = &bytes[cur.pos + 1..];
            let width_bytes = if maxval < 256 { 1 } else { 2 };
            if raster.len() % width_bytes != 0 {
                return Err(FormatError::PayloadSize { expected, found: raster.len() / width_bytes });
            }
            if width_bytes == 1 {
                raster.iter().map(|&b| b.into()).collect()
            } else {
                raster.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]).into()).collect()
            }
        }
    };
    if samples.len() != expected {
        return Err(FormatError::PayloadSize { expected, found: samples.len() });
    }
    if let Some(bad) = samples.iter().find(|&&s| s > maxval) {
        return Err(FormatError::Invalid(format!("sample {bad} exceeds maxval {maxval}")));
    }
    let scale = f64::from(maxval);
    let tensor = Tensor3::from_fn(height, width, channels, |i, j, k| {
        f64::from(samples[(i * width + j) * channels + k]) / scale
    });
    Ok(Image { tensor, i_max: scale })
}

/// Encode a 1- or 3-channel tensor of `[0, 1]` values; entries outside the
/// range are clamped.
pub fn encode_pnm(t: &Tensor3, maxval: u16, encoding: Encoding) -> std::result::Result<Vec<u8>, FormatError> {
    let (h, w, c) = t.dims();
    let magic = match (c, encoding) {
        (1, Encoding::Ascii) => "P2",
        (3, Encoding::Ascii) => "P3",
        (1, Encoding::Binary) => "P5",
        (3, Encoding::Binary) => "P6",
        _ => return Err(FormatError::Invalid(format!("images have 1 or 3 channels, got {c}"))),
    };
    if maxval == 0 {
        return Err(FormatError::Header("maxval must be positive".into()));
    }
    let m = f64::from(maxval);
    let sample = |i, j, k| (t.get(i, j, k).clamp(0.0, 1.0) * m).round() as u16;
    let mut out = format!("{magic}\n{w} {h}\n{maxval}\n").into_bytes();
    for i in 0..h {
        let mut row = Vec::with_capacity(w * c);
        for j in 0..w {
            for k in 0..c {
                row.push(sample(i, j, k));
            }
        }
        match encoding {
            Encoding::Ascii => {
                let text: Vec<String> = row.iter().map(u16::to_string).collect();
                out.extend_from_slice(text.join(" ").as_bytes());
                out.push(b'\n');
            }
            Encoding::Binary if maxval < 256 => out.extend(row.iter().map(|&s| s as u8)),
            Encoding::Binary => out.extend(row.iter().flat_map(|s| s.to_be_bytes())),
        }
    }
    Ok(out)
}

pub fn read_pnm(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path).map_err(|e| ToolError::io(path, e))?;
    decode_pnm(&bytes).map_err(|e| ToolError::format(path, e))
}

pub fn write_pnm(path: &Path, t: &Tensor3, maxval: u16, encoding: Encoding) -> Result<()> {
    let bytes = encode_pnm(t, maxval, encoding).map_err(|e| ToolError::format(path, e))?;
    std::fs::write(path, bytes).map_err(|e| ToolError::io(path, e))
}
