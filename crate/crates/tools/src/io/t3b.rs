//! `T3B1` binary tensors: magic, three little-endian `u32` dimensions, then
//! `n1 * n2 * n3` little-endian `f64` values with `i` varying fastest.

use std::path::Path;

use hqtc_core::Tensor3;

use crate::error::{FormatError, Result, ToolError};

pub const MAGIC: &[u8; 4] = b"T3B1";
const HEADER: usize = 16;

pub fn encode_t3b(t: &Tensor3) -> std::result::Result<Vec<u8>, FormatError> {
    let (n1, n2, n3) = t.dims();
    let dim = |n: usize| {
        u32::try_from(n).map_err(|_| FormatError::DimensionOverflow { n1: n1 as u64, n2: n2 as u64, n3: n3 as u64 })
    };
    let mut out = Vec::with_capacity(HEADER + 8 * t.len());
    out.extend_from_slice(MAGIC);
    for n in [n1, n2, n3] {
        out.extend_from_slice(&dim(n)?.to_le_bytes());
    }
    for v in t.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_t3b(bytes: &[u8]) -> std::result::Result<Tensor3, FormatError> {
    if bytes.len() < 4 {
        return Err(FormatError::Truncated { expected: HEADER, found: bytes.len() });
    }
    if &bytes[..4] != MAGIC {
        return Err(FormatError::BadMagic {
            found: String::from_utf8_lossy(&bytes[..4]).into_owned(),
            expected: "T3B1",
        });
    }
    if bytes.len() < HEADER {
        return Err(FormatError::Truncated { expected: HEADER, found: bytes.len() });
    }
    let dim = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let (n1, n2, n3) = (dim(4), dim(8), dim(12));
    let overflow = FormatError::DimensionOverflow { n1: n1.into(), n2: n2.into(), n3: n3.into() };
    let len = (n1 as usize)
        .checked_mul(n2 as usize)
        .and_then(|v| v.checked_mul(n3 as usize))
        .ok_or(overflow.clone())?;
    let payload = len.checked_mul(8).and_then(|v| v.checked_add(HEADER)).ok_or(overflow)?;
    if len == 0 {
        return Err(FormatError::EmptyDimension { n1: n1 as usize, n2: n2 as usize, n3: n3 as usize });
    }
    if bytes.len() < payload {
        return Err(FormatError::Truncated { expected: payload, found: bytes.len() });
    }
    if bytes.len() > payload {
        return Err(FormatError::TrailingBytes { found: bytes.len() - payload });
    }
    let data = bytes[HEADER..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Tensor3::from_vec(n1 as usize, n2 as usize, n3 as usize, data).expect("length checked above"))
}

pub fn read_t3b(path: &Path) -> Result<Tensor3> {
    let bytes = std::fs::read(path).map_err(|e| ToolError::io(path, e))?;
    decode_t3b(&bytes).map_err(|e| ToolError::format(path, e))
}

pub fn write_t3b(path: &Path, t: &Tensor3) -> Result<()> {
    let bytes = encode_t3b(t).map_err(|e| ToolError::format(path, e))?;
    std::fs::write(path, bytes).map_err(|e| ToolError::io(path, e))
}
