//! Observed entries as text: a `#dims n1 n2 n3` header followed by one
//! `i,j,k,value` line per observed entry (0-based indices).

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use hqtc_core::{ObservationMask, Tensor3};

use crate::error::{FormatError, Result, ToolError};

/// Observed values (zero elsewhere) and the mask of observed positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    pub values: Tensor3,
    pub mask: ObservationMask,
}

impl Observations {
    /// Keep the entries of `m` selected by `mask`.
    pub fn from_tensor(m: &Tensor3, mask: ObservationMask) -> Result<Self> {
        let values = m
            .hadamard(mask.indicator())
            .map_err(|e| ToolError::data("observations", e))?;
        Ok(Observations { values, mask })
    }
}

pub fn format_observations(obs: &Observations) -> String {
    let (n1, n2, n3) = obs.values.dims();
    let mut out = format!("#dims {n1} {n2} {n3}\n");
    for (i, j, k) in obs.mask.indices() {
        writeln!(out, "{i},{j},{k},{:?}", obs.values.get(i, j, k)).unwrap();
    }
    out
}

fn line_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Line { line, message: message.into() }
}

fn parse_dims(line: usize, rest: &str) -> std::result::Result<(usize, usize, usize), FormatError> {
    let dims: Vec<usize> = rest
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| line_err(line, format!("bad dimension {t:?}"))))
        .collect::<std::result::Result<_, _>>()?;
    match dims[..] {
        [n1, n2, n3] if n1 > 0 && n2 > 0 && n3 > 0 => Ok((n1, n2, n3)),
        [n1, n2, n3] => Err(FormatError::EmptyDimension { n1, n2, n3 }),
        _ => Err(line_err(line, "expected `#dims n1 n2 n3`")),
    }
}

pub fn parse_observations(text: &str) -> std::result::Result<Observations, FormatError> {
    let mut dims = None;
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let s = raw.trim();
        if s.is_empty() {
            continue;
        }
        if let Some(rest) = s.strip_prefix("#dims") {
            if dims.is_some() {
                return Err(line_err(line, "repeated #dims header"));
            }
            dims = Some(parse_dims(line, rest)?);
            continue;
        }
        if s.starts_with('#') {
            continue;
        }
        let Some((n1, n2, n3)) = dims else {
            return Err(line_err(line, "entry before the #dims header"));
        };
        let fields: Vec<&str> = s.split(',').map(str::trim).collect();
        let [i, j, k, v] = fields[..] else {
            return Err(line_err(line, format!("expected i,j,k,value, got {} fields", fields.len())));
        };
        let index = |t: &str| t.parse::<usize>().map_err(|_| line_err(line, format!("bad index {t:?}")));
        let (i, j, k) = (index(i)?, index(j)?, index(k)?);
        let v: f64 = v.parse().map_err(|_| line_err(line, format!("bad value {v:?}")))?;
        if !v.is_finite() {
            return Err(line_err(line, "value is not finite"));
        }
        if i >= n1 || j >= n2 || k >= n3 {
            return Err(line_err(line, format!("index ({i}, {j}, {k}) outside {n1}x{n2}x{n3}")));
        }
        if !seen.insert((i, j, k)) {
            return Err(line_err(line, format!("duplicate entry ({i}, {j}, {k})")));
        }
        entries.push((i, j, k, v));
    }
    let (n1, n2, n3) = dims.ok_or_else(|| FormatError::Header("missing #dims line".into()))?;
    if entries.is_empty() {
        return Err(FormatError::Invalid("no observed entries".into()));
    }
    let mut values = Tensor3::zeros(n1, n2, n3);
    for &(i, j, k, v) in &entries {
        values.set(i, j, k, v);
    }
    let mask = ObservationMask::from_indices(n1, n2, n3, entries.iter().map(|&(i, j, k, _)| (i, j, k)))
        .map_err(|e| FormatError::Invalid(e.to_string()))?;
    Ok(Observations { values, mask })
}

pub fn read_observations(path: &Path) -> Result<Observations> {
    let text = std::fs::read_to_string(path).map_err(|e| ToolError::io(path, e))?;
    parse_observations(&text).map_err(|e| ToolError::format(path, e))
}

pub fn write_observations(path: &Path, obs: &Observations) -> Result<()> {
    std::fs::write(path, format_observations(obs)).map_err(|e| ToolError::io(path, e))
}
