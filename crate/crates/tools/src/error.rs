use std::path::{Path, PathBuf};

use hqtc_core::SolverKind;

/// Malformed file contents, independent of where the bytes came from.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormatError {
    #[error("bad magic {found:?}, expected {expected:?}")]
    BadMagic { found: String, expected: &'static str },

    #[error("unsupported magic {0:?}")]
    UnsupportedMagic(String),

    #[error("truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("{found} trailing bytes after the payload")]
    TrailingBytes { found: usize },

    #[error("dimensions {n1}x{n2}x{n3} overflow the addressable size")]
    DimensionOverflow { n1: u64, n2: u64, n3: u64 },

    #[error("dimensions {n1}x{n2}x{n3} must all be positive")]
    EmptyDimension { n1: usize, n2: usize, n3: usize },

    #[error("malformed header: {0}")]
    Header(String),

    #[error("payload has {found} samples, expected {expected}")]
    PayloadSize { expected: usize, found: usize },

    #[error("line {line}: {message}")]
    Line { line: usize, message: String },

    #[error("{0}")]
    Invalid(String),
}

/// A configuration problem, with the line it was found on when there is one.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub(crate) fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError { line: Some(line), message: message.into() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ToolError {
    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Config { path: PathBuf, source: ConfigError },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: {source}", path.display())]
    Format { path: PathBuf, source: FormatError },

    #[error("{context}: {source}")]
    Data { context: String, source: hqtc_core::Error },

    #[error("solver {solver} failed: {source}")]
    Solver { solver: SolverKind, source: hqtc_core::Error },
}

impl ToolError {
    /// Process exit code: 1 usage, 2 data, 3 solver.
    pub fn exit_code(&self) -> i32 {
        match self {
            ToolError::Usage(_) | ToolError::Config { .. } => 1,
            ToolError::Io { .. } | ToolError::Format { .. } | ToolError::Data { .. } => 2,
            ToolError::Solver { .. } => 3,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        ToolError::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn format(path: &Path, source: FormatError) -> Self {
        ToolError::Format { path: path.to_path_buf(), source }
    }

    pub(crate) fn data(context: impl Into<String>, source: hqtc_core::Error) -> Self {
        ToolError::Data { context: context.into(), source }
    }
}

pub type Result<T, E = ToolError> = std::result::Result<T, E>;
