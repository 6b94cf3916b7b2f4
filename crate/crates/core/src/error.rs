use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    DimensionMismatch { op: &'static str, detail: String },

    #[error("invalid dimensions ({n1}, {n2}, {n3}): {reason}")]
    InvalidDims {
        n1: usize,
        n2: usize,
        n3: usize,
        reason: &'static str,
    },

    #[error("rank {rank} out of range 1..={max}")]
    RankOutOfRange { rank: usize, max: usize },

    #[error("kernel width must be positive, got {0}")]
    NonPositiveSigma(f64),

    #[error("residual vector is empty")]
    EmptyResiduals,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("SVD did not converge on frequency slice {slice}")]
    SvdNoConvergence { slice: usize },

    #[error("pseudo-inverse failed on frequency slice {slice}")]
    PseudoInverse { slice: usize },

    #[error("non-finite value in {what} at iteration {iteration}")]
    NonFinite { what: &'static str, iteration: usize },

    #[error("inverse DFT left imaginary residue {max_imag:e} (scale {scale:e})")]
    ImaginaryResidue { max_imag: f64, scale: f64 },

    #[error("reference tensor has zero norm")]
    ZeroNormTruth,
}

impl Error {
    pub(crate) fn mismatch(op: &'static str, detail: String) -> Self {
        Error::DimensionMismatch { op, detail }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
