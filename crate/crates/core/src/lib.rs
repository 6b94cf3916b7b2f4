//! Robust low-tubal-rank tensor completion.
//!
//! The crate is organised bottom-up:
//!
//! - [`tensor`] and [`tsvd`]: dense third-order tensors, the DFT along the
//!   third mode, the t-product, the t-SVD and tubal/multi-rank.
//! - [`robust`]: the Gaussian kernel, correntropy-induced loss, half-quadratic
//!   weights, adaptive kernel width and the stopping rule.
//! - [`solver`]: the HQ-TCTF and HQ-TCASD completion solvers and their
//!   non-robust limits (TCTF, TCASD).
//! - [`experiments`]: synthetic data, Gaussian-mixture noise, error metrics and
//!   Monte-Carlo orchestration.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled; the only thing `std` adds is wall-clock timing in reports.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod clock;
mod error;
mod fft;
mod linalg;

pub mod experiments;
pub mod robust;
pub mod solver;
pub mod tensor;
pub mod tsvd;

pub use error::{Error, Result};
pub use experiments::{
    add_gmm_noise, gen_low_tubal_rank, psnr, rel_err, run_monte_carlo, sample_mask, ExperimentSpec,
    MetricsReport, NoiseModel,
};
pub use robust::{KernelSchedule, ResidualStats};
pub use solver::{
    hq_tcasd, hq_tctf, solve, ObservationMask, SolveReport, SolverConfig, SolverKind, Termination,
};
pub use tensor::{SpectralTensor, Tensor3};
pub use tsvd::{multi_rank, t_svd, truncate_tubal_rank, tubal_rank, TSvdResult};

/// Complex scalar used for frequency-domain data.
pub type C64 = num_complex::Complex64;
