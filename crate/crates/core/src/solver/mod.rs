//! Completion solvers.
//!
//! Both solvers fit `M ~ X * Y` with `X: n1 x r x n3` and `Y: r x n2 x n3` on
//! the observed entries of `M`, working slice by slice in the frequency
//! domain:
//!
//! - [`hq_tctf`] alternates a closed-form update of an auxiliary tensor `Z`
//!   with per-slice least squares for the factors.
//! - [`hq_tcasd`] takes one exact-line-search steepest descent step in `X` and
//!   one mixed plain/scaled step in `Y` per iteration.
//!
//! With `robust = true` each iteration first sets the kernel width from the
//! observed residuals and reweights them with the Gaussian kernel. With
//! `robust = false` the weights are the plain sampling indicator, which gives
//! the non-robust TCTF and TCASD iterations.

mod mask;
mod state;
mod tcasd;
mod tctf;

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use mask::ObservationMask;
pub use state::{init_factors, SpectralFactorState};
pub use tcasd::{hq_tcasd, tcasd_grad_u, tcasd_step_u, tcasd_step_y, UStep, YStep};
pub use tctf::{hq_tctf, hq_tctf_update_factors, hq_tctf_update_z};

use crate::robust::{adaptive_sigma, update_weights, KernelSchedule};
use crate::tensor::Tensor3;
use crate::{Error, Result};

/// Tunables shared by all solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Tubal rank `r` of the factor model.
    pub rank: usize,
    /// Coupling weight between `X * Y` and `Z` in HQ-TCTF. Zero turns the
    /// `Z`-step into a plain projection onto the observations.
    pub beta: f64,
    /// Mix between the plain (`0`) and scaled (`1`) `Y` direction in HQ-TCASD.
    pub lambda: f64,
    /// Stop once `| ||E_t|| - ||E_{t-1}|| | < epsilon`.
    pub epsilon: f64,
    pub max_iters: usize,
    pub kernel: KernelSchedule,
    /// Seed for [`init_factors`].
    pub seed: u64,
    /// `false` fixes the weights to the sampling indicator.
    pub robust: bool,
}

impl SolverConfig {
    /// Defaults for synthetic data.
    pub fn synthetic(rank: usize) -> Self {
        SolverConfig {
            rank,
            beta: 1.0,
            lambda: 0.2,
            epsilon: 1e-9,
            max_iters: 500,
            kernel: KernelSchedule::synthetic(),
            seed: 0,
            robust: true,
        }
    }

    /// Defaults for image and traffic data scaled to `[0, 1]`.
    pub fn real(rank: usize) -> Self {
        SolverConfig {
            epsilon: 1e-5,
            kernel: KernelSchedule::real(),
            ..Self::synthetic(rank)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::param("rank", "must be at least 1"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::param("beta", format!("must be >= 0, got {}", self.beta)));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::param(
                "lambda",
                format!("must lie in [0, 1], got {}", self.lambda),
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::param(
                "epsilon",
                format!("must be positive, got {}", self.epsilon),
            ));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be at least 1"));
        }
        self.kernel.validate()
    }

    fn validate_for(&self, m: &Tensor3, mask: &ObservationMask) -> Result<()> {
        self.validate()?;
        mask.check_dims("solve", m)?;
        let (n1, n2, _) = m.dims();
        if self.rank > n1.min(n2) {
            return Err(Error::RankOutOfRange {
                rank: self.rank,
                max: n1.min(n2),
            });
        }
        if mask.count() == 0 {
            return Err(Error::param("mask", "no observed entries"));
        }
        if !m.is_finite() {
            return Err(Error::NonFinite {
                what: "observations",
                iteration: 0,
            });
        }
        Ok(())
    }
}

/// The four solver variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolverKind {
    HqTctf,
    HqTcasd,
    /// HQ-TCTF with unit weights and `beta = 0`.
    Tctf,
    /// HQ-TCASD with unit weights.
    Tcasd,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [
        SolverKind::HqTctf,
        SolverKind::HqTcasd,
        SolverKind::Tctf,
        SolverKind::Tcasd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::HqTctf => "hq-tctf",
            SolverKind::HqTcasd => "hq-tcasd",
            SolverKind::Tctf => "tctf",
            SolverKind::Tcasd => "tcasd",
        }
    }

    pub fn is_robust(self) -> bool {
        matches!(self, SolverKind::HqTctf | SolverKind::HqTcasd)
    }

    /// The non-robust counterpart of a robust variant (identity otherwise).
    pub fn non_robust(self) -> Self {
        match self {
            SolverKind::HqTctf => SolverKind::Tctf,
            SolverKind::HqTcasd => SolverKind::Tcasd,
            other => other,
        }
    }

    /// `config` adjusted to this variant.
    pub fn configure(self, mut config: SolverConfig) -> SolverConfig {
        config.robust = self.is_robust();
        if self == SolverKind::Tctf {
            config.beta = 0.0;
        }
        config
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::param(
                    "solver",
                    format!("unknown solver `{s}` (expected hq-tctf, hq-tcasd, tctf or tcasd)"),
                )
            })
    }
}

/// Run `kind` on the observed entries of `m`.
pub fn solve(
    kind: SolverKind,
    m: &Tensor3,
    mask: &ObservationMask,
    config: &SolverConfig,
) -> Result<SolveReport> {
    let config = kind.configure(*config);
    match kind {
        SolverKind::HqTctf | SolverKind::Tctf => hq_tctf(m, mask, &config),
        SolverKind::HqTcasd | SolverKind::Tcasd => hq_tcasd(m, mask, &config),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIters,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIters => "max_iters",
        }
    }
}

/// State of one iteration, measured before its update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Kernel width, `None` for the non-robust variants.
    pub sigma: Option<f64>,
    /// `|| sqrt(W) o P o (M - X * Y) ||_F`.
    pub residual_norm: f64,
    /// Monitored objective at the current kernel width.
    pub cost: f64,
    /// `X` step size of the HQ-TCASD update made in this iteration.
    pub step_u: Option<f64>,
    /// Plain `Y` step size.
    pub step_y: Option<f64>,
    /// Scaled `Y` step size.
    pub step_y_scaled: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solver: SolverKind,
    /// `X * Y` at termination.
    pub estimate: Tensor3,
    pub trace: Vec<IterationRecord>,
    pub termination: Termination,
    /// Number of updates performed.
    pub iterations: usize,
    /// Seconds spent in the solver (0 without the `std` feature).
    pub wall_time: f64,
}

impl SolveReport {
    /// Per-iteration wall time.
    pub fn seconds_per_iteration(&self) -> f64 {
        self.wall_time / self.iterations.max(1) as f64
    }
}

/// Residual-side quantities of one iteration.
pub(crate) struct Evaluation {
    pub sigma: Option<f64>,
    pub weights: Tensor3,
    pub residual: Tensor3,
    pub observed: Vec<f64>,
    pub norm: f64,
}

/// Kernel width, weights and weighted residual norm at `estimate`.
///
/// Observed residuals are collected in buffer order here; only sums and
/// quantiles of them are used.
pub(crate) fn evaluate(
    m: &Tensor3,
    mask: &ObservationMask,
    estimate: &Tensor3,
    config: &SolverConfig,
    iteration: usize,
) -> Result<Evaluation> {
    let p = mask.indicator();
    let (n1, n2, n3) = m.dims();
    let mut observed = Vec::with_capacity(mask.count());
    let data: Vec<f64> = m
        .as_slice()
        .iter()
        .zip(estimate.as_slice())
        .zip(p.as_slice())
        .map(|((&mv, &ev), &pv)| {
            if pv != 0.0 {
                let e = mv - ev;
                observed.push(e);
                e
            } else {
                0.0
            }
        })
        .collect();
    let residual = Tensor3::from_vec(n1, n2, n3, data)?;
    let (sigma, weights) = if config.robust {
        let sigma = adaptive_sigma(&observed, &config.kernel).map_err(|e| match e {
            Error::NonFinite { what, .. } => Error::NonFinite { what, iteration },
            other => other,
        })?;
        (Some(sigma), update_weights(&residual, mask, sigma)?)
    } else {
        (None, p.clone())
    };
    let sq: f64 = residual
        .as_slice()
        .iter()
        .zip(weights.as_slice())
        .map(|(e, w)| w * e * e)
        .sum();
    let norm = libm::sqrt(sq);
    if !norm.is_finite() {
        return Err(Error::NonFinite {
            what: "residual norm",
            iteration,
        });
    }
    Ok(Evaluation {
        sigma,
        weights,
        residual,
        observed,
        norm,
    })
}

/// Drives the shared outer loop: evaluate, record, test, update.
const REFRESH_EVERY: usize = 16;

pub(crate) fn run_loop(
    kind: SolverKind,
    m: &Tensor3,
    mask: &ObservationMask,
    config: &SolverConfig,
    mut state: SpectralFactorState,
    cost: impl Fn(&Evaluation) -> Result<f64>,
    mut update: impl FnMut(
        &mut SpectralFactorState,
        &Evaluation,
        &Tensor3,
        &mut IterationRecord,
    ) -> Result<Option<Tensor3>>,
) -> Result<SolveReport> {
    let clock = crate::clock::Stopwatch::start();
    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut prev: Option<f64> = None;
    let mut termination = Termination::MaxIters;
    let mut estimate = state.estimate()?;
    let mut iterations = 0;
    for t in 0..=config.max_iters {
        let ev = evaluate(m, mask, &estimate, config, t)?;
        let mut record = IterationRecord {
            iteration: t,
            sigma: ev.sigma,
            residual_norm: ev.norm,
            cost: cost(&ev)?,
            step_u: None,
            step_y: None,
            step_y_scaled: None,
        };
        if let Some(p) = prev {
            if crate::robust::converged(p, ev.norm, config.epsilon) {
                trace.push(record);
                termination = Termination::Converged;
                break;
            }
        }
        if t == config.max_iters {
            trace.push(record);
            break;
        }
        prev = Some(ev.norm);
        let tracked = update(&mut state, &ev, &estimate, &mut record)?;
        trace.push(record);
        iterations = t + 1;
        estimate = match tracked {
            // drift from incremental updates is cleared periodically
            Some(e) if iterations % REFRESH_EVERY != 0 => e,
            _ => state.estimate()?,
        };
        if !estimate.is_finite() {
            return Err(Error::NonFinite {
                what: "estimate",
                iteration: t + 1,
            });
        }
    }
    if iterations % REFRESH_EVERY != 0 {
        estimate = state.estimate()?;
    }
    Ok(SolveReport {
        solver: kind,
        estimate,
        trace,
        termination,
        iterations,
        wall_time: clock.seconds(),
    })
}
