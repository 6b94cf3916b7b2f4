//! Correntropy machinery: Gaussian kernel, C-loss, half-quadratic weights,
//! adaptive kernel width and the residual bookkeeping shared by the solvers.

use alloc::format;
use alloc::vec::Vec;

use crate::solver::ObservationMask;
use crate::tensor::{t_product, Tensor3};
use crate::{Error, Result};

/// Kernel-width schedule `sigma = max(eta * max(q25, q75), sigma_min)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSchedule {
    pub eta: f64,
    pub sigma_min: f64,
    /// When set, adaptation is switched off and this width is used throughout.
    pub fixed_sigma: Option<f64>,
}

impl KernelSchedule {
    pub fn new(eta: f64, sigma_min: f64) -> Result<Self> {
        let s = KernelSchedule {
            eta,
            sigma_min,
            fixed_sigma: None,
        };
        s.validate()?;
        Ok(s)
    }

    /// Settings used for synthetic data.
    pub fn synthetic() -> Self {
        KernelSchedule {
            eta: 6.0,
            sigma_min: 0.3,
            fixed_sigma: None,
        }
    }

    /// Settings used for image and traffic data scaled to `[0, 1]`.
    pub fn real() -> Self {
        KernelSchedule {
            eta: 2.0,
            sigma_min: 0.15,
            fixed_sigma: None,
        }
    }

    pub fn with_fixed_sigma(mut self, sigma: f64) -> Result<Self> {
        self.fixed_sigma = Some(sigma);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::param("eta", format!("must be positive, got {}", self.eta)));
        }
        if !(self.sigma_min > 0.0 && self.sigma_min.is_finite()) {
            return Err(Error::param(
                "sigma_min",
                format!("must be positive, got {}", self.sigma_min),
            ));
        }
        if let Some(s) = self.fixed_sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::NonPositiveSigma(s));
            }
        }
        Ok(())
    }
}

impl Default for KernelSchedule {
    fn default() -> Self {
        Self::synthetic()
    }
}

/// Residuals of one iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualStats {
    /// `P o (M - X*Y)`, zero off the sampling set.
    pub residual: Tensor3,
    /// `|| sqrt(W) o P o (M - X*Y) ||_F`.
    pub weighted_norm: f64,
    /// Observed residuals, ordered with `i` outermost and `k` innermost.
    pub observed: Vec<f64>,
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveSigma(sigma))
    }
}

#[inline]
fn kernel(e: f64, sigma: f64) -> f64 {
    libm::exp(-(e * e) / (2.0 * sigma * sigma))
}

/// `exp(-e^2 / (2 sigma^2))`.
pub fn gaussian_kernel(e: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    Ok(kernel(e, sigma))
}

/// `sum sigma^2 (1 - G_sigma(e))` over the given residuals.
pub fn c_loss(residuals: &[f64], sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let s2 = sigma * sigma;
    // -expm1 keeps small residuals accurate where 1 - exp underflows to 0.
    Ok(residuals
        .iter()
        .map(|&e| -s2 * libm::expm1(-(e * e) / (2.0 * s2)))
        .sum())
}

/// Half-quadratic weights: `G_sigma(residual)` on the sampling set, 0 elsewhere.
pub fn update_weights(residual: &Tensor3, mask: &ObservationMask, sigma: f64) -> Result<Tensor3> {
    check_sigma(sigma)?;
    mask.check_dims("update_weights", residual)?;
    let p = mask.indicator().as_slice();
    let data = residual
        .as_slice()
        .iter()
        .zip(p)
        .map(|(&e, &pv)| if pv != 0.0 { kernel(e, sigma) } else { 0.0 })
        .collect();
    Tensor3::from_vec(residual.dims().0, residual.dims().1, residual.dims().2, data)
}

/// The half-quadratic conjugate `phi(w) = sigma^2 (1 - w + w ln w)`.
///
/// `sigma^2 (1 - G(e)) = min over w in (0, 1] of w e^2 / 2 + phi(w)`, attained
/// at `w = G(e)`.
pub fn hq_conjugate(w: f64, sigma: f64) -> f64 {
    let wlnw = if w > 0.0 { w * libm::log(w) } else { 0.0 };
    sigma * sigma * (1.0 - w + wlnw)
}

/// Loss minimised by the half-quadratic factorisation scheme with coupling
/// weight `beta`: `sum sigma^2 (1 + beta) ln((1 + beta) / (beta + G(e)))`.
///
/// Tends to `e^2 / 2` as `beta -> 0` and to the C-loss as `beta -> inf`.
pub fn tctf_effective_loss(residuals: &[f64], sigma: f64, beta: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if !(beta >= 0.0) {
        return Err(Error::param("beta", format!("must be >= 0, got {beta}")));
    }
    if beta == 0.0 {
        return Ok(0.5 * residuals.iter().map(|e| e * e).sum::<f64>());
    }
    let s2 = sigma * sigma;
    // ln((1+b)/(b+G)) = -ln(1 + (G - 1)/(1 + b)), G - 1 = expm1(-e^2/2s^2).
    Ok(residuals
        .iter()
        .map(|&e| {
            let gm1 = libm::expm1(-(e * e) / (2.0 * s2));
            -s2 * (1.0 + beta) * libm::log1p(gm1 / (1.0 + beta))
        })
        .sum())
}

/// Linear-interpolation quantile of sorted data (the "type 7" rule):
/// `h = (n - 1) q`, `x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h])`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptyResiduals);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::param("q", format!("must lie in [0, 1], got {q}")));
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = libm::floor(h) as usize;
    if lo + 1 >= sorted.len() {
        return Ok(sorted[sorted.len() - 1]);
    }
    Ok(sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo]))
}

/// Type-7 quantile without a full sort. Reorders `values`.
fn quantile_select(values: &mut [f64], q: f64) -> f64 {
    let n = values.len();
    let h = (n - 1) as f64 * q;
    let lo = libm::floor(h) as usize;
    let (_, &mut a, rest) = values.select_nth_unstable_by(lo, f64::total_cmp);
    if lo + 1 >= n {
        return a;
    }
    let b = rest.iter().copied().fold(f64::INFINITY, f64::min);
    a + (h - lo as f64) * (b - a)
}

/// Kernel width for the next iteration from the signed observed residuals.
pub fn adaptive_sigma(observed: &[f64], schedule: &KernelSchedule) -> Result<f64> {
    if let Some(s) = schedule.fixed_sigma {
        check_sigma(s)?;
        return Ok(s);
    }
    if observed.is_empty() {
        return Err(Error::EmptyResiduals);
    }
    if observed.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "residual",
            iteration: 0,
        });
    }
    let mut buf = observed.to_vec();
    let q25 = quantile_select(&mut buf, 0.25);
    let q75 = quantile_select(&mut buf, 0.75);
    Ok((schedule.eta * q25.max(q75)).max(schedule.sigma_min))
}

/// Residuals of `M` against an already formed estimate `X*Y`.
pub fn residuals_from_estimate(
    m: &Tensor3,
    mask: &ObservationMask,
    estimate: &Tensor3,
    w: &Tensor3,
) -> Result<ResidualStats> {
    mask.check_dims("compute_residuals", m)?;
    m.same_dims("compute_residuals", estimate)?;
    m.same_dims("compute_residuals", w)?;
    let p = mask.indicator().as_slice();
    let mut sq = 0.0;
    let data: Vec<f64> = m
        .as_slice()
        .iter()
        .zip(estimate.as_slice())
        .zip(p)
        .zip(w.as_slice())
        .map(|(((&mv, &ev), &pv), &wv)| {
            if pv != 0.0 {
                let e = mv - ev;
                sq += wv * e * e;
                e
            } else {
                0.0
            }
        })
        .collect();
    let (n1, n2, n3) = m.dims();
    let residual = Tensor3::from_vec(n1, n2, n3, data)?;
    let observed = mask.gather(&residual);
    Ok(ResidualStats {
        residual,
        weighted_norm: libm::sqrt(sq),
        observed,
    })
}

/// Residuals of `M` against the factorisation `X * Y` under weights `W`.
pub fn compute_residuals(
    m: &Tensor3,
    mask: &ObservationMask,
    x: &Tensor3,
    y: &Tensor3,
    w: &Tensor3,
) -> Result<ResidualStats> {
    let estimate = t_product(x, y)?;
    residuals_from_estimate(m, mask, &estimate, w)
}

/// `|curr - prev| < epsilon`.
pub fn converged(prev_norm: f64, curr_norm: f64, epsilon: f64) -> bool {
    (curr_norm - prev_norm).abs() < epsilon
}
