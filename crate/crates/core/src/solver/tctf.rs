use crate::linalg::{cmul, pinv};
use crate::robust::tctf_effective_loss;
use crate::tensor::{fft_mode3, half_len, t_product, Tensor3};
use crate::Result;

use super::state::enforce_symmetry;
use super::{init_factors, run_loop, ObservationMask, SolveReport, SolverConfig, SolverKind, SpectralFactorState};

/// `Z = X*Y + W / (beta + W) o P o (M - X*Y)`.
///
/// The gain is taken as 1 on the sampling set when `beta = 0`, which makes
/// `Z` the projection `P o M + (1 - P) o (X * Y)`.
pub fn hq_tctf_update_z(
    m: &Tensor3,
    mask: &ObservationMask,
    w: &Tensor3,
    x: &Tensor3,
    y: &Tensor3,
    beta: f64,
) -> Result<Tensor3> {
    z_from_estimate(m, mask, w, &t_product(x, y)?, beta)
}

pub(crate) fn z_from_estimate(
    m: &Tensor3,
    mask: &ObservationMask,
    w: &Tensor3,
    estimate: &Tensor3,
    beta: f64,
) -> Result<Tensor3> {
    mask.check_dims("hq_tctf_update_z", m)?;
    mask.check_dims("hq_tctf_update_z", w)?;
    mask.check_dims("hq_tctf_update_z", estimate)?;
    if !(beta >= 0.0) {
        return Err(crate::Error::param("beta", "must be >= 0"));
    }
    let p = mask.indicator().as_slice();
    let mut z = estimate.clone();
    for (((zv, &mv), &pv), &wv) in z
        .as_mut_slice()
        .iter_mut()
        .zip(m.as_slice())
        .zip(p)
        .zip(w.as_slice())
    {
        if pv != 0.0 {
            let gain = if beta == 0.0 { 1.0 } else { wv / (beta + wv) };
            *zv += gain * (mv - *zv);
        }
    }
    Ok(z)
}

/// One alternating least-squares sweep per frequency slice:
/// `X = Z Y^* (Y Y^*)^+`, then `Y = (X^* X)^+ X^* Z` with the new `X`.
pub fn hq_tctf_update_factors(z: &Tensor3, state: &SpectralFactorState) -> Result<SpectralFactorState> {
    let (n1, n2, n3, _) = state.dims();
    if z.dims() != (n1, n2, n3) {
        return Err(crate::Error::mismatch(
            "hq_tctf_update_factors",
            alloc::format!("Z is {:?}, factors give {:?}", z.dims(), (n1, n2, n3)),
        ));
    }
    if !z.is_finite() {
        return Err(crate::Error::NonFinite {
            what: "Z",
            iteration: 0,
        });
    }
    let zbar = fft_mode3(z);
    let mut next = state.clone();
    for k in 0..half_len(n3) {
        let zk = zbar.slice(k);
        let yk = &state.ybar[k];
        let yh = yk.adjoint();
        let xk = cmul(&zk, &yh) * pinv(&(yk * &yh), k)?;
        let xh = xk.adjoint();
        let yk_new = pinv(&(&xh * &xk), k)? * cmul(&xh, &zk);
        next.xbar[k] = xk;
        next.ybar[k] = yk_new;
    }
    enforce_symmetry(&mut next.xbar);
    enforce_symmetry(&mut next.ybar);
    Ok(next)
}

/// HQ-TCTF, or TCTF when `config.robust` is false.
///
/// The traced cost is the loss that the iteration decreases monotonically at
/// fixed kernel width: [`tctf_effective_loss`] of the observed residuals, which
/// is `0.5 ||P o (M - X*Y)||^2` in the non-robust case.
pub fn hq_tctf(m: &Tensor3, mask: &ObservationMask, config: &SolverConfig) -> Result<SolveReport> {
    config.validate_for(m, mask)?;
    let (n1, n2, n3) = m.dims();
    let (x, y) = init_factors(n1, n2, n3, config.rank, config.seed)?;
    let state = SpectralFactorState::from_factors(&x, &y)?;
    let kind = if config.robust {
        SolverKind::HqTctf
    } else {
        SolverKind::Tctf
    };
    let beta = config.beta;
    run_loop(
        kind,
        m,
        mask,
        config,
        state,
        |ev| match ev.sigma {
            Some(s) => tctf_effective_loss(&ev.observed, s, beta),
            None => Ok(half_sq(&ev.observed)),
        },
        |state, ev, estimate, _| {
            let z = z_from_estimate(m, mask, &ev.weights, estimate, beta)?;
            *state = hq_tctf_update_factors(&z, state)?;
            Ok(None)
        },
    )
}

pub(crate) fn half_sq(v: &[f64]) -> f64 {
    0.5 * v.iter().map(|e| e * e).sum::<f64>()
}
