use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::linalg::{cmul, gram_inverse};
use crate::robust::c_loss;
use crate::tensor::{fft_mode3, half_len, Tensor3};
use crate::{Error, Result, C64};

use super::state::{enforce_symmetry, products, spectral_to_real, stack_dot_re, stack_norm_sq};
use super::tctf::half_sq;
use super::{init_factors, run_loop, ObservationMask, SolveReport, SolverConfig, SolverKind, SpectralFactorState};

/// Result of the `X` step.
#[derive(Debug, Clone)]
pub struct UStep {
    /// Exact line-search step size, 0 when the direction is unobservable.
    pub mu: f64,
    /// Squared norm of the projected gradient, `(1/n3) sum_k ||D^(k)||^2`.
    pub grad_norm_sq: f64,
    pub state: SpectralFactorState,
}

/// Result of the `Y` step.
#[derive(Debug, Clone)]
pub struct YStep {
    /// Exact line-search step along the plain gradient.
    pub mu_plain: f64,
    /// Exact line-search step along the scaled gradient.
    pub mu_scaled: f64,
    /// `||g||^2` of the plain gradient.
    pub grad_norm_sq: f64,
    /// `Re <g, g'>` between the plain and scaled gradients.
    pub grad_dot_scaled: f64,
    pub state: SpectralFactorState,
}

fn check_weights(op: &'static str, w: &Tensor3, state: &SpectralFactorState) -> Result<()> {
    let (n1, n2, n3, _) = state.dims();
    if w.dims() != (n1, n2, n3) {
        return Err(Error::mismatch(
            op,
            format!("weights {:?}, factors give {:?}", w.dims(), (n1, n2, n3)),
        ));
    }
    Ok(())
}

fn weighted_sq(w: &Tensor3, t: &Tensor3) -> f64 {
    w.as_slice()
        .iter()
        .zip(t.as_slice())
        .map(|(w, v)| w * v * v)
        .sum()
}

/// Block-diagonal gradient of `0.5 ||sqrt(W) o (M - X*Y)||^2` in `X`, one block
/// per frequency slice: `D^(k) = -R_bar^(k) Y_bar^(k)*` with
/// `R = W o P o (M - X*Y)`.
pub fn tcasd_grad_u(residual_weighted: &Tensor3, state: &SpectralFactorState) -> Result<Vec<DMatrix<C64>>> {
    check_weights("tcasd_grad_u", residual_weighted, state)?;
    let rbar = fft_mode3(residual_weighted);
    let n3 = state.xbar.len();
    let mut out: Vec<DMatrix<C64>> = (0..n3)
        .map(|k| {
            if k < half_len(n3) {
                -cmul(&rbar.slice(k), &state.ybar[k].adjoint())
            } else {
                DMatrix::zeros(0, 0)
            }
        })
        .collect();
    enforce_symmetry(&mut out);
    Ok(out)
}

/// Steepest descent in `X` along `grad` with the exact line-search step
/// `mu = ||g'||^2 / ||sqrt(W) o (g' Y)||^2`.
pub fn tcasd_step_u(grad: &[DMatrix<C64>], state: &SpectralFactorState, weights: &Tensor3) -> Result<UStep> {
    check_weights("tcasd_step_u", weights, state)?;
    Ok(u_step(grad, state, weights)?.0)
}

/// Returns the step together with `ifft(D Y_bar)`, the change of `X * Y` per
/// unit step.
fn u_step(
    grad: &[DMatrix<C64>],
    state: &SpectralFactorState,
    weights: &Tensor3,
) -> Result<(UStep, Option<Tensor3>)> {
    let n3 = state.xbar.len();
    if grad.len() != n3 || grad.iter().any(|g| g.shape() != state.xbar[0].shape()) {
        return Err(Error::mismatch(
            "tcasd_step_u",
            "gradient blocks must match the X slices".into(),
        ));
    }
    let grad_norm_sq = stack_norm_sq(grad) / n3 as f64;
    let unchanged = |grad_norm_sq| UStep {
        mu: 0.0,
        grad_norm_sq,
        state: state.clone(),
    };
    if grad_norm_sq == 0.0 {
        return Ok((unchanged(0.0), None));
    }
    let image = spectral_to_real(&products(grad, &state.ybar))?;
    let den = weighted_sq(weights, &image);
    if !(den > 0.0) {
        return Ok((unchanged(grad_norm_sq), None));
    }
    let mu = grad_norm_sq / den;
    let mut next = state.clone();
    let step = C64::new(mu, 0.0);
    for (x, g) in next.xbar.iter_mut().zip(grad) {
        *x -= g * step;
    }
    Ok((
        UStep {
            mu,
            grad_norm_sq,
            state: next,
        },
        Some(image),
    ))
}

/// Mixed step in `Y`: `Y <- Y - (1 - lambda) mu g - lambda mu' g'` where `g` is
/// the gradient in the frequency-domain `Y` blocks,
/// `g^(k) = -(1/n3) X_bar^(k)* R_bar^(k)`, and `g' = n3 (X_bar^* X_bar)^{-1} g`
/// per slice. Both step sizes are exact line searches.
pub fn tcasd_step_y(
    m: &Tensor3,
    state: &SpectralFactorState,
    weights: &Tensor3,
    lambda: f64,
) -> Result<YStep> {
    check_weights("tcasd_step_y", weights, state)?;
    if m.dims() != weights.dims() {
        return Err(Error::mismatch("tcasd_step_y", "M and W differ in shape".into()));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::param("lambda", format!("must lie in [0, 1], got {lambda}")));
    }
    Ok(y_step(m, weights, &state.estimate()?, state, lambda)?.0)
}

fn y_step(
    m: &Tensor3,
    weights: &Tensor3,
    estimate: &Tensor3,
    state: &SpectralFactorState,
    lambda: f64,
) -> Result<(YStep, Tensor3)> {
    let n3 = state.xbar.len();
    let scale = C64::new(1.0 / n3 as f64, 0.0);
    let rw = m.zip_with(estimate, |a, b| a - b)?.hadamard(weights)?;
    let rbar = fft_mode3(&rw);
    let mut g: Vec<DMatrix<C64>> = Vec::with_capacity(n3);
    let mut gp: Vec<DMatrix<C64>> = Vec::with_capacity(n3);
    for k in 0..half_len(n3) {
        let xh = state.xbar[k].adjoint();
        let gk = -cmul(&xh, &rbar.slice(k)) * scale;
        let inv = gram_inverse(&(&xh * &state.xbar[k]), k)?;
        gp.push((inv * &gk) * C64::new(n3 as f64, 0.0));
        g.push(gk);
    }
    g.resize(n3, DMatrix::zeros(0, 0));
    gp.resize(n3, DMatrix::zeros(0, 0));
    enforce_symmetry(&mut g);
    enforce_symmetry(&mut gp);
    let grad_norm_sq = stack_norm_sq(&g);
    let grad_dot_scaled = stack_dot_re(&g, &gp);
    // returns the step and ifft(X_bar dir), the change of X * Y per unit step
    let line = |dir: &[DMatrix<C64>], num: f64| -> Result<(f64, Option<Tensor3>)> {
        if num == 0.0 {
            return Ok((0.0, None));
        }
        let image = spectral_to_real(&products(&state.xbar, dir))?;
        let den = weighted_sq(weights, &image);
        Ok(if den > 0.0 { (num / den, Some(image)) } else { (0.0, None) })
    };
    let (mu_plain, img_plain) = line(&g, grad_norm_sq)?;
    let (mu_scaled, img_scaled) = line(&gp, grad_dot_scaled)?;
    let (a, b) = ((1.0 - lambda) * mu_plain, lambda * mu_scaled);
    let mut next = state.clone();
    for ((y, gk), gpk) in next.ybar.iter_mut().zip(&g).zip(&gp) {
        *y -= gk * C64::new(a, 0.0) + gpk * C64::new(b, 0.0);
    }
    let mut moved = estimate.clone();
    for (img, c) in [(img_plain, a), (img_scaled, b)] {
        if let Some(img) = img {
            moved.as_mut_slice().iter_mut().zip(img.as_slice()).for_each(|(e, d)| *e -= c * d);
        }
    }
    Ok((
        YStep {
            mu_plain,
            mu_scaled,
            grad_norm_sq,
            grad_dot_scaled,
            state: next,
        },
        moved,
    ))
}

/// HQ-TCASD, or TCASD when `config.robust` is false.
///
/// Each iteration updates the kernel width and weights, then `X`, then `Y`
/// with its gradient taken at the new `X`. The traced cost is the C-loss of
/// the observed residuals (`0.5 ||P o (M - X*Y)||^2` in the non-robust case).
pub fn hq_tcasd(m: &Tensor3, mask: &ObservationMask, config: &SolverConfig) -> Result<SolveReport> {
    config.validate_for(m, mask)?;
    let (n1, n2, n3) = m.dims();
    let (x, y) = init_factors(n1, n2, n3, config.rank, config.seed)?;
    let state = SpectralFactorState::from_factors(&x, &y)?;
    let kind = if config.robust {
        SolverKind::HqTcasd
    } else {
        SolverKind::Tcasd
    };
    let lambda = config.lambda;
    run_loop(
        kind,
        m,
        mask,
        config,
        state,
        |ev| match ev.sigma {
            Some(s) => c_loss(&ev.observed, s),
            None => Ok(half_sq(&ev.observed)),
        },
        |state, ev, estimate, record| {
            let rw = ev.residual.hadamard(&ev.weights)?;
            let grad = tcasd_grad_u(&rw, state)?;
            let (u, image) = u_step(&grad, state, &ev.weights)?;
            let moved = match image {
                Some(img) => estimate.zip_with(&img, |e, d| e - u.mu * d)?,
                None => estimate.clone(),
            };
            let (ys, next) = y_step(m, &ev.weights, &moved, &u.state, lambda)?;
            record.step_u = Some(u.mu);
            record.step_y = Some(ys.mu_plain);
            record.step_y_scaled = Some(ys.mu_scaled);
            *state = ys.state;
            Ok(Some(next))
        },
    )
}
