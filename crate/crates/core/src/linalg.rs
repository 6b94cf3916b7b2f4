//! Per-slice dense kernels: SVD with full unitary factors, pseudo-inverse and
//! a guarded Hermitian inverse.

use alloc::vec::Vec;

use nalgebra::{DMatrix, Dyn, Matrix, Storage};

use crate::{Error, Result, C64};

const SVD_MAX_ITERS: usize = 10_000;

// A tighter threshold leaves nalgebra's complex QR sweep deflating too late on
// rank-deficient input and the returned vectors stop reconstructing the matrix.
const SVD_EPS: f64 = 5.0 * f64::EPSILON;

/// Ridge is added to a Gram matrix once its condition number exceeds this.
pub(crate) const MAX_CONDITION: f64 = 1e12;

pub(crate) struct SliceSvd {
    /// `m x m` unitary (or `m x min(m, n)` when `full` was not requested).
    pub u: DMatrix<C64>,
    /// Singular values, nonincreasing.
    pub s: Vec<f64>,
    /// `n x n` unitary `V` (not `V^*`).
    pub v: DMatrix<C64>,
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|v| C64::new(v, 0.0))
}

/// Extend orthonormal columns to a full unitary basis of `C^rows`.
fn complete_basis(thin: DMatrix<C64>) -> DMatrix<C64> {
    let (rows, cols) = thin.shape();
    if cols == rows {
        return thin;
    }
    let mut aug = DMatrix::<C64>::zeros(rows, cols + rows);
    aug.columns_mut(0, cols).copy_from(&thin);
    aug.columns_mut(cols, rows)
        .copy_from(&DMatrix::<C64>::identity(rows, rows));
    let mut q = aug.qr().q();
    q.columns_mut(0, cols).copy_from(&thin);
    q
}

/// SVD of one frequency slice. `real_slice` marks slices that are real by
/// conjugate symmetry (k = 0 and k = n3/2); those are factored in real
/// arithmetic so their factors stay exactly real.
pub(crate) fn slice_svd(
    m: &DMatrix<C64>,
    slice: usize,
    real_slice: bool,
    want_vectors: bool,
    full: bool,
) -> Result<SliceSvd> {
    let (rows, cols) = m.shape();
    let (u, s, v_t) = if real_slice {
        let re = m.map(|v| v.re);
        let svd = re
            .try_svd(want_vectors, want_vectors, SVD_EPS, SVD_MAX_ITERS)
            .ok_or(Error::SvdNoConvergence { slice })?;
        (
            svd.u.map(|u| to_complex(&u)),
            svd.singular_values.iter().copied().collect::<Vec<_>>(),
            svd.v_t.map(|v| to_complex(&v)),
        )
    } else {
        let svd = m
            .clone()
            .try_svd(want_vectors, want_vectors, SVD_EPS, SVD_MAX_ITERS)
            .ok_or(Error::SvdNoConvergence { slice })?;
        (
            svd.u,
            svd.singular_values.iter().copied().collect::<Vec<_>>(),
            svd.v_t,
        )
    };
    let (u, v) = match (u, v_t) {
        (Some(u), Some(v_t)) => {
            let v = v_t.adjoint();
            if full {
                (complete_basis(u), complete_basis(v))
            } else {
                (u, v)
            }
        }
        _ => (
            DMatrix::zeros(rows, 0),
            DMatrix::zeros(cols, 0),
        ),
    };
    Ok(SliceSvd { u, s, v })
}

/// Complex product computed as four real products, which run on the blocked
/// real kernel instead of the generic complex one.
pub(crate) fn cmul<S1, S2>(
    a: &Matrix<C64, Dyn, Dyn, S1>,
    b: &Matrix<C64, Dyn, Dyn, S2>,
) -> DMatrix<C64>
where
    S1: Storage<C64, Dyn, Dyn>,
    S2: Storage<C64, Dyn, Dyn>,
{
    if a.nrows() * a.ncols() * b.ncols() < 4096 {
        return a * b;
    }
    let (ar, ai) = (a.map(|v| v.re), a.map(|v| v.im));
    let (br, bi) = (b.map(|v| v.re), b.map(|v| v.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    re.zip_map(&im, C64::new)
}

/// Moore-Penrose pseudo-inverse with cutoff `max(m, n) * eps * s_max`.
pub(crate) fn pinv(m: &DMatrix<C64>, slice: usize) -> Result<DMatrix<C64>> {
    let (rows, cols) = m.shape();
    let svd = slice_svd(m, slice, false, true, false)?;
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let cutoff = rows.max(cols) as f64 * f64::EPSILON * smax;
    let mut out = DMatrix::<C64>::zeros(cols, rows);
    for (idx, &s) in svd.s.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            let vi = svd.v.column(idx);
            let ui = svd.u.column(idx);
            out += (vi * ui.adjoint()) * C64::new(1.0 / s, 0.0);
        }
    }
    if out.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::PseudoInverse { slice });
    }
    Ok(out)
}

/// Inverse of a Hermitian positive semidefinite Gram matrix. When the
/// condition number exceeds [`MAX_CONDITION`] a ridge of
/// `1e-12 * trace / r` is added first. An all-zero matrix maps to zero.
pub(crate) fn gram_inverse(g: &DMatrix<C64>, slice: usize) -> Result<DMatrix<C64>> {
    let r = g.nrows();
    let trace: f64 = (0..r).map(|i| g[(i, i)].re).sum();
    if trace <= 0.0 {
        return Ok(DMatrix::zeros(r, r));
    }
    // symmetrise against roundoff before the Hermitian eigensolver
    let h = (g + g.adjoint()) * C64::new(0.5, 0.0);
    let eig = h
        .try_symmetric_eigen(f64::EPSILON, SVD_MAX_ITERS)
        .ok_or(Error::PseudoInverse { slice })?;
    let lmax = eig.eigenvalues.iter().copied().fold(f64::MIN, f64::max);
    let lmin = eig.eigenvalues.iter().copied().fold(f64::MAX, f64::min);
    let ridge = if lmin <= 0.0 || lmax / lmin > MAX_CONDITION {
        1e-12 * trace / r as f64
    } else {
        0.0
    };
    let mut scaled = eig.eigenvectors.clone();
    for (c, &l) in eig.eigenvalues.iter().enumerate() {
        let d = l.max(0.0) + ridge;
        if d <= 0.0 {
            return Err(Error::PseudoInverse { slice });
        }
        scaled.column_mut(c).scale_mut(1.0 / d);
    }
    Ok(scaled * eig.eigenvectors.adjoint())
}
