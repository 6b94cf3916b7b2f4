//! t-SVD, tubal rank, multi-rank and best tubal-rank-r approximation.
//!
//! All of these work slice by slice on the mode-3 spectrum. Only the leading
//! `n3/2 + 1` slices are factored; the remaining ones are conjugate mirrors,
//! which keeps the spatial-domain factors real.

use alloc::vec::Vec;
use alloc::vec;

use nalgebra::DMatrix;

use crate::linalg::slice_svd;
use crate::tensor::{fft_mode3, half_len, ifft_mode3_real, t_product, SpectralTensor, Tensor3};
use crate::{Error, Result, C64};

/// Factors of `A = U * S * V^T`.
#[derive(Debug, Clone)]
pub struct TSvdResult {
    /// `n1 x n1 x n3`, orthogonal under the t-product.
    pub u: Tensor3,
    /// `n1 x n2 x n3`, f-diagonal.
    pub s: Tensor3,
    /// `n2 x n2 x n3`, orthogonal under the t-product.
    pub v: Tensor3,
    /// Singular values of every frequency slice, nonincreasing per slice.
    pub singular_values: Vec<Vec<f64>>,
}

impl TSvdResult {
    /// `U * S * V^T`.
    pub fn reconstruct(&self) -> Result<Tensor3> {
        t_product(&t_product(&self.u, &self.s)?, &self.v.t_transpose())
    }
}

#[inline]
pub(crate) fn is_real_slice(k: usize, n3: usize) -> bool {
    k == 0 || (n3 % 2 == 0 && k == n3 / 2)
}

pub fn t_svd(a: &Tensor3) -> Result<TSvdResult> {
    let (n1, n2, n3) = a.dims();
    let spec = fft_mode3(a);
    let mut u = SpectralTensor::zeros(n1, n1, n3);
    let mut s = SpectralTensor::zeros(n1, n2, n3);
    let mut v = SpectralTensor::zeros(n2, n2, n3);
    let mut values = vec![Vec::new(); n3];
    for k in 0..half_len(n3) {
        let f = slice_svd(&spec.slice(k).into_owned(), k, is_real_slice(k, n3), true, true)?;
        u.slice_mut(k).copy_from(&f.u);
        v.slice_mut(k).copy_from(&f.v);
        let mut sk = s.slice_mut(k);
        for (i, &sv) in f.s.iter().enumerate() {
            sk[(i, i)] = C64::new(sv, 0.0);
        }
        values[k] = f.s;
    }
    for k in half_len(n3)..n3 {
        values[k] = values[n3 - k].clone();
    }
    u.mirror_conjugate_half();
    s.mirror_conjugate_half();
    v.mirror_conjugate_half();
    Ok(TSvdResult {
        u: ifft_mode3_real(&u)?,
        s: ifft_mode3_real(&s)?,
        v: ifft_mode3_real(&v)?,
        singular_values: values,
    })
}

/// Singular values of every frequency slice (no singular vectors).
pub fn spectral_singular_values(a: &Tensor3) -> Result<Vec<Vec<f64>>> {
    let (_, _, n3) = a.dims();
    let spec = fft_mode3(a);
    let mut values = vec![Vec::new(); n3];
    for k in 0..half_len(n3) {
        values[k] =
            slice_svd(&spec.slice(k).into_owned(), k, is_real_slice(k, n3), false, false)?.s;
    }
    for k in half_len(n3)..n3 {
        values[k] = values[n3 - k].clone();
    }
    Ok(values)
}

/// Default relative rank threshold, `max(n1, n2) * eps`.
pub fn default_rank_tol(a: &Tensor3) -> f64 {
    let (n1, n2, _) = a.dims();
    n1.max(n2) as f64 * f64::EPSILON
}

/// Per-slice ranks of the spectrum. A singular value counts when it exceeds
/// `tol` times the largest singular value over all slices; `None` selects
/// [`default_rank_tol`].
pub fn multi_rank(a: &Tensor3, tol: Option<f64>) -> Result<Vec<usize>> {
    let tol = tol.unwrap_or_else(|| default_rank_tol(a));
    if !(tol >= 0.0) {
        return Err(Error::param("tol", "must be nonnegative"));
    }
    let values = spectral_singular_values(a)?;
    let smax = values
        .iter()
        .flat_map(|v| v.iter().copied())
        .fold(0.0, f64::max);
    let threshold = tol * smax;
    Ok(values
        .iter()
        .map(|v| v.iter().filter(|&&s| s > threshold && s > 0.0).count())
        .collect())
}

/// Number of nonzero singular tubes, i.e. the largest entry of [`multi_rank`].
pub fn tubal_rank(a: &Tensor3, tol: Option<f64>) -> Result<usize> {
    Ok(multi_rank(a, tol)?.into_iter().max().unwrap_or(0))
}

/// Best approximation of tubal rank at most `r`: the leading `r` singular
/// triplets are kept in every frequency slice.
pub fn truncate_tubal_rank(a: &Tensor3, r: usize) -> Result<Tensor3> {
    let (n1, n2, n3) = a.dims();
    let max = n1.min(n2);
    if r == 0 || r > max {
        return Err(Error::RankOutOfRange { rank: r, max });
    }
    let spec = fft_mode3(a);
    let mut out = SpectralTensor::zeros(n1, n2, n3);
    for k in 0..half_len(n3) {
        let f = slice_svd(&spec.slice(k).into_owned(), k, is_real_slice(k, n3), true, false)?;
        let keep = r.min(f.s.len());
        let mut approx = DMatrix::<C64>::zeros(n1, n2);
        for idx in 0..keep {
            approx += (f.u.column(idx) * f.v.column(idx).adjoint()) * C64::new(f.s[idx], 0.0);
        }
        out.slice_mut(k).copy_from(&approx);
    }
    out.mirror_conjugate_half();
    ifft_mode3_real(&out)
}
