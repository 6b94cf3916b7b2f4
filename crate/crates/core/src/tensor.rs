//! Dense third-order tensors and their mode-3 Fourier representation.
//!
//! Storage is column-major over `(i, j, k)`: `i` varies fastest, then `j`,
//! then `k`. Every frontal slice `A(:, :, k)` is therefore one contiguous
//! column-major `n1 x n2` block, which is what the t-product and the file
//! format both rely on.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};

use crate::fft::{twiddle, Dft};
use crate::{Error, Result, C64};

/// Relative bound on the imaginary part left by an inverse DFT of data that is
/// conjugate-symmetric by construction.
pub const REALNESS_TOL: f64 = 1e-8;

fn check_dims(n1: usize, n2: usize, n3: usize) -> Result<usize> {
    if n1 == 0 || n2 == 0 || n3 == 0 {
        return Err(Error::InvalidDims {
            n1,
            n2,
            n3,
            reason: "all dimensions must be positive",
        });
    }
    n1.checked_mul(n2)
        .and_then(|v| v.checked_mul(n3))
        .ok_or(Error::InvalidDims {
            n1,
            n2,
            n3,
            reason: "element count overflows",
        })
}

/// Dense real `n1 x n2 x n3` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    n1: usize,
    n2: usize,
    n3: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    /// All-zero tensor. Panics if a dimension is zero.
    pub fn zeros(n1: usize, n2: usize, n3: usize) -> Self {
        let len = check_dims(n1, n2, n3).expect("invalid tensor dimensions");
        Tensor3 {
            n1,
            n2,
            n3,
            data: vec![0.0; len],
        }
    }

    pub fn from_vec(n1: usize, n2: usize, n3: usize, data: Vec<f64>) -> Result<Self> {
        let len = check_dims(n1, n2, n3)?;
        if data.len() != len {
            return Err(Error::mismatch(
                "Tensor3::from_vec",
                format!("expected {len} values, got {}", data.len()),
            ));
        }
        Ok(Tensor3 { n1, n2, n3, data })
    }

    pub fn from_fn(
        n1: usize,
        n2: usize,
        n3: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut t = Tensor3::zeros(n1, n2, n3);
        for k in 0..n3 {
            for j in 0..n2 {
                for i in 0..n1 {
                    t.data[i + n1 * (j + n2 * k)] = f(i, j, k);
                }
            }
        }
        t
    }

    /// t-product identity: first frontal slice is `I_n`, the rest are zero.
    pub fn identity(n: usize, n3: usize) -> Self {
        let mut t = Tensor3::zeros(n, n, n3);
        for i in 0..n {
            t.data[i + n * i] = 1.0;
        }
        t
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n1, self.n2, self.n3)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.n1 && j < self.n2 && k < self.n3);
        i + self.n1 * (j + self.n2 * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let o = self.offset(i, j, k);
        self.data[o] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Frontal slice `A(:, :, k)` as an `n1 x n2` matrix view.
    pub fn frontal(&self, k: usize) -> DMatrixView<'_, f64> {
        let s = self.n1 * self.n2;
        DMatrixView::from_slice(&self.data[k * s..(k + 1) * s], self.n1, self.n2)
    }

    pub fn frontal_mut(&mut self, k: usize) -> DMatrixViewMut<'_, f64> {
        let s = self.n1 * self.n2;
        DMatrixViewMut::from_slice(&mut self.data[k * s..(k + 1) * s], self.n1, self.n2)
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Tensor3 {
        Tensor3 {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..*self
        }
    }

    /// Elementwise combination of two tensors with identical dimensions.
    pub fn zip_with(&self, other: &Tensor3, mut f: impl FnMut(f64, f64) -> f64) -> Result<Tensor3> {
        self.same_dims("zip_with", other)?;
        Ok(Tensor3 {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            ..*self
        })
    }

    pub fn sub(&self, other: &Tensor3) -> Result<Tensor3> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Tensor3) -> Result<Tensor3> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, alpha: f64) -> Tensor3 {
        self.map(|v| alpha * v)
    }

    /// Hadamard (elementwise) product.
    pub fn hadamard(&self, other: &Tensor3) -> Result<Tensor3> {
        self.zip_with(other, |a, b| a * b)
    }

    pub(crate) fn same_dims(&self, op: &'static str, other: &Tensor3) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::mismatch(
                op,
                format!("{:?} vs {:?}", self.dims(), other.dims()),
            ));
        }
        Ok(())
    }

    /// Tensor transpose `A^T`: every frontal slice transposed, slices 2..n3 in
    /// reverse order, so that `(A * B)^T = B^T * A^T`.
    pub fn t_transpose(&self) -> Tensor3 {
        let (n1, n2, n3) = self.dims();
        Tensor3::from_fn(n2, n1, n3, |i, j, k| self.get(j, i, (n3 - k) % n3))
    }
}

/// Complex `n1 x n2 x n3` array: a real tensor after the DFT along mode 3.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTensor {
    n1: usize,
    n2: usize,
    n3: usize,
    data: Vec<C64>,
}

impl SpectralTensor {
    pub fn zeros(n1: usize, n2: usize, n3: usize) -> Self {
        let len = check_dims(n1, n2, n3).expect("invalid tensor dimensions");
        SpectralTensor {
            n1,
            n2,
            n3,
            data: vec![C64::new(0.0, 0.0); len],
        }
    }

    /// Stack `n3` equally sized complex slices.
    pub fn from_slices(slices: &[DMatrix<C64>]) -> Result<Self> {
        let first = slices.first().ok_or(Error::InvalidDims {
            n1: 0,
            n2: 0,
            n3: 0,
            reason: "no slices",
        })?;
        let (n1, n2) = first.shape();
        let mut out = SpectralTensor::zeros(n1, n2, slices.len());
        for (k, s) in slices.iter().enumerate() {
            if s.shape() != (n1, n2) {
                return Err(Error::mismatch(
                    "SpectralTensor::from_slices",
                    format!("slice {k} is {:?}, expected {:?}", s.shape(), (n1, n2)),
                ));
            }
            out.slice_mut(k).copy_from(s);
        }
        Ok(out)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n1, self.n2, self.n3)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> C64 {
        self.data[i + self.n1 * (j + self.n2 * k)]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn slice(&self, k: usize) -> DMatrixView<'_, C64> {
        let s = self.n1 * self.n2;
        DMatrixView::from_slice(&self.data[k * s..(k + 1) * s], self.n1, self.n2)
    }

    pub fn slice_mut(&mut self, k: usize) -> DMatrixViewMut<'_, C64> {
        let s = self.n1 * self.n2;
        DMatrixViewMut::from_slice(&mut self.data[k * s..(k + 1) * s], self.n1, self.n2)
    }

    pub fn slices(&self) -> Vec<DMatrix<C64>> {
        (0..self.n3).map(|k| self.slice(k).into_owned()).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v.norm_sqr()).sum())
    }

    /// Overwrite slices `k > n3/2` with the conjugates of slices `n3 - k`.
    pub fn mirror_conjugate_half(&mut self) {
        mirror_half(&mut self.data, self.n1 * self.n2, self.n3);
    }

    /// Largest `|X[k] - conj(X[n3-k])|` over all entries.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let s = self.n1 * self.n2;
        let mut worst = 0.0f64;
        for k in 0..self.n3 {
            let m = (self.n3 - k) % self.n3;
            for e in 0..s {
                let d = self.data[k * s + e] - self.data[m * s + e].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }
}

pub(crate) fn mirror_half(data: &mut [C64], slice_len: usize, n3: usize) {
    for k in (n3 / 2 + 1)..n3 {
        let src = n3 - k;
        let (head, tail) = data.split_at_mut(k * slice_len);
        let from = &head[src * slice_len..(src + 1) * slice_len];
        for (dst, v) in tail[..slice_len].iter_mut().zip(from) {
            *dst = v.conj();
        }
    }
}

/// Number of leading frequency slices that determine a real tensor's spectrum.
#[inline]
pub(crate) fn half_len(n3: usize) -> usize {
    n3 / 2 + 1
}

/// Longest third dimension handled by the slice-wise kernels. They cost
/// `O(n3^2)` per tube but stream over contiguous frontal slices; longer
/// tubes go through the per-tube FFT plans.
const SLICEWISE_MAX: usize = 32;

fn transform_tubes(data: &mut [C64], tube_count: usize, n3: usize, inverse: bool) {
    if n3 == 1 {
        return;
    }
    let plan = Dft::new(n3);
    let mut tube = vec![C64::new(0.0, 0.0); n3];
    let mut scratch = Vec::new();
    for t in 0..tube_count {
        for (k, v) in tube.iter_mut().enumerate() {
            *v = data[t + tube_count * k];
        }
        if inverse {
            plan.inverse(&mut tube, &mut scratch);
        } else {
            plan.forward(&mut tube, &mut scratch);
        }
        for (k, v) in tube.iter().enumerate() {
            data[t + tube_count * k] = *v;
        }
    }
}

/// Elements per block in the slice-wise kernels, small enough that one block
/// of every slice stays in cache.
const BLOCK: usize = 1024;

/// Leading `n3/2 + 1` spectral slices of real slices `x`, accumulated into
/// separate real and imaginary buffers one block of entries at a time.
fn forward_real_slicewise(x: &[f64], s: usize, n3: usize, out: &mut [C64]) {
    let mut re = [0.0; BLOCK];
    let mut im = [0.0; BLOCK];
    for lo in (0..s).step_by(BLOCK) {
        let len = BLOCK.min(s - lo);
        let (re, im) = (&mut re[..len], &mut im[..len]);
        for k in 0..half_len(n3) {
            re.fill(0.0);
            im.fill(0.0);
            for j in 0..n3 {
                let w = twiddle(j * k, n3);
                let src = &x[j * s + lo..j * s + lo + len];
                if w.re != 0.0 {
                    re.iter_mut().zip(src).for_each(|(d, &v)| *d += w.re * v);
                }
                if w.im != 0.0 {
                    im.iter_mut().zip(src).for_each(|(d, &v)| *d += w.im * v);
                }
            }
            let dst = &mut out[k * s + lo..k * s + lo + len];
            for ((d, &r), &i) in dst.iter_mut().zip(re.iter()).zip(im.iter()) {
                *d = C64::new(r, i);
            }
        }
    }
}

/// Unnormalised DFT of every mode-3 tube.
pub fn fft_mode3(x: &Tensor3) -> SpectralTensor {
    let (n1, n2, n3) = x.dims();
    if n3 <= SLICEWISE_MAX {
        let mut out = SpectralTensor::zeros(n1, n2, n3);
        forward_real_slicewise(&x.data, n1 * n2, n3, &mut out.data);
        out.mirror_conjugate_half();
        return out;
    }
    let mut data: Vec<C64> = x.data.iter().map(|&v| C64::new(v, 0.0)).collect();
    transform_tubes(&mut data, n1 * n2, n3, false);
    SpectralTensor { n1, n2, n3, data }
}

/// Inverse of [`fft_mode3`] (divides by `n3`), keeping the complex result.
pub fn ifft_mode3(x: &SpectralTensor) -> SpectralTensor {
    let (n1, n2, n3) = x.dims();
    let mut data = x.data.clone();
    transform_tubes(&mut data, n1 * n2, n3, true);
    let scale = 1.0 / n3 as f64;
    for v in data.iter_mut() {
        *v *= scale;
    }
    SpectralTensor { n1, n2, n3, data }
}

/// Largest entry of the anti-Hermitian part `(X_k - conj X_{n3-k}) / 2`.
/// It bounds the imaginary part of the inverse transform.
fn antisymmetric_bound(x: &SpectralTensor) -> f64 {
    let s = x.n1 * x.n2;
    let mut worst = 0.0f64;
    for k in 0..half_len(x.n3) {
        let m = (x.n3 - k) % x.n3;
        let (a, b) = (&x.data[k * s..(k + 1) * s], &x.data[m * s..(m + 1) * s]);
        for (p, q) in a.iter().zip(b) {
            worst = worst.max(0.5 * (p - q.conj()).norm());
        }
    }
    worst
}

/// Real part of the inverse transform from the Hermitian part of the leading
/// `n3/2 + 1` slices, one block of entries at a time.
fn inverse_real_slicewise(x: &SpectralTensor, out: &mut [f64]) {
    let (s, n3) = (x.n1 * x.n2, x.n3);
    let h = half_len(n3);
    let scale = 1.0 / n3 as f64;
    let mut hr = vec![0.0; BLOCK * h];
    let mut hi = vec![0.0; BLOCK * h];
    for lo in (0..s).step_by(BLOCK) {
        let len = BLOCK.min(s - lo);
        for k in 0..h {
            let m = (n3 - k) % n3;
            // bins with k == n3 - k contribute once, the others twice
            let mult = if m == k { 0.5 } else { 1.0 };
            let a = &x.data[k * s + lo..k * s + lo + len];
            let b = &x.data[m * s + lo..m * s + lo + len];
            let (r, i) = (&mut hr[k * BLOCK..k * BLOCK + len], &mut hi[k * BLOCK..k * BLOCK + len]);
            for (((r, i), p), q) in r.iter_mut().zip(i.iter_mut()).zip(a).zip(b) {
                *r = (p.re + q.re) * mult;
                *i = (p.im - q.im) * mult;
            }
        }
        for j in 0..n3 {
            let dst = &mut out[j * s + lo..j * s + lo + len];
            for k in 0..h {
                // Re(H exp(+2 pi i jk / n3)) = H.re w.re + H.im w.im, w = twiddle
                let w = twiddle(j * k, n3);
                let (c, sn) = (w.re * scale, w.im * scale);
                if c != 0.0 {
                    let src = &hr[k * BLOCK..k * BLOCK + len];
                    dst.iter_mut().zip(src).for_each(|(d, &v)| *d += c * v);
                }
                if sn != 0.0 {
                    let src = &hi[k * BLOCK..k * BLOCK + len];
                    dst.iter_mut().zip(src).for_each(|(d, &v)| *d += sn * v);
                }
            }
        }
    }
}

/// Inverse DFT of a spectrum that is conjugate-symmetric by construction.
///
/// The imaginary part is discarded after checking that it is below
/// [`REALNESS_TOL`] relative to the real part.
pub fn ifft_mode3_real(x: &SpectralTensor) -> Result<Tensor3> {
    let (n1, n2, n3) = x.dims();
    let max_imag = antisymmetric_bound(x);
    let data = if n3 <= SLICEWISE_MAX {
        let mut out = vec![0.0; x.data.len()];
        inverse_real_slicewise(x, &mut out);
        out
    } else {
        ifft_mode3(x).data.into_iter().map(|v| v.re).collect()
    };
    let scale = data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_imag > REALNESS_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::ImaginaryResidue { max_imag, scale });
    }
    Ok(Tensor3 { n1, n2, n3, data })
}

/// Slice-wise product of two spectra computed from real tensors: only the
/// leading `n3/2 + 1` slices are multiplied, the rest are conjugate mirrors.
pub(crate) fn spectral_product_real(a: &SpectralTensor, b: &SpectralTensor) -> SpectralTensor {
    let (n1, _, n3) = a.dims();
    let n4 = b.dims().1;
    let mut out = SpectralTensor::zeros(n1, n4, n3);
    for k in 0..half_len(n3) {
        let p = a.slice(k) * b.slice(k);
        out.slice_mut(k).copy_from(&p);
    }
    out.mirror_conjugate_half();
    out
}

/// t-product `A * B` of an `n1 x n2 x n3` and an `n2 x n4 x n3` tensor,
/// computed as slice-wise matrix products in the Fourier domain.
pub fn t_product(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    let (_, n2, n3) = a.dims();
    let (m2, _, m3) = b.dims();
    if n2 != m2 || n3 != m3 {
        return Err(Error::mismatch(
            "t_product",
            format!("{:?} * {:?}", a.dims(), b.dims()),
        ));
    }
    let prod = spectral_product_real(&fft_mode3(a), &fft_mode3(b));
    ifft_mode3_real(&prod)
}

pub fn frobenius_norm(a: &Tensor3) -> f64 {
    a.frobenius_norm()
}

pub fn hadamard(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    a.hadamard(b)
}

/// Stack the frontal slices vertically into an `(n1 n3) x n2` matrix.
pub fn unfold(a: &Tensor3) -> DMatrix<f64> {
    let (n1, n2, n3) = a.dims();
    DMatrix::from_fn(n1 * n3, n2, |row, j| a.get(row % n1, j, row / n1))
}

/// Inverse of [`unfold`]: split the rows of `m` into `n3` frontal slices.
pub fn fold(m: &DMatrix<f64>, n3: usize) -> Result<Tensor3> {
    let (rows, n2) = m.shape();
    if n3 == 0 || rows % n3 != 0 || rows == 0 || n2 == 0 {
        return Err(Error::mismatch(
            "fold",
            format!("{rows} rows cannot be split into {n3} slices"),
        ));
    }
    let n1 = rows / n3;
    Ok(Tensor3::from_fn(n1, n2, n3, |i, j, k| m[(k * n1 + i, j)]))
}
