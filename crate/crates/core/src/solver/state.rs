use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::cmul;
use crate::tensor::{fft_mode3, half_len, ifft_mode3_real, SpectralTensor, Tensor3};
use crate::tsvd::is_real_slice;
use crate::{Error, Result, C64};

/// Frequency-domain factors `X_bar^(k)` (`n1 x r`) and `Y_bar^(k)` (`r x n2`)
/// of a tubal-rank-`r` model `X * Y`, one pair per frequency slice.
///
/// Built from real tensors and updated only through conjugate-symmetric
/// operations, so the spatial factors and the estimate stay real.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFactorState {
    pub(crate) xbar: Vec<DMatrix<C64>>,
    pub(crate) ybar: Vec<DMatrix<C64>>,
}

impl SpectralFactorState {
    /// State of the spatial factors `x` (`n1 x r x n3`) and `y` (`r x n2 x n3`).
    pub fn from_factors(x: &Tensor3, y: &Tensor3) -> Result<Self> {
        let (_, r, n3) = x.dims();
        let (ry, _, ny) = y.dims();
        if r != ry || n3 != ny {
            return Err(Error::mismatch(
                "SpectralFactorState::from_factors",
                format!("{:?} and {:?}", x.dims(), y.dims()),
            ));
        }
        Ok(SpectralFactorState {
            xbar: fft_mode3(x).slices(),
            ybar: fft_mode3(y).slices(),
        })
    }

    /// State built directly from frequency slices. The slices must be
    /// conjugate symmetric for the estimate to be real.
    pub fn from_spectral(xbar: Vec<DMatrix<C64>>, ybar: Vec<DMatrix<C64>>) -> Result<Self> {
        let ok = !xbar.is_empty()
            && xbar.len() == ybar.len()
            && xbar.iter().all(|s| s.shape() == xbar[0].shape())
            && ybar.iter().all(|s| s.shape() == ybar[0].shape())
            && xbar[0].ncols() == ybar[0].nrows();
        if !ok {
            return Err(Error::mismatch(
                "SpectralFactorState::from_spectral",
                "slices must be conformable and equally many".into(),
            ));
        }
        Ok(SpectralFactorState { xbar, ybar })
    }

    /// `(n1, n2, n3, r)`.
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        let (n1, r) = self.xbar[0].shape();
        (n1, self.ybar[0].ncols(), self.xbar.len(), r)
    }

    pub fn rank(&self) -> usize {
        self.xbar[0].ncols()
    }

    pub fn xbar(&self) -> &[DMatrix<C64>] {
        &self.xbar
    }

    pub fn ybar(&self) -> &[DMatrix<C64>] {
        &self.ybar
    }

    pub fn x(&self) -> Result<Tensor3> {
        spectral_to_real(&self.xbar)
    }

    pub fn y(&self) -> Result<Tensor3> {
        spectral_to_real(&self.ybar)
    }

    /// `X * Y`.
    pub fn estimate(&self) -> Result<Tensor3> {
        spectral_to_real(&products(&self.xbar, &self.ybar))
    }
}

/// Gaussian factors for a rank-`r` model of an `n1 x n2 x n3` tensor.
///
/// Entries are i.i.d. `N(0, 1 / sqrt(r n3))`, so `E ||X * Y||_F^2 = n1 n2 n3`.
pub fn init_factors(
    n1: usize,
    n2: usize,
    n3: usize,
    r: usize,
    seed: u64,
) -> Result<(Tensor3, Tensor3)> {
    let max = n1.min(n2);
    if r == 0 || r > max {
        return Err(Error::RankOutOfRange { rank: r, max });
    }
    let scale = libm::pow((r * n3) as f64, -0.25);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |_, _, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        scale * z
    };
    let x = Tensor3::from_fn(n1, r, n3, &mut draw);
    let y = Tensor3::from_fn(r, n2, n3, &mut draw);
    Ok((x, y))
}

/// Make the slice stack conjugate symmetric: slices that must be real lose
/// their imaginary roundoff and slices past `n3/2` mirror their partners.
pub(crate) fn enforce_symmetry(slices: &mut [DMatrix<C64>]) {
    let n3 = slices.len();
    for k in 0..half_len(n3) {
        if is_real_slice(k, n3) {
            slices[k].iter_mut().for_each(|v| v.im = 0.0);
        }
    }
    for k in half_len(n3)..n3 {
        slices[k] = slices[n3 - k].map(|v| v.conj());
    }
}

/// Slice-wise products `a^(k) b^(k)` of two conjugate-symmetric stacks.
pub(crate) fn products(a: &[DMatrix<C64>], b: &[DMatrix<C64>]) -> Vec<DMatrix<C64>> {
    let n3 = a.len();
    let mut out: Vec<DMatrix<C64>> = (0..n3)
        .map(|k| {
            if k < half_len(n3) {
                cmul(&a[k], &b[k])
            } else {
                DMatrix::zeros(0, 0)
            }
        })
        .collect();
    enforce_symmetry(&mut out);
    out
}

pub(crate) fn spectral_to_real(slices: &[DMatrix<C64>]) -> Result<Tensor3> {
    ifft_mode3_real(&SpectralTensor::from_slices(slices)?)
}

/// Squared Frobenius norm summed over every slice.
pub(crate) fn stack_norm_sq(slices: &[DMatrix<C64>]) -> f64 {
    slices.iter().map(|s| s.norm_squared()).sum()
}

/// `Re sum_k <a^(k), b^(k)>`.
pub(crate) fn stack_dot_re(a: &[DMatrix<C64>], b: &[DMatrix<C64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y.iter()).map(|(p, q)| (p.conj() * q).re).sum::<f64>())
        .sum()
}
