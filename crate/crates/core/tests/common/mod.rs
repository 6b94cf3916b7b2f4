//! Reference implementations used as test oracles. Everything here works from
//! the textbook definitions with dense matrices and explicit sums, and shares
//! no code with the library's transform or product kernels.

#![allow(dead_code)]

use std::f64::consts::PI;

use hqtc_core::{Tensor3, C64};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut ChaCha8Rng, n1: usize, n2: usize, n3: usize) -> Tensor3 {
    Tensor3::from_fn(n1, n2, n3, |_, _, _| rng.random_range(-1.0..1.0))
}

pub fn random_dims(rng: &mut ChaCha8Rng, max: (usize, usize, usize)) -> (usize, usize, usize) {
    (
        rng.random_range(1..=max.0),
        rng.random_range(1..=max.1),
        rng.random_range(1..=max.2),
    )
}

pub fn rel_diff(a: &Tensor3, b: &Tensor3) -> f64 {
    assert_eq!(a.dims(), b.dims());
    let num: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.as_slice().iter().map(|y| y * y).sum();
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

/// `[A_1; A_2; ...; A_n3]`, `n1 n3 x n2`.
pub fn unfold_real(a: &Tensor3) -> DMatrix<f64> {
    let (n1, n2, n3) = a.dims();
    DMatrix::from_fn(n1 * n3, n2, |row, j| a.get(row % n1, j, row / n1))
}

pub fn fold_real(m: &DMatrix<f64>, n1: usize, n3: usize) -> Tensor3 {
    Tensor3::from_fn(n1, m.ncols(), n3, |i, j, k| m[(k * n1 + i, j)])
}

/// Block-circulant matrix whose block `(p, q)` is the frontal slice
/// `A_{(p - q) mod n3}`.
pub fn bcirc(a: &Tensor3) -> DMatrix<f64> {
    let (n1, n2, n3) = a.dims();
    DMatrix::from_fn(n1 * n3, n2 * n3, |row, col| {
        let (p, i) = (row / n1, row % n1);
        let (q, j) = (col / n2, col % n2);
        a.get(i, j, (p + n3 - q) % n3)
    })
}

/// `fold(bcirc(a) unfold(b))`.
pub fn bcirc_product(a: &Tensor3, b: &Tensor3) -> Tensor3 {
    let (n1, _, n3) = a.dims();
    fold_real(&(bcirc(a) * unfold_real(b)), n1, n3)
}

fn omega(jk: usize, n: usize) -> C64 {
    let t = -2.0 * PI * (jk % n) as f64 / n as f64;
    C64::new(t.cos(), t.sin())
}

/// `F[j, k] = exp(-2 pi i jk / n)`.
pub fn dft_matrix(n: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |j, k| omega(j * k, n))
}

/// Frequency slices of `a` from the explicit DFT sum along each tube.
pub fn dft_slices(a: &Tensor3) -> Vec<DMatrix<C64>> {
    let (n1, n2, n3) = a.dims();
    (0..n3)
        .map(|k| {
            DMatrix::from_fn(n1, n2, |i, j| {
                (0..n3).map(|l| omega(k * l, n3) * a.get(i, j, l)).sum()
            })
        })
        .collect()
}

/// Inverse of [`dft_slices`], keeping the real part. Returns the largest
/// imaginary magnitude alongside.
pub fn idft_slices(slices: &[DMatrix<C64>]) -> (Tensor3, f64) {
    let n3 = slices.len();
    let (n1, n2) = slices[0].shape();
    let mut imag: f64 = 0.0;
    let t = Tensor3::from_fn(n1, n2, n3, |i, j, l| {
        let v: C64 = (0..n3)
            .map(|k| omega(k * l, n3).conj() * slices[k][(i, j)])
            .sum::<C64>()
            / n3 as f64;
        imag = imag.max(v.im.abs());
        v.re
    });
    (t, imag)
}

pub fn singular_values(m: &DMatrix<C64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Per-slice numerical ranks with the threshold `max(n1, n2) eps s_max`,
/// `s_max` being the largest singular value over all slices.
pub fn slice_ranks(a: &Tensor3) -> Vec<usize> {
    let (n1, n2, _) = a.dims();
    let svs: Vec<Vec<f64>> = dft_slices(a).iter().map(singular_values).collect();
    let smax = svs.iter().flatten().copied().fold(0.0, f64::max);
    let tol = n1.max(n2) as f64 * f64::EPSILON * smax;
    svs.iter().map(|s| s.iter().filter(|&&v| v > tol).count()).collect()
}

/// Best rank-`r` approximation of every frequency slice, transformed back.
pub fn truncate_oracle(a: &Tensor3, r: usize) -> Tensor3 {
    let slices: Vec<DMatrix<C64>> = dft_slices(a)
        .into_iter()
        .map(|m| {
            let (rows, cols) = m.shape();
            let svd = m.svd(true, true);
            let (u, v) = (svd.u.unwrap(), svd.v_t.unwrap());
            let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
            order.sort_by(|&p, &q| svd.singular_values[q].total_cmp(&svd.singular_values[p]));
            let mut out = DMatrix::<C64>::zeros(rows, cols);
            for &c in order.iter().take(r) {
                let s = C64::new(svd.singular_values[c], 0.0);
                out += u.column(c) * v.row(c) * s;
            }
            out
        })
        .collect();
    idft_slices(&slices).0
}

/// `0.5 sum w (m - est)^2` by explicit loops.
pub fn weighted_half_sq(m: &Tensor3, w: &Tensor3, est: &Tensor3) -> f64 {
    let (n1, n2, n3) = m.dims();
    let mut s = 0.0;
    for k in 0..n3 {
        for j in 0..n2 {
            for i in 0..n1 {
                let e = m.get(i, j, k) - est.get(i, j, k);
                s += w.get(i, j, k) * e * e;
            }
        }
    }
    0.5 * s
}

pub fn kron_identity(f: &DMatrix<C64>, n: usize) -> DMatrix<C64> {
    let m = f.nrows();
    DMatrix::from_fn(m * n, m * n, |r, c| {
        if r % n == c % n {
            f[(r / n, c / n)]
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

pub fn block_diag(blocks: &[DMatrix<C64>]) -> DMatrix<C64> {
    let (p, q) = blocks[0].shape();
    let mut out = DMatrix::zeros(p * blocks.len(), q * blocks.len());
    for (k, b) in blocks.iter().enumerate() {
        out.view_mut((k * p, k * q), (p, q)).copy_from(b);
    }
    out
}

pub fn stack(blocks: &[DMatrix<C64>]) -> DMatrix<C64> {
    let (p, q) = blocks[0].shape();
    let mut out = DMatrix::zeros(p * blocks.len(), q);
    for (k, b) in blocks.iter().enumerate() {
        out.view_mut((k * p, 0), (p, q)).copy_from(b);
    }
    out
}

pub fn unstack(m: &DMatrix<C64>, n: usize) -> Vec<DMatrix<C64>> {
    let p = m.nrows() / n;
    (0..n).map(|k| m.rows(k * p, p).into_owned()).collect()
}

fn complexify(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|v| C64::new(v, 0.0))
}

/// Keep the diagonal `p x q` blocks of an `np x nq` matrix, zero the rest.
pub fn bdiagz(m: &DMatrix<C64>, n: usize) -> DMatrix<C64> {
    let (p, q) = (m.nrows() / n, m.ncols() / n);
    DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| {
        if r / p == c / q {
            m[(r, c)]
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// The steepest-descent problem in matrix form:
/// `J(U, Yhat) = 0.5 ||sqrt(W~) o (M~ - U Yhat)||^2` with
/// `U = (F^{-1} (x) I) bdiag(X_bar)` (`n1 n3 x r n3`) and `Yhat` the stacked `Y_bar`.
#[derive(Clone)]
pub struct MatrixForm {
    pub n3: usize,
    pub f: DMatrix<C64>,
    pub finv: DMatrix<C64>,
    pub u: DMatrix<C64>,
    pub yhat: DMatrix<C64>,
    pub m: DMatrix<C64>,
    pub w: DMatrix<C64>,
}

impl MatrixForm {
    pub fn new(m: &Tensor3, w: &Tensor3, x: &Tensor3, y: &Tensor3) -> Self {
        let (n1, _, n3) = m.dims();
        let f = dft_matrix(n3);
        let finv = f.adjoint() / C64::new(n3 as f64, 0.0);
        let u = kron_identity(&finv, n1) * block_diag(&dft_slices(x));
        MatrixForm {
            n3,
            f: kron_identity(&f, n1),
            finv: kron_identity(&finv, n1),
            u,
            yhat: stack(&dft_slices(y)),
            m: complexify(&unfold_real(m)),
            w: complexify(&unfold_real(w)),
        }
    }

    pub fn with_u(&self, u: DMatrix<C64>) -> Self {
        MatrixForm { u, ..self.clone() }
    }

    pub fn with_yhat(&self, yhat: DMatrix<C64>) -> Self {
        MatrixForm { yhat, ..self.clone() }
    }

    /// `W~ o (M~ - U Yhat)`.
    pub fn weighted_residual(&self) -> DMatrix<C64> {
        self.w.component_mul(&(&self.m - &self.u * &self.yhat))
    }

    pub fn objective(&self) -> f64 {
        let r = &self.m - &self.u * &self.yhat;
        0.5 * r.iter().zip(self.w.iter()).map(|(e, w)| w.re * e.norm_sqr()).sum::<f64>()
    }

    /// `||sqrt(W~) o A||^2`.
    pub fn weighted_sq(&self, a: &DMatrix<C64>) -> f64 {
        a.iter().zip(self.w.iter()).map(|(e, w)| w.re * e.norm_sqr()).sum()
    }

    /// `g'_U = F^{-1} bdiagz(F g_U)` with `g_U = -(W~ o (M~ - U Yhat)) Yhat^*`.
    pub fn grad_u(&self) -> DMatrix<C64> {
        let g = -(self.weighted_residual() * self.yhat.adjoint());
        &self.finv * bdiagz(&(&self.f * g), self.n3)
    }

    /// Exact line-search step along `g'_U`.
    pub fn step_u(&self) -> f64 {
        let g = self.grad_u();
        g.norm_squared() / self.weighted_sq(&(&g * &self.yhat))
    }

    /// `g_Y = -U^* (W~ o (M~ - U Yhat))` and `g'_Y = (U^* U)^{-1} g_Y`.
    pub fn grad_y(&self) -> (DMatrix<C64>, DMatrix<C64>) {
        let g = -(self.u.adjoint() * self.weighted_residual());
        let gram = self.u.adjoint() * &self.u;
        let gp = gram.lu().solve(&g).expect("U*U is invertible");
        (g, gp)
    }

    /// Exact line-search steps along `g_Y` and `g'_Y`.
    pub fn steps_y(&self) -> (f64, f64) {
        let (g, gp) = self.grad_y();
        let plain = g.norm_squared() / self.weighted_sq(&(&self.u * &g));
        let dot: f64 = g.iter().zip(gp.iter()).map(|(a, b)| (a.conj() * b).re).sum();
        (plain, dot / self.weighted_sq(&(&self.u * &gp)))
    }
}

/// `(F^{-1} (x) I) bdiag(blocks)`, the matrix form of a block-diagonal
/// frequency-domain quantity.
pub fn u_form(blocks: &[DMatrix<C64>]) -> DMatrix<C64> {
    let n3 = blocks.len();
    let finv = dft_matrix(n3).adjoint() / C64::new(n3 as f64, 0.0);
    kron_identity(&finv, blocks[0].nrows()) * block_diag(blocks)
}

pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

pub fn max_abs(a: &DMatrix<C64>) -> f64 {
    a.iter().map(|p| p.norm()).fold(0.0, f64::max)
}

/// Type-7 quantile by full sort.
pub fn quantile_oracle(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Alternating least squares with projection onto the observations, written
/// directly from the per-slice normal equations.
pub fn direct_tctf(
    m: &Tensor3,
    p: &Tensor3,
    x0: &Tensor3,
    y0: &Tensor3,
    iterations: usize,
) -> Vec<Tensor3> {
    let mut xbar = dft_slices(x0);
    let mut ybar = dft_slices(y0);
    let estimate = |xb: &[DMatrix<C64>], yb: &[DMatrix<C64>]| {
        let prods: Vec<DMatrix<C64>> = xb.iter().zip(yb).map(|(a, b)| a * b).collect();
        idft_slices(&prods).0
    };
    let mut est = estimate(&xbar, &ybar);
    let mut out = Vec::new();
    for _ in 0..iterations {
        let z = Tensor3::from_fn(m.dims().0, m.dims().1, m.dims().2, |i, j, k| {
            if p.get(i, j, k) != 0.0 {
                m.get(i, j, k)
            } else {
                est.get(i, j, k)
            }
        });
        let zbar = dft_slices(&z);
        for k in 0..zbar.len() {
            let y = &ybar[k];
            let yyh = y * y.adjoint();
            let x = (&zbar[k] * y.adjoint()) * yyh.try_inverse().expect("YY* invertible");
            let xhx = x.adjoint() * &x;
            ybar[k] = xhx.try_inverse().expect("X*X invertible") * x.adjoint() * &zbar[k];
            xbar[k] = x;
        }
        est = estimate(&xbar, &ybar);
        out.push(est.clone());
    }
    out
}
