//! Length-`n` DFT plans for transforming mode-3 tubes.
//!
//! Forward transforms are unnormalised, `X[k] = sum_j x[j] exp(-2 pi i jk / n)`.
//! Power-of-two lengths use an iterative radix-2 kernel, short odd lengths a
//! tabulated direct sum, and longer lengths Bluestein's chirp-z reduction onto
//! a radix-2 convolution.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::C64;

const DIRECT_MAX: usize = 64;

fn unit(angle: f64) -> C64 {
    C64::new(libm::cos(angle), libm::sin(angle))
}

/// `exp(-2 pi i t / n)`, exact at multiples of a quarter turn so that the
/// real bins of a real signal come out with an exactly zero imaginary part.
pub(crate) fn twiddle(t: usize, n: usize) -> C64 {
    let t = t % n;
    if (4 * t) % n == 0 {
        return match 4 * t / n {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, -1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, 1.0),
        };
    }
    unit(-2.0 * PI * t as f64 / n as f64)
}

#[derive(Debug, Clone)]
enum Kind {
    Identity,
    Radix2 {
        twiddles: Vec<C64>,
        rev: Vec<usize>,
    },
    Direct {
        table: Vec<C64>,
    },
    Bluestein {
        inner: Box<Dft>,
        chirp: Vec<C64>,
        filter: Vec<C64>,
    },
}

#[derive(Debug, Clone)]
pub(crate) struct Dft {
    n: usize,
    kind: Kind,
}

impl Dft {
    pub(crate) fn new(n: usize) -> Self {
        assert!(n > 0, "DFT length must be positive");
        let kind = if n == 1 {
            Kind::Identity
        } else if n.is_power_of_two() {
            let bits = n.trailing_zeros();
            let rev = (0..n)
                .map(|i| i.reverse_bits() >> (usize::BITS - bits))
                .collect();
            let twiddles = (0..n / 2).map(|k| twiddle(k, n)).collect();
            Kind::Radix2 { twiddles, rev }
        } else if n <= DIRECT_MAX {
            let table = (0..n).map(|t| twiddle(t, n)).collect();
            Kind::Direct { table }
        } else {
            let m = (2 * n - 1).next_power_of_two();
            let inner = Box::new(Dft::new(m));
            // j^2 mod 2n keeps the chirp phase argument small
            let chirp: Vec<C64> = (0..n)
                .map(|j| {
                    let jj = (j * j) % (2 * n);
                    unit(-PI * jj as f64 / n as f64)
                })
                .collect();
            let mut filter = vec![C64::new(0.0, 0.0); m];
            filter[0] = chirp[0].conj();
            for j in 1..n {
                filter[j] = chirp[j].conj();
                filter[m - j] = chirp[j].conj();
            }
            inner.forward(&mut filter, &mut Vec::new());
            Kind::Bluestein {
                inner,
                chirp,
                filter,
            }
        };
        Dft { n, kind }
    }

    pub(crate) fn len(&self) -> usize {
        self.n
    }

    /// In-place unnormalised forward transform. `scratch` is reused between
    /// calls to avoid allocating per tube.
    pub(crate) fn forward(&self, buf: &mut [C64], scratch: &mut Vec<C64>) {
        debug_assert_eq!(buf.len(), self.n);
        match &self.kind {
            Kind::Identity => {}
            Kind::Radix2 { twiddles, rev } => radix2(buf, twiddles, rev),
            Kind::Direct { table } => {
                let n = self.n;
                scratch.clear();
                scratch.extend_from_slice(buf);
                for (k, out) in buf.iter_mut().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    let mut t = 0usize;
                    for x in scratch.iter() {
                        acc += x * table[t];
                        t += k;
                        if t >= n {
                            t -= n;
                        }
                    }
                    *out = acc;
                }
            }
            Kind::Bluestein {
                inner,
                chirp,
                filter,
            } => {
                let m = inner.len();
                scratch.clear();
                scratch.resize(m, C64::new(0.0, 0.0));
                let mut work = core::mem::take(scratch);
                for ((w, x), c) in work.iter_mut().zip(buf.iter()).zip(chirp) {
                    *w = x * c;
                }
                let mut inner_scratch = Vec::new();
                inner.forward(&mut work, &mut inner_scratch);
                for (w, f) in work.iter_mut().zip(filter) {
                    *w *= f;
                }
                inner.inverse(&mut work, &mut inner_scratch);
                let scale = 1.0 / m as f64;
                for ((out, w), c) in buf.iter_mut().zip(&work).zip(chirp) {
                    *out = w * c * scale;
                }
                *scratch = work;
            }
        }
    }

    /// In-place unnormalised inverse transform (caller divides by `n`).
    pub(crate) fn inverse(&self, buf: &mut [C64], scratch: &mut Vec<C64>) {
        for x in buf.iter_mut() {
            *x = x.conj();
        }
        self.forward(buf, scratch);
        for x in buf.iter_mut() {
            *x = x.conj();
        }
    }
}

fn radix2(buf: &mut [C64], twiddles: &[C64], rev: &[usize]) {
    let n = buf.len();
    for i in 0..n {
        let j = rev[i];
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = twiddles[k * stride];
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}
