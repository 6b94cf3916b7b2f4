use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::tensor::Tensor3;
use crate::{Error, Result};

/// Sampling set `Omega` and its 0/1 indicator tensor `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMask {
    indicator: Tensor3,
    /// Buffer offsets of observed entries, ordered by `(i, j, k)` with `i`
    /// outermost.
    observed: Vec<usize>,
}

impl ObservationMask {
    /// Mask from a tensor whose entries are all exactly 0 or 1.
    pub fn from_indicator(indicator: Tensor3) -> Result<Self> {
        if let Some(bad) = indicator.as_slice().iter().find(|&&v| v != 0.0 && v != 1.0) {
            return Err(Error::param(
                "mask",
                format!("indicator entries must be 0 or 1, found {bad}"),
            ));
        }
        let observed = row_major_offsets(&indicator);
        Ok(ObservationMask { indicator, observed })
    }

    /// Mask observing exactly the listed `(i, j, k)` positions.
    pub fn from_indices(
        n1: usize,
        n2: usize,
        n3: usize,
        indices: impl IntoIterator<Item = (usize, usize, usize)>,
    ) -> Result<Self> {
        let mut p = Tensor3::zeros(n1, n2, n3);
        for (i, j, k) in indices {
            if i >= n1 || j >= n2 || k >= n3 {
                return Err(Error::param(
                    "mask",
                    format!("index ({i}, {j}, {k}) outside ({n1}, {n2}, {n3})"),
                ));
            }
            if p.get(i, j, k) != 0.0 {
                return Err(Error::param("mask", format!("duplicate index ({i}, {j}, {k})")));
            }
            p.set(i, j, k, 1.0);
        }
        Self::from_indicator(p)
    }

    /// Mask observing the given buffer offsets.
    pub(crate) fn from_offsets(n1: usize, n2: usize, n3: usize, offsets: &[usize]) -> Self {
        let mut data = vec![0.0; n1 * n2 * n3];
        for &o in offsets {
            data[o] = 1.0;
        }
        let indicator = Tensor3::from_vec(n1, n2, n3, data).expect("dims checked by caller");
        let observed = row_major_offsets(&indicator);
        ObservationMask { indicator, observed }
    }

    /// Every entry observed.
    pub fn full(n1: usize, n2: usize, n3: usize) -> Self {
        let indicator = Tensor3::from_fn(n1, n2, n3, |_, _, _| 1.0);
        let observed = row_major_offsets(&indicator);
        ObservationMask { indicator, observed }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.indicator.dims()
    }

    pub fn indicator(&self) -> &Tensor3 {
        &self.indicator
    }

    /// `|Omega|`.
    pub fn count(&self) -> usize {
        self.observed.len()
    }

    /// `|Omega| / (n1 n2 n3)`.
    pub fn fraction(&self) -> f64 {
        self.count() as f64 / self.indicator.len() as f64
    }

    pub fn is_observed(&self, i: usize, j: usize, k: usize) -> bool {
        self.indicator.get(i, j, k) != 0.0
    }

    /// Observed positions with `i` outermost and `k` innermost.
    pub fn indices(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let (n1, n2, _) = self.dims();
        self.observed
            .iter()
            .map(move |&o| (o % n1, (o / n1) % n2, o / (n1 * n2)))
    }

    /// Buffer offsets of observed entries in [`indices`](Self::indices) order.
    pub fn offsets(&self) -> &[usize] {
        &self.observed
    }

    /// Values of `t` on the sampling set, in [`indices`](Self::indices) order.
    pub fn gather(&self, t: &Tensor3) -> Vec<f64> {
        let data = t.as_slice();
        self.observed.iter().map(|&o| data[o]).collect()
    }

    pub(crate) fn check_dims(&self, op: &'static str, t: &Tensor3) -> Result<()> {
        if t.dims() != self.dims() {
            return Err(Error::mismatch(
                op,
                format!("tensor {:?} against mask {:?}", t.dims(), self.dims()),
            ));
        }
        Ok(())
    }
}

fn row_major_offsets(p: &Tensor3) -> Vec<usize> {
    let (n1, n2, n3) = p.dims();
    let data = p.as_slice();
    let mut out = Vec::new();
    for i in 0..n1 {
        for j in 0..n2 {
            for k in 0..n3 {
                let o = i + n1 * (j + n2 * k);
                if data[o] != 0.0 {
                    out.push(o);
                }
            }
        }
    }
    out
}
