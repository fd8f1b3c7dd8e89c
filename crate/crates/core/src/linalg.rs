//! Minimal banded-matrix storage, LU factorization (no pivoting), and solves.
//!
//! The generators assembled in this crate are weakly column-diagonally
//! dominant M-matrices, for which Gaussian elimination without pivoting is
//! stable and fill stays inside the band.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};

/// Square banded matrix with equal lower/upper bandwidth.
#[derive(Debug, Clone)]
pub(crate) struct Banded {
    n: usize,
    band: usize,
    /// Row-major: entry `(i, j)` lives at `data[i*(2*band+1) + (j - i + band)]`.
    data: Vec<f64>,
}

impl Banded {
    pub fn zeros(n: usize, band: usize) -> Self {
        Self {
            n,
            band,
            data: vec![0.0; n * (2 * band + 1)],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (2 * self.band + 1) + (j + self.band - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.band < i || j > i + self.band {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(j + self.band >= i && j <= i + self.band);
        let k = self.idx(i, j);
        self.data[k] = value;
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.band);
            let hi = (i + self.band).min(self.n - 1);
            let row = &self.data[i * (2 * self.band + 1)..];
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += row[j + self.band - i] * x[j];
            }
            y[i] = acc;
        }
    }

    /// In-place LU without pivoting; multipliers stored below the diagonal.
    pub fn lu_inplace(&mut self) -> Result<()> {
        for k in 0..self.n {
            let pivot = self.get(k, k);
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(CoreError::NumericalFailure("banded LU hit a zero pivot"));
            }
            let imax = (k + self.band).min(self.n - 1);
            let jmax = imax;
            for i in k + 1..=imax {
                let m = self.get(i, k) / pivot;
                self.set(i, k, m);
                if m != 0.0 {
                    for j in k + 1..=jmax {
                        let v = self.get(i, j) - m * self.get(k, j);
                        self.set(i, j, v);
                    }
                }
            }
        }
        Ok(())
    }

    /// Solve `LU · x = b` in place after [`Self::lu_inplace`].
    pub fn lu_solve(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        for k in 0..self.n {
            let imax = (k + self.band).min(self.n - 1);
            for i in k + 1..=imax {
                b[i] -= self.get(i, k) * b[k];
            }
        }
        for k in (0..self.n).rev() {
            let jmax = (k + self.band).min(self.n - 1);
            let mut acc = b[k];
            for j in k + 1..=jmax {
                acc -= self.get(k, j) * b[j];
            }
            b[k] = acc / self.get(k, k);
        }
    }
}
