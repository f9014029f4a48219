//! Symmetric positive definite banded matrices with an in-place Cholesky
//! factorisation. Row `i` stores columns `i − bw ..= i`.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct BandedSpd {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandedSpd {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    #[inline]
    fn pos(&self, row: usize, col: usize) -> usize {
        row * (self.bw + 1) + col + self.bw - row
    }

    /// Adds `v` to entry `(row, col)` of the lower triangle (`col <= row`).
    #[inline]
    pub fn add_lower(&mut self, row: usize, col: usize, v: f64) {
        debug_assert!(col <= row && row - col <= self.bw);
        let p = self.pos(row, col);
        self.data[p] += v;
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..self.n).map(|i| self.data[self.pos(i, i)]).fold(0.0, f64::max)
    }

    pub fn shift_diagonal(&mut self, shift: f64) {
        for i in 0..self.n {
            let p = self.pos(i, i);
            self.data[p] += shift;
        }
    }

    /// `y = A x` using the symmetric storage.
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for k in lo..i {
                let a = self.data[self.pos(i, k)];
                y[i] += a * x[k];
                y[k] += a * x[i];
            }
            y[i] += self.data[self.pos(i, i)] * x[i];
        }
        y
    }

    /// Cholesky factor `L` with `A = L Lᵀ`, overwriting a copy of `self`.
    pub fn cholesky(&self) -> Result<BandedCholesky> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let mut l = self.data.clone();
        for i in 0..n {
            let lo_i = i.saturating_sub(bw);
            for j in lo_i..=i {
                let lo = lo_i.max(j.saturating_sub(bw));
                let row_i = &l[i * w + lo + bw - i..i * w + j + bw - i];
                let row_j = &l[j * w + lo + bw - j..j * w + j + bw - j];
                let dot: f64 = row_i.iter().zip(row_j).map(|(a, b)| a * b).sum();
                let s = l[i * w + j + bw - i] - dot;
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::NotPositiveDefinite { pivot: i });
                    }
                    l[i * w + bw] = s.sqrt();
                } else {
                    l[i * w + j + bw - i] = s / l[j * w + bw];
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let mut y = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let row = &self.l[i * w + lo + bw - i..i * w + bw];
            let dot: f64 = row.iter().zip(&y[lo..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - dot) / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            y[i] /= self.l[i * w + bw];
            let xi = y[i];
            let lo = i.saturating_sub(bw);
            for k in lo..i {
                y[k] -= self.l[i * w + k + bw - i] * xi;
            }
        }
        y
    }
}
