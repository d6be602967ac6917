//! Banded LU without pivoting for the diagonally dominant M-matrices produced
//! by generators restricted to a complement set.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    b: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, b: usize) -> Self {
        BandMatrix { n, b, data: vec![0.0; n * (2 * b + 1)] }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.b >= i && j <= i + self.b);
        i * (2 * self.b + 1) + (j + self.b - i)
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.b < i || j > i + self.b {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// In-place LU; L's multipliers overwrite the strictly lower band.
    pub fn factorize(mut self) -> Result<BandLu> {
        let (n, b) = (self.n, self.b);
        for i in 0..n {
            let pivot = self.data[self.idx(i, i)];
            if !(pivot.abs() > 0.0) || !pivot.is_finite() {
                return Err(Error::Singular(format!("zero pivot in row {i}")));
            }
            let last = (i + b).min(n - 1);
            for r in i + 1..=last {
                let ri = self.idx(r, i);
                let factor = self.data[ri] / pivot;
                if factor == 0.0 {
                    continue;
                }
                self.data[ri] = factor;
                for c in i + 1..=last {
                    let ic = self.idx(i, c);
                    let rc = self.idx(r, c);
                    self.data[rc] -= factor * self.data[ic];
                }
            }
        }
        Ok(BandLu { m: self })
    }

    /// Subtraction-free elimination for an M-matrix with nonpositive
    /// off-diagonals and nonnegative row sums `excess` (Grassmann, Taksar and
    /// Heyman). Pivots are rebuilt as excess plus the remaining off-diagonal
    /// mass instead of being updated by subtraction, so the factors keep
    /// entrywise relative accuracy however close the matrix is to singular.
    pub fn factorize_m_matrix(mut self, excess: &[f64]) -> Result<BandLu> {
        let (n, b) = (self.n, self.b);
        let mut excess = excess.to_vec();
        for i in 0..n {
            let last = (i + b).min(n - 1);
            let mut pivot = excess[i];
            for c in i + 1..=last {
                pivot -= self.data[self.idx(i, c)];
            }
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(Error::Singular(format!("zero pivot in row {i}")));
            }
            let ii = self.idx(i, i);
            self.data[ii] = pivot;
            for r in i + 1..=last {
                let ri = self.idx(r, i);
                let factor = self.data[ri] / pivot;
                if factor == 0.0 {
                    continue;
                }
                self.data[ri] = factor;
                excess[r] -= factor * excess[i];
                for c in i + 1..=last {
                    if c != r {
                        let ic = self.idx(i, c);
                        let rc = self.idx(r, c);
                        self.data[rc] -= factor * self.data[ic];
                    }
                }
            }
        }
        Ok(BandLu { m: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
}

impl BandLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, b) = (self.m.n, self.m.b);
        let mut x = rhs.to_vec();
        for i in 0..n {
            let first = i.saturating_sub(b);
            let mut s = x[i];
            for j in first..i {
                s -= self.m.data[self.m.idx(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let last = (i + b).min(n - 1);
            let mut s = x[i];
            for j in i + 1..=last {
                s -= self.m.data[self.m.idx(i, j)] * x[j];
            }
            x[i] = s / self.m.data[self.m.idx(i, i)];
        }
        x
    }
}
