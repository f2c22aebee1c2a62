//! Banded LU factorization with partial pivoting.
//!
//! Row interchanges can push the upper bandwidth of `U` up to
//! `lower + upper`, so each row of the work array spans
//! `2 * lower + upper + 1` columns starting at `i - lower`. Multipliers of
//! step `k` stay in the rows they were computed in and are replayed in the
//! same order during the forward solve.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::BandedOperator;

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    lower: usize,
    upper: usize,
    width: usize,
    work: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn factor(op: &BandedOperator) -> Result<Self> {
        let n = op.dim();
        let lower = op.lower_bandwidth();
        let upper = op.upper_bandwidth();
        let width = 2 * lower + upper + 1;
        let mut work = vec![0.0; n * width];
        for i in 0..n {
            for j in op.row_columns(i) {
                work[i * width + (j + lower - i)] = op.get(i, j);
            }
        }
        let mut lu = Self {
            n,
            lower,
            upper,
            width,
            work,
            pivots: vec![0; n],
        };
        lu.eliminate()?;
        Ok(lu)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.lower >= i && j + self.lower - i < self.width);
        i * self.width + (j + self.lower - i)
    }

    fn eliminate(&mut self) -> Result<()> {
        let n = self.n;
        for k in 0..n {
            let last_row = (k + self.lower).min(n - 1);
            let last_col = (k + self.lower + self.upper).min(n - 1);

            let mut p = k;
            let mut best = self.work[self.idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.work[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::SingularMatrix { column: k });
            }
            self.pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.work.swap(a, b);
                }
            }

            let pivot = self.work[self.idx(k, k)];
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                let l = self.work[ik] / pivot;
                self.work[ik] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=last_col {
                    let kj = self.work[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.work[ij] -= l * kj;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Overwrites `b` with the solution of `A x = b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n, "right-hand side dimension mismatch");
        let n = self.n;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + self.lower).min(n - 1) {
                    b[i] -= self.work[self.idx(i, k)] * bk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..=(i + self.lower + self.upper).min(n - 1) {
                acc -= self.work[self.idx(i, j)] * b[j];
            }
            b[i] = acc / self.work[self.idx(i, i)];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
