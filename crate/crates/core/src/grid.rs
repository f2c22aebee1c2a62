//! Uniform grid, banded difference operators and quadrature.
//!
//! Unknowns live at the interior nodes `x_i = i h`, `i = 1..=n`, with
//! `h = ell / (n + 1)`. Boundary values are zero and never stored. The
//! fourth-difference operator closes its first and last rows with the ghost
//! value `u_{-1} = u_1` obtained from a centered zero-slope condition.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Smallest interior node count accepted by [`SpatialGrid::new`].
pub const MIN_INTERIOR_NODES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpatialGrid {
    n: usize,
    h: f64,
    ell: f64,
}

impl SpatialGrid {
    pub fn new(ell: f64, n: usize) -> Result<Self> {
        if n < MIN_INTERIOR_NODES {
            return Err(Error::Config(format!(
                "grid needs at least {MIN_INTERIOR_NODES} interior nodes, got {n}"
            )));
        }
        if !(ell > 0.0 && ell.is_finite()) {
            return Err(Error::Config(format!("ell must be positive, got {ell}")));
        }
        Ok(Self {
            n,
            h: ell / (n + 1) as f64,
            ell,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    /// Position of interior node `i` (zero based), i.e. `(i + 1) h`.
    pub fn x(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.h
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes().map(f).collect()
    }
}

pub fn build_grid(params: &ModelParams, n: usize) -> Result<SpatialGrid> {
    SpatialGrid::new(params.ell, n)
}

/// Square matrix stored by diagonals, row-major: row `i` keeps columns
/// `i - lower ..= i + upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedOperator {
    n: usize,
    lower: usize,
    upper: usize,
    bands: Vec<f64>,
}

impl BandedOperator {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        Self {
            n,
            lower,
            upper,
            bands: vec![0.0; n * (lower + upper + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.lower
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.upper
    }

    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n || j >= self.n || j + self.lower < i || j > i + self.upper {
            return None;
        }
        Some(i * self.width() + (j + self.lower - i))
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.bands[k])
    }

    /// Sets entry `(i, j)`. Panics outside the band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.slot(i, j).expect("entry outside band");
        self.bands[k] = value;
    }

    pub fn add_to(&mut self, i: usize, j: usize, value: f64) {
        let k = self.slot(i, j).expect("entry outside band");
        self.bands[k] += value;
    }

    /// Column range stored for row `i`.
    pub fn row_columns(&self, i: usize) -> core::ops::Range<usize> {
        i.saturating_sub(self.lower)..(i + self.upper + 1).min(self.n)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.apply_into(x, &mut out);
        out
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.n, "operator dimension mismatch");
        assert_eq!(out.len(), self.n, "operator dimension mismatch");
        let w = self.width();
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.bands[i * w..(i + 1) * w];
            let mut acc = 0.0;
            for j in self.row_columns(i) {
                acc += row[j + self.lower - i] * x[j];
            }
            *o = acc;
        }
    }

    /// Copy with at least the given bandwidths.
    pub fn widened(&self, lower: usize, upper: usize) -> Self {
        let mut out = Self::zeros(self.n, lower.max(self.lower), upper.max(self.upper));
        for i in 0..self.n {
            for j in self.row_columns(i) {
                out.set(i, j, self.get(i, j));
            }
        }
        out
    }

    /// `self += alpha * other`, widening the band if needed.
    pub fn add_scaled(&mut self, alpha: f64, other: &BandedOperator) {
        assert_eq!(self.n, other.n, "operator dimension mismatch");
        if other.lower > self.lower || other.upper > self.upper {
            *self = self.widened(other.lower, other.upper);
        }
        for i in 0..self.n {
            for j in other.row_columns(i) {
                self.add_to(i, j, alpha * other.get(i, j));
            }
        }
    }

    pub fn add_diagonal(&mut self, diag: &[f64]) {
        assert_eq!(diag.len(), self.n, "operator dimension mismatch");
        for (i, d) in diag.iter().enumerate() {
            self.add_to(i, i, *d);
        }
    }

    pub fn add_identity(&mut self, alpha: f64) {
        for i in 0..self.n {
            self.add_to(i, i, alpha);
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.bands.iter_mut().for_each(|b| *b *= alpha);
        out
    }

    /// `diag(c) * self`.
    pub fn row_scaled(&self, c: &[f64]) -> Self {
        assert_eq!(c.len(), self.n, "operator dimension mismatch");
        let mut out = self.clone();
        let w = self.width();
        for (i, ci) in c.iter().enumerate() {
            out.bands[i * w..(i + 1) * w]
                .iter_mut()
                .for_each(|b| *b *= ci);
        }
        out
    }

    /// Band pattern equals its mirror to within `tol` (absolute).
    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| {
            self.row_columns(i)
                .all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol)
        })
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

/// Second difference with homogeneous Dirichlet rows.
pub fn assemble_d2(grid: &SpatialGrid) -> BandedOperator {
    let n = grid.n();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let mut op = BandedOperator::zeros(n, 1, 1);
    for i in 0..n {
        op.set(i, i, -2.0 * inv_h2);
        if i > 0 {
            op.set(i, i - 1, inv_h2);
        }
        if i + 1 < n {
            op.set(i, i + 1, inv_h2);
        }
    }
    op
}

/// Fourth difference with clamped rows `(7, -4, 1) / h^4` at both ends.
pub fn assemble_d4(grid: &SpatialGrid) -> BandedOperator {
    let n = grid.n();
    let h2 = grid.h() * grid.h();
    let inv_h4 = 1.0 / (h2 * h2);
    let stencil = [1.0, -4.0, 6.0, -4.0, 1.0];
    let mut op = BandedOperator::zeros(n, 2, 2);
    for i in 0..n {
        for (k, c) in stencil.iter().enumerate() {
            let j = i as isize + k as isize - 2;
            if (0..n as isize).contains(&j) {
                op.set(i, j as usize, c * inv_h4);
            }
        }
    }
    // Ghost values u_{-1} = u_1 and u_{n+2} = u_n fold onto the diagonal.
    op.add_to(0, 0, inv_h4);
    op.add_to(n - 1, n - 1, inv_h4);
    op
}

/// Centered first difference using the zero boundary values.
pub fn assemble_d1(grid: &SpatialGrid) -> BandedOperator {
    let n = grid.n();
    let inv_2h = 0.5 / grid.h();
    let mut op = BandedOperator::zeros(n, 1, 1);
    for i in 0..n {
        if i > 0 {
            op.set(i, i - 1, -inv_2h);
        }
        if i + 1 < n {
            op.set(i, i + 1, inv_2h);
        }
    }
    op
}

/// The three difference operators on one grid.
#[derive(Debug, Clone)]
pub struct Operators {
    pub grid: SpatialGrid,
    pub d1: BandedOperator,
    pub d2: BandedOperator,
    pub d4: BandedOperator,
}

impl Operators {
    pub fn assemble(grid: &SpatialGrid) -> Self {
        Self {
            grid: *grid,
            d1: assemble_d1(grid),
            d2: assemble_d2(grid),
            d4: assemble_d4(grid),
        }
    }
}

/// Trapezoidal weights with zero boundary values: `h` at every interior node.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub weights: Vec<f64>,
}

impl Quadrature {
    pub fn trapezoidal(grid: &SpatialGrid) -> Self {
        Self {
            weights: vec![grid.h(); grid.n()],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `||u||` in the discrete L2 sense.
    pub fn norm(&self, u: &[f64]) -> f64 {
        crate::math::sqrt(
            self.weights
                .iter()
                .zip(u)
                .map(|(w, v)| w * v * v)
                .sum::<f64>(),
        )
    }
}

/// Discrete `integral of u w`.
pub fn l2_inner(quadrature: &Quadrature, u: &[f64], w: &[f64]) -> Result<f64> {
    let n = quadrature.len();
    for len in [u.len(), w.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: len,
            });
        }
    }
    Ok(quadrature
        .weights
        .iter()
        .zip(u.iter().zip(w))
        .map(|(q, (a, b))| q * a * b)
        .sum())
}
