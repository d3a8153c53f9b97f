use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Largest number of lattice points we are willing to allocate.
pub const MAX_LATTICE_POINTS: usize = 20_000_000;

/// Which matrices the lattice discretizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeMode {
    /// All `n²` entries vary.
    Full,
    /// Only the diagonal varies; off-diagonal entries are zero.
    Diagonal,
}

/// Regular grid of `n×n` matrices with entries in `[-L, L]` and spacing `h`.
///
/// `1/h` and `L/h` must be integers, so `0` and `±1` are exact grid values.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixLattice {
    n: usize,
    mode: LatticeMode,
    bound: f64,
    step: f64,
    /// `1/h`
    denom: i64,
    /// `L/h`
    half: i64,
    per_axis: usize,
    axes: usize,
    len: usize,
}

fn as_integer(x: f64) -> Option<i64> {
    let r = x.round();
    ((x - r).abs() <= 1e-9 * x.abs().max(1.0) && r >= 1.0).then_some(r as i64)
}

impl MatrixLattice {
    pub fn new(n: usize, mode: LatticeMode, bound: f64, step: f64) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        let denom = as_integer(1.0 / step)
            .ok_or_else(|| Error::InvalidArgument(format!("lattice step {step} is not 1/k for an integer k")))?;
        let half = as_integer(bound * denom as f64)
            .ok_or_else(|| Error::InvalidArgument(format!("lattice bound {bound} is not a multiple of step {step}")))?;
        if half < denom {
            return Err(Error::InvalidArgument(format!("lattice bound {bound} must be at least 1")));
        }
        let per_axis = (2 * half + 1) as usize;
        let axes = match mode {
            LatticeMode::Full => n * n,
            LatticeMode::Diagonal => n,
        };
        let len = (0..axes)
            .try_fold(1usize, |acc, _| acc.checked_mul(per_axis))
            .filter(|&l| l <= MAX_LATTICE_POINTS)
            .ok_or_else(|| {
            Error::Resolution(format!("{per_axis}^{axes} lattice points exceed the limit of {MAX_LATTICE_POINTS}"))
        })?;
        Ok(Self { n, mode, bound, step, denom, half, per_axis, axes, len })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> LatticeMode {
        self.mode
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of grid axes (`n²` or `n`).
    pub fn axes(&self) -> usize {
        self.axes
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Grid value of axis index `i`, computed as an exact ratio.
    #[inline]
    pub fn coordinate(&self, i: usize) -> f64 {
        (i as i64 - self.half) as f64 / self.denom as f64
    }

    /// Axis index of a grid value, if `x` lies on the grid.
    pub fn axis_index(&self, x: f64) -> Option<usize> {
        let k = x * self.denom as f64;
        let r = k.round();
        if (k - r).abs() > 1e-9 || r.abs() > self.half as f64 {
            return None;
        }
        Some((r as i64 + self.half) as usize)
    }

    /// Multi-index of a flat index; the last axis varies fastest.
    pub fn multi_index(&self, mut flat: usize) -> [usize; 9] {
        let mut mi = [0usize; 9];
        for a in (0..self.axes).rev() {
            mi[a] = flat % self.per_axis;
            flat /= self.per_axis;
        }
        mi
    }

    pub fn flat_index(&self, mi: &[usize]) -> usize {
        mi[..self.axes].iter().fold(0, |acc, &i| acc * self.per_axis + i)
    }

    /// Flat stride of a unit step along each axis.
    pub(crate) fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.axes];
        for a in (0..self.axes.saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.per_axis;
        }
        s
    }

    /// Grid values along each axis of a flat index.
    pub fn coordinates(&self, flat: usize) -> Vec<f64> {
        let mi = self.multi_index(flat);
        mi[..self.axes].iter().map(|&i| self.coordinate(i)).collect()
    }

    pub fn matrix_at(&self, flat: usize) -> Matrix {
        let mi = self.multi_index(flat);
        let mut m = Matrix::zeros(self.n, self.n);
        match self.mode {
            LatticeMode::Full => {
                for i in 0..self.n {
                    for j in 0..self.n {
                        m.set(i, j, self.coordinate(mi[i * self.n + j]));
                    }
                }
            }
            LatticeMode::Diagonal => {
                for (i, &k) in mi.iter().enumerate().take(self.n) {
                    m.set(i, i, self.coordinate(k));
                }
            }
        }
        m
    }

    /// Flat index of a matrix lying on the lattice.
    pub fn index_of(&self, a: &Matrix) -> Option<usize> {
        if a.rows() != self.n || a.cols() != self.n {
            return None;
        }
        let mut mi = [0usize; 9];
        match self.mode {
            LatticeMode::Full => {
                for (slot, &x) in mi.iter_mut().zip(a.entries()) {
                    *slot = self.axis_index(x)?;
                }
            }
            LatticeMode::Diagonal => {
                for (i, slot) in mi.iter_mut().enumerate().take(self.n) {
                    for j in 0..self.n {
                        if i != j && a.get(i, j) != 0.0 {
                            return None;
                        }
                    }
                    *slot = self.axis_index(a.get(i, i))?;
                }
            }
        }
        Some(self.flat_index(&mi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contains_zero_and_identity_exactly() {
        for (mode, n) in [(LatticeMode::Full, 2), (LatticeMode::Diagonal, 3), (LatticeMode::Full, 1)] {
            let lat = MatrixLattice::new(n, mode, 3.0, 0.1).unwrap();
            let id = lat.index_of(&Matrix::identity(n)).unwrap();
            assert_eq!(lat.matrix_at(id), Matrix::identity(n));
            let zero = lat.index_of(&Matrix::zeros(n, n)).unwrap();
            assert_eq!(lat.matrix_at(zero), Matrix::zeros(n, n));
        }
    }

    #[test]
    fn flat_and_multi_index_round_trip() {
        let lat = MatrixLattice::new(2, LatticeMode::Full, 1.0, 0.5).unwrap();
        assert_eq!(lat.len(), 5usize.pow(4));
        for flat in 0..lat.len() {
            let mi = lat.multi_index(flat);
            assert_eq!(lat.flat_index(&mi), flat);
            assert_eq!(lat.index_of(&lat.matrix_at(flat)), Some(flat));
        }
    }

    #[test]
    fn rejects_incompatible_spacing() {
        assert!(MatrixLattice::new(1, LatticeMode::Full, 2.0, 0.3).is_err());
        assert!(MatrixLattice::new(1, LatticeMode::Full, 2.05, 0.1).is_err());
        assert!(MatrixLattice::new(1, LatticeMode::Full, 0.5, 0.1).is_err());
        assert!(matches!(MatrixLattice::new(3, LatticeMode::Full, 3.0, 0.1), Err(Error::Resolution(_))));
    }
}
