//! Small dense matrices (at most 3x3), rotations and extended reals.
//!
//! Every density in the crate takes a [`Matrix`] argument. Storage is a fixed
//! `[f64; 9]` buffer in row-major order so matrices are `Copy` and never
//! allocate.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

/// Euclidean norm of a vector.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Dense `rows x cols` real matrix with `rows, cols <= 3`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<f64>>", try_from = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: [f64; 9],
}

impl Matrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        if rows == 0 || cols == 0 || rows > MAX_DIM || cols > MAX_DIM {
            return Err(Error::UnsupportedDimension(rows.max(cols)));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!("{} entries for a {rows}x{cols} matrix", entries.len())));
        }
        let mut data = [0.0; 9];
        data[..entries.len()].copy_from_slice(entries);
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&rows) && (1..=MAX_DIM).contains(&cols));
        Self { rows, cols, data: [0.0; 9] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, 1.0)
    }

    /// `t * I_n`.
    pub fn scalar(n: usize, t: f64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, t);
        }
        m
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(m, n, &flat)
    }

    /// Rank-one matrix `a ⊗ b` with entries `a_i b_j`.
    pub fn outer(a: &[f64], b: &[f64]) -> Result<Self> {
        let flat: Vec<f64> = a.iter().flat_map(|&ai| b.iter().map(move |&bj| ai * bj)).collect();
        Self::new(a.len(), b.len(), &flat)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    /// Row-major entries.
    #[inline]
    pub fn entries(&self) -> &[f64] {
        &self.data[..self.rows * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// `A z` for a vector of length `cols`; the result occupies the first
    /// `rows` slots.
    #[inline]
    pub fn apply(&self, z: &[f64]) -> [f64; 3] {
        debug_assert_eq!(z.len(), self.cols);
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate().take(self.rows) {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            *o = row.iter().zip(z).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// `|A z|`.
    #[inline]
    pub fn image_norm(&self, z: &[f64]) -> f64 {
        norm(&self.apply(z)[..self.rows])
    }

    /// Frobenius norm `|A|`.
    pub fn frobenius(&self) -> f64 {
        norm(self.entries())
    }

    /// `|A|^2`.
    pub fn frobenius_sq(&self) -> f64 {
        self.entries().iter().map(|x| x * x).sum()
    }

    fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NonSquare { rows: self.rows, cols: self.cols })
        }
    }

    /// Determinant by cofactor expansion.
    pub fn determinant(&self) -> Result<f64> {
        let n = self.require_square()?;
        let a = |i, j| self.get(i, j);
        Ok(match n {
            1 => a(0, 0),
            2 => a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0),
            _ => {
                a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
                    + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
            }
        })
    }

    /// Cofactor matrix, `(cof A)_ij = (-1)^{i+j} M_ij`, so that
    /// `cof(A) A^T = det(A) I`.
    pub fn cofactor(&self) -> Result<Self> {
        let n = self.require_square()?;
        let mut c = Self::zeros(n, n);
        match n {
            1 => c.set(0, 0, 1.0),
            2 => {
                c.set(0, 0, self.get(1, 1));
                c.set(0, 1, -self.get(1, 0));
                c.set(1, 0, -self.get(0, 1));
                c.set(1, 1, self.get(0, 0));
            }
            _ => {
                for i in 0..3 {
                    for j in 0..3 {
                        let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
                        let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
                        // cyclic index choice absorbs the sign
                        let minor = self.get(r0, c0) * self.get(r1, c1) - self.get(r0, c1) * self.get(r1, c0);
                        c.set(i, j, minor);
                    }
                }
            }
        }
        Ok(c)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = *self;
        m.data.iter_mut().for_each(|x| *x *= s);
        m
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.entries().iter().zip(other.entries()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Matrix with i.i.d. entries uniform in `[-bound, bound]`.
    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, bound: f64, rng: &mut R) -> Self {
        let mut m = Self::zeros(rows, cols);
        for x in m.data[..rows * cols].iter_mut() {
            *x = rng.random_range(-bound..=bound);
        }
        m
    }
}

impl Add for Matrix {
    type Output = Matrix;
    fn add(mut self, rhs: Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in add");
        self.data.iter_mut().zip(rhs.data).for_each(|(a, b)| *a += b);
        self
    }
}

impl Sub for Matrix {
    type Output = Matrix;
    fn sub(mut self, rhs: Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in sub");
        self.data.iter_mut().zip(rhs.data).for_each(|(a, b)| *a -= b);
        self
    }
}

/// Matrix product. Panics on incompatible shapes.
impl Mul for Matrix {
    type Output = Matrix;
    fn mul(self, rhs: Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in matmul");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let s = (0..self.cols).map(|k| self.get(i, k) * rhs.get(k, j)).sum();
                out.set(i, j, s);
            }
        }
        out
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = (0..self.rows).map(|i| &self.data[i * self.cols..(i + 1) * self.cols]).collect();
        write!(f, "Matrix{rows:?}")
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        (0..m.rows).map(|i| (0..m.cols).map(|j| m.get(i, j)).collect()).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        Matrix::from_rows(&refs)
    }
}

/// A proper rotation `R ∈ SO(dim)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation(Matrix);

impl Rotation {
    /// Haar-distributed rotation. SO(2) from a uniform angle, SO(3) from a
    /// normalized Gaussian quaternion.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        match dim {
            2 => {
                let theta = rng.random_range(0.0..std::f64::consts::TAU);
                let (s, c) = theta.sin_cos();
                Ok(Self(Matrix::new(2, 2, &[c, -s, s, c])?))
            }
            3 => {
                let mut q = [0.0f64; 4];
                let mut len = 0.0;
                while len < 1e-8 {
                    for x in q.iter_mut() {
                        *x = StandardNormal.sample(rng);
                    }
                    len = norm(&q);
                }
                let [w, x, y, z] = q.map(|v| v / len);
                Ok(Self(Matrix::new(
                    3,
                    3,
                    &[
                        1.0 - 2.0 * (y * y + z * z),
                        2.0 * (x * y - w * z),
                        2.0 * (x * z + w * y),
                        2.0 * (x * y + w * z),
                        1.0 - 2.0 * (x * x + z * z),
                        2.0 * (y * z - w * x),
                        2.0 * (x * z - w * y),
                        2.0 * (y * z + w * x),
                        1.0 - 2.0 * (x * x + y * y),
                    ],
                )?))
            }
            d => Err(Error::UnsupportedDimension(d)),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self(Matrix::identity(dim))
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }
}

/// Deterministic Haar rotation for a given seed.
pub fn random_rotation(dim: usize, seed: u64) -> Result<Rotation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Rotation::random(dim, &mut rng)
}

/// Rotation sampler that also covers the trivial group SO(1).
pub(crate) fn rotation_or_identity<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Rotation> {
    if dim == 1 {
        Ok(Rotation::identity(1))
    } else {
        Rotation::random(dim, rng)
    }
}

/// A value in `R ∪ {+∞}`.
///
/// `+∞` absorbs addition and multiplication by positive reals. NaN and `-∞`
/// are not representable through the checked constructor.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(into = "SerdeExt", try_from = "SerdeExt")]
pub enum ExtendedReal {
    Finite(f64),
    Infinity,
}

impl ExtendedReal {
    pub const ZERO: ExtendedReal = ExtendedReal::Finite(0.0);

    /// Maps `+inf` to [`ExtendedReal::Infinity`]; rejects NaN and `-inf`.
    pub fn from_f64(x: f64) -> Result<Self> {
        if x.is_nan() || x == f64::NEG_INFINITY {
            Err(Error::NotExtendedReal(format!("{x}")))
        } else if x == f64::INFINITY {
            Ok(Self::Infinity)
        } else {
            Ok(Self::Finite(x))
        }
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        matches!(self, Self::Finite(_))
    }

    #[inline]
    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::Infinity)
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            Self::Finite(x) => Some(x),
            Self::Infinity => None,
        }
    }

    /// `+∞` maps to `f64::INFINITY`.
    pub fn to_f64(&self) -> f64 {
        match *self {
            Self::Finite(x) => x,
            Self::Infinity => f64::INFINITY,
        }
    }

    /// Product with a nonnegative real; `0 · ∞ = 0`.
    pub fn scale(self, s: f64) -> Self {
        debug_assert!(s >= 0.0, "negative scale {s}");
        match self {
            Self::Finite(x) => Self::Finite(x * s),
            Self::Infinity if s == 0.0 => Self::ZERO,
            Self::Infinity => Self::Infinity,
        }
    }

    /// `self - other`; `∞ - ∞` is [`Error::Indeterminate`] and `x - ∞` has
    /// no representation.
    pub fn checked_sub(self, other: Self) -> Result<Self> {
        match (self, other) {
            (Self::Finite(a), Self::Finite(b)) => Ok(Self::Finite(a - b)),
            (Self::Infinity, Self::Finite(_)) => Ok(Self::Infinity),
            (Self::Infinity, Self::Infinity) => Err(Error::Indeterminate),
            (Self::Finite(_), Self::Infinity) => Err(Error::NotExtendedReal("finite minus +inf".into())),
        }
    }
}

impl Add for ExtendedReal {
    type Output = ExtendedReal;
    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (Self::Finite(a), Self::Finite(b)) => Self::Finite(a + b),
            _ => Self::Infinity,
        }
    }
}

impl Add<f64> for ExtendedReal {
    type Output = ExtendedReal;
    fn add(self, rhs: f64) -> Self {
        self + Self::Finite(rhs)
    }
}

impl PartialEq for ExtendedReal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ExtendedReal {}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Self::Finite(a), Self::Finite(b)) => a.total_cmp(b),
            (Self::Finite(_), Self::Infinity) => Ordering::Less,
            (Self::Infinity, Self::Finite(_)) => Ordering::Greater,
            (Self::Infinity, Self::Infinity) => Ordering::Equal,
        }
    }
}

impl From<f64> for ExtendedReal {
    /// Unchecked conversion; prefer [`ExtendedReal::from_f64`] for values that
    /// may be NaN.
    fn from(x: f64) -> Self {
        if x == f64::INFINITY {
            Self::Infinity
        } else {
            Self::Finite(x)
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(x) => write!(f, "{x}"),
            Self::Infinity => f.write_str("inf"),
        }
    }
}

/// JSON has no infinity literal; `+∞` is written as the string `"inf"`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SerdeExt {
    Num(f64),
    Text(String),
}

impl From<ExtendedReal> for SerdeExt {
    fn from(x: ExtendedReal) -> Self {
        match x {
            ExtendedReal::Finite(v) => SerdeExt::Num(v),
            ExtendedReal::Infinity => SerdeExt::Text("inf".into()),
        }
    }
}

impl TryFrom<SerdeExt> for ExtendedReal {
    type Error = String;
    fn try_from(v: SerdeExt) -> std::result::Result<Self, String> {
        match v {
            SerdeExt::Num(x) => ExtendedReal::from_f64(x).map_err(|e| e.to_string()),
            SerdeExt::Text(s) if s == "inf" => Ok(ExtendedReal::Infinity),
            SerdeExt::Text(s) => Err(format!("expected a number or \"inf\", got {s:?}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Laplace expansion along the first row, written independently of
    /// `determinant`.
    fn det_by_minors(a: &Matrix) -> f64 {
        let n = a.rows();
        if n == 1 {
            return a.get(0, 0);
        }
        (0..n)
            .map(|j| {
                let sub: Vec<f64> = (1..n)
                    .flat_map(|i| (0..n).filter(move |&k| k != j).map(move |k| (i, k)))
                    .map(|(i, k)| a.get(i, k))
                    .collect();
                let minor = Matrix::new(n - 1, n - 1, &sub).unwrap();
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * a.get(0, j) * det_by_minors(&minor)
            })
            .sum()
    }

    #[test]
    fn frobenius_examples() {
        assert!(approx(Matrix::diag(&[1.0, 2.0]).frobenius(), 5f64.sqrt(), 1e-15));
        assert_eq!(Matrix::zeros(3, 3).frobenius(), 0.0);
        assert!(approx(Matrix::identity(3).frobenius(), 3f64.sqrt(), 1e-15));
    }

    #[test]
    fn cofactor_examples() {
        assert_eq!(Matrix::identity(3).cofactor().unwrap(), Matrix::identity(3));
        let lam = 2.5;
        let c = Matrix::diag(&[lam, 1.0 / lam, 1.0]).cofactor().unwrap();
        assert!(c.max_abs_diff(&Matrix::diag(&[1.0 / lam, lam, 1.0])) < 1e-15);
        assert_eq!(Matrix::diag(&[7.0]).cofactor().unwrap(), Matrix::diag(&[1.0]));
        assert!(matches!(Matrix::zeros(2, 3).cofactor(), Err(Error::NonSquare { rows: 2, cols: 3 })));
    }

    #[test]
    fn cofactor_identity_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=3 {
            for _ in 0..200 {
                let a = Matrix::random(n, n, 2.0, &mut rng);
                let det = det_by_minors(&a);
                assert!(approx(a.determinant().unwrap(), det, 1e-12));
                let lhs = a.cofactor().unwrap() * a.transpose();
                assert!(lhs.max_abs_diff(&Matrix::scalar(n, det)) < 1e-12);
            }
        }
    }

    #[test]
    fn determinant_examples() {
        assert_eq!(Matrix::identity(3).determinant().unwrap(), 1.0);
        assert_eq!(Matrix::diag(&[2.0, 0.5, 1.0]).determinant().unwrap(), 1.0);
        let a = Matrix::from_rows(&[&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], &[0.3, -1.0, 4.0]]).unwrap();
        assert!(a.determinant().unwrap().abs() < 1e-14);
        assert!(Matrix::zeros(3, 2).determinant().is_err());
    }

    #[test]
    fn rotations_are_proper_and_deterministic() {
        for dim in [2, 3] {
            for seed in 0..50 {
                let r = random_rotation(dim, seed).unwrap();
                let m = *r.matrix();
                assert!((m * m.transpose()).max_abs_diff(&Matrix::identity(dim)) < 1e-12);
                assert!(approx(m.determinant().unwrap(), 1.0, 1e-12));
                assert_eq!(r, random_rotation(dim, seed).unwrap());
            }
        }
        assert!(matches!(random_rotation(4, 0), Err(Error::UnsupportedDimension(4))));
        assert!(random_rotation(1, 0).is_err());
    }

    #[test]
    fn minors_transform_under_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let r = *Rotation::random(3, &mut rng).unwrap().matrix();
            let a = Matrix::random(3, 3, 3.0, &mut rng);
            let ra = r * a;
            let lhs = ra.cofactor().unwrap();
            let rhs = r.cofactor().unwrap() * a.cofactor().unwrap();
            assert!(lhs.max_abs_diff(&rhs) < 1e-10);
            assert!(approx(ra.determinant().unwrap(), a.determinant().unwrap(), 1e-10));
            assert!(approx(ra.frobenius(), a.frobenius(), 1e-12));
            assert!(approx((a * r).frobenius(), a.frobenius(), 1e-12));
        }
    }

    #[test]
    fn extended_real_absorbs() {
        let inf = ExtendedReal::Infinity;
        let one = ExtendedReal::Finite(1.0);
        assert!((inf + one).is_infinite());
        assert!((one + inf).is_infinite());
        assert!(inf.scale(3.0).is_infinite());
        assert_eq!(inf.scale(0.0), ExtendedReal::ZERO);
        assert!(one < inf);
        assert_eq!(inf.checked_sub(one).unwrap(), inf);
        assert_eq!(inf.checked_sub(inf), Err(Error::Indeterminate));
        assert!(ExtendedReal::from_f64(f64::NAN).is_err());
        assert!(ExtendedReal::from_f64(f64::NEG_INFINITY).is_err());
        assert_eq!(ExtendedReal::from_f64(f64::INFINITY).unwrap(), inf);
    }
}
