//! Exact scalars and small dense matrices.
//!
//! Integer matrices use `i128` with checked arithmetic so that connecting-map
//! products either come out exact or fail loudly. Convolution coefficients are
//! Gaussian rationals.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Rational = Ratio<i128>;

/// Exact complex rational.
pub type Coeff = Complex<Rational>;

pub fn coeff(re: i128, im: i128) -> Coeff {
    Complex::new(Rational::from_integer(re), Rational::from_integer(im))
}

pub fn coeff_frac(re: (i128, i128), im: (i128, i128)) -> Coeff {
    Complex::new(Rational::new(re.0, re.1), Rational::new(im.0, im.1))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("shape mismatch: {left_rows}x{left_cols} against {right_rows}x{right_cols}")]
    ShapeMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("data length {len} does not match {rows}x{cols}")]
    BadData { rows: usize, cols: usize, len: usize },
    #[error("integer overflow in exact matrix arithmetic")]
    Overflow,
}

/// Row-major integer matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i128>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for r in 0..self.rows {
            if r > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{:?}", self.row(r))?;
        }
        f.write_str("]")
    }
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<i128>) -> Result<Self, MatrixError> {
        if data.len() != rows * cols {
            return Err(MatrixError::BadData {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(IntMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn diagonal(entries: &[i128]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m.data[i * n + i] = e;
        }
        m
    }

    /// Builds a matrix from rows; all rows must share a length.
    pub fn from_rows(rows: &[Vec<i128>]) -> Result<Self, MatrixError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(MatrixError::BadData {
                    rows: rows.len(),
                    cols,
                    len: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(IntMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> i128 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: i128) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[i128] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<i128>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn entries(&self) -> &[i128] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    pub fn checked_mul(&self, other: &IntMatrix) -> Result<IntMatrix, MatrixError> {
        if self.cols != other.rows {
            return Err(MatrixError::ShapeMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc: i128 = 0;
                for k in 0..self.cols {
                    let term = self
                        .get(r, k)
                        .checked_mul(other.get(k, c))
                        .ok_or(MatrixError::Overflow)?;
                    acc = acc.checked_add(term).ok_or(MatrixError::Overflow)?;
                }
                out.data[r * other.cols + c] = acc;
            }
        }
        Ok(out)
    }

    pub fn checked_mul_vec(&self, v: &[i128]) -> Result<Vec<i128>, MatrixError> {
        if v.len() != self.cols {
            return Err(MatrixError::ShapeMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: v.len(),
                right_cols: 1,
            });
        }
        let mut out = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let mut acc: i128 = 0;
            for (k, x) in v.iter().enumerate() {
                let term = self
                    .get(r, k)
                    .checked_mul(*x)
                    .ok_or(MatrixError::Overflow)?;
                acc = acc.checked_add(term).ok_or(MatrixError::Overflow)?;
            }
            out.push(acc);
        }
        Ok(out)
    }

    pub fn min_entry(&self) -> Option<i128> {
        self.data.iter().copied().min()
    }

    /// Every row and every column has a nonzero entry.
    pub fn is_proper(&self) -> bool {
        let rows_ok = (0..self.rows).all(|r| self.row(r).iter().any(|&x| x != 0));
        let cols_ok = (0..self.cols).all(|c| (0..self.rows).any(|r| self.get(r, c) != 0));
        rows_ok && cols_ok
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&x| x >= 0)
    }

    pub fn is_diagonal(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|r| (0..self.cols).all(|c| r == c || self.get(r, c) == 0))
    }

    /// Rank over the rationals (fraction-free Bareiss elimination).
    pub fn rank(&self) -> Result<usize, MatrixError> {
        let mut a = self.data.clone();
        let (rows, cols) = (self.rows, self.cols);
        let mut rank = 0;
        let mut prev: i128 = 1;
        for c in 0..cols {
            if rank == rows {
                break;
            }
            let Some(p) = (rank..rows).find(|&r| a[r * cols + c] != 0) else {
                continue;
            };
            if p != rank {
                for k in 0..cols {
                    a.swap(p * cols + k, rank * cols + k);
                }
            }
            let pivot = a[rank * cols + c];
            for r in rank + 1..rows {
                let factor = a[r * cols + c];
                for k in c..cols {
                    let lhs = a[r * cols + k]
                        .checked_mul(pivot)
                        .ok_or(MatrixError::Overflow)?;
                    let rhs = factor
                        .checked_mul(a[rank * cols + k])
                        .ok_or(MatrixError::Overflow)?;
                    let diff = lhs.checked_sub(rhs).ok_or(MatrixError::Overflow)?;
                    a[r * cols + k] = diff / prev;
                }
            }
            prev = pivot;
            rank += 1;
        }
        Ok(rank)
    }

    /// Injective as a map `Z^cols -> Z^rows`.
    pub fn has_full_column_rank(&self) -> Result<bool, MatrixError> {
        Ok(self.rank()? == self.cols)
    }
}

/// Dense matrix of Gaussian rationals.
#[derive(Clone, PartialEq, Eq)]
pub struct CoeffMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Coeff>,
}

impl fmt::Debug for CoeffMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for r in 0..self.rows {
            if r > 0 {
                f.write_str("; ")?;
            }
            for c in 0..self.cols {
                if c > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{}", self.get(r, c))?;
            }
        }
        f.write_str("]")
    }
}

impl CoeffMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CoeffMatrix {
            rows,
            cols,
            data: vec![Coeff::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Coeff::one());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Coeff {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Coeff) {
        self.data[r * self.cols + c] = v;
    }

    pub fn add_at(&mut self, r: usize, c: usize, v: Coeff) {
        let cell = &mut self.data[r * self.cols + c];
        *cell += v;
    }

    pub fn mul(&self, other: &CoeffMatrix) -> Result<CoeffMatrix, MatrixError> {
        if self.cols != other.rows {
            return Err(MatrixError::ShapeMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    out.add_at(r, c, a * other.get(k, c));
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CoeffMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).conj());
            }
        }
        t
    }

    pub fn is_hermitian(&self) -> bool {
        self.rows == self.cols && *self == self.adjoint()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    /// Exact positive-semidefiniteness test for Hermitian matrices by
    /// symmetric Gaussian elimination with diagonal pivots.
    pub fn is_positive_semidefinite(&self) -> bool {
        if !self.is_hermitian() {
            return false;
        }
        let mut m = self.clone();
        let mut active: Vec<usize> = (0..m.rows).collect();
        while !active.is_empty() {
            let mut pivot = None;
            for &i in &active {
                let d = m.get(i, i);
                if d.re.is_negative() {
                    return false;
                }
                if d.re.is_positive() && pivot.is_none() {
                    pivot = Some(i);
                }
            }
            let Some(p) = pivot else {
                // zero diagonal on the active block: PSD only if the block vanishes
                return active
                    .iter()
                    .all(|&i| active.iter().all(|&j| m.get(i, j).is_zero()));
            };
            let d = m.get(p, p);
            active.retain(|&i| i != p);
            for &i in &active {
                let f = m.get(i, p) / d;
                for &j in &active {
                    let v = m.get(i, j) - f * m.get(p, j);
                    m.set(i, j, v);
                }
            }
        }
        true
    }
}

pub fn gcd_u128(a: u128, b: u128) -> u128 {
    num_integer::gcd(a, b)
}

pub fn lcm_u128(a: u128, b: u128) -> Option<u128> {
    if a == 0 || b == 0 {
        return Some(0);
    }
    (a / num_integer::gcd(a, b)).checked_mul(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_detects_dependent_rows() {
        let m = IntMatrix::from_rows(&[vec![1, 2], vec![2, 4]]).unwrap();
        assert_eq!(m.rank().unwrap(), 1);
        let m = IntMatrix::from_rows(&[vec![2, 1], vec![1, 1]]).unwrap();
        assert_eq!(m.rank().unwrap(), 2);
        let m = IntMatrix::from_rows(&[vec![1, 1]]).unwrap();
        assert!(!m.has_full_column_rank().unwrap());
    }

    #[test]
    fn overflow_is_reported() {
        let big = IntMatrix::from_rows(&[vec![i128::MAX / 2]]).unwrap();
        assert_eq!(big.checked_mul(&big), Err(MatrixError::Overflow));
    }

    #[test]
    fn psd_checks() {
        let mut m = CoeffMatrix::zeros(2, 2);
        m.set(0, 0, coeff(1, 0));
        m.set(0, 1, coeff(1, 0));
        m.set(1, 0, coeff(1, 0));
        m.set(1, 1, coeff(1, 0));
        assert!(m.is_positive_semidefinite());
        m.set(1, 1, coeff(0, 0));
        assert!(!m.is_positive_semidefinite());
        let mut h = CoeffMatrix::zeros(2, 2);
        h.set(0, 1, coeff(0, 1));
        h.set(1, 0, coeff(0, -1));
        assert!(h.is_hermitian());
        assert!(!h.is_positive_semidefinite());
    }
}
