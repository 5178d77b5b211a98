//! Small dense matrices over [`Scalar`].

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::scalar::Scalar;

#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![Scalar::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Scalar::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    /// Product that skips zero entries of `self`; the Lax matrices are banded.
    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = &rhs[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, c: &Scalar) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * c).collect(),
        }
    }

    pub fn mul_vec(&self, v: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Determinant by exact Gaussian elimination.
    pub fn det(&self) -> Scalar {
        assert_eq!(self.rows, self.cols, "det of non-square matrix");
        let n = self.rows;
        let mut m = self.clone();
        let mut det = Scalar::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&r| !m[(r, c)].is_zero()) else {
                return Scalar::zero();
            };
            if p != c {
                m.swap_rows(p, c);
                det = -det;
            }
            let pivot = m[(c, c)].clone();
            det *= &pivot;
            for r in c + 1..n {
                if m[(r, c)].is_zero() {
                    continue;
                }
                let factor = &m[(r, c)] / &pivot;
                for k in c..n {
                    let v = &factor * &m[(c, k)];
                    m[(r, k)] -= v;
                }
            }
        }
        det
    }

    /// Rank by exact row reduction.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        for c in 0..self.cols {
            let Some(p) = (rank..self.rows).find(|&r| !m[(r, c)].is_zero()) else {
                continue;
            };
            m.swap_rows(p, rank);
            let pivot = m[(rank, c)].clone();
            for r in rank + 1..self.rows {
                if m[(r, c)].is_zero() {
                    continue;
                }
                let factor = &m[(r, c)] / &pivot;
                for k in c..self.cols {
                    let v = &factor * &m[(rank, k)];
                    m[(r, k)] -= v;
                }
            }
            rank += 1;
        }
        rank
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for k in 0..self.cols {
            self.data.swap(a * self.cols + k, b * self.cols + k);
        }
    }

    pub fn max_bits(&self) -> u64 {
        self.data.iter().map(Scalar::bits).max().unwrap_or(0)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = Scalar;
    fn index(&self, (i, j): (usize, usize)) -> &Scalar {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Scalar {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries((0..self.rows).map(|i| self.row(i)))
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::sc;

    fn m(rows: &[&[i64]]) -> Matrix {
        Matrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| Scalar::from_int(x)).collect())
                .collect(),
        )
    }

    #[test]
    fn determinant_small_cases() {
        assert_eq!(m(&[&[2, 1], &[7, 4]]).det(), Scalar::from_int(1));
        assert_eq!(m(&[&[0, 1], &[1, 0]]).det(), Scalar::from_int(-1));
        assert_eq!(m(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 9]]).det(), Scalar::zero());
        assert_eq!(m(&[&[0, 2, 1], &[3, 0, 0], &[1, 1, 1]]).det(), Scalar::from_int(-3));
    }

    #[test]
    fn rank_and_products() {
        let a = m(&[&[1, 2], &[2, 4]]);
        assert_eq!(a.rank(), 1);
        assert_eq!(Matrix::identity(3).rank(), 3);
        assert_eq!(Matrix::zeros(2, 3).rank(), 0);
        let b = m(&[&[1, 0], &[1, 1]]);
        assert_eq!(a.mul(&b), m(&[&[3, 2], &[6, 4]]));
        assert_eq!(a.mul_vec(&[sc(1, 2), sc(1, 2)]), vec![sc(3, 2), Scalar::from_int(3)]);
    }
}
