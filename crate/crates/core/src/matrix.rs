//! Small dense row-major matrix over a [`Scalar`] backend.
//!
//! Windows in this crate are a few dozen rows at most, so plain `O(n^3)`
//! products are used throughout.

use std::ops::{Index, IndexMut};

use crate::scalar::{max_abs, PrecisionContext, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<S: Scalar> Matrix<S> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize, ctx: &PrecisionContext) -> Self {
        let z = S::zero(ctx);
        Matrix::from_fn(rows, cols, |_, _| z.clone())
    }

    pub fn identity(n: usize, ctx: &PrecisionContext) -> Self {
        let z = S::zero(ctx);
        let o = S::one(ctx);
        Matrix::from_fn(n, n, |i, j| if i == j { o.clone() } else { z.clone() })
    }

    pub fn diagonal(values: &[S], ctx: &PrecisionContext) -> Self {
        let z = S::zero(ctx);
        Matrix::from_fn(values.len(), values.len(), |i, j| {
            if i == j {
                values[i].clone()
            } else {
                z.clone()
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Top-left `rows x cols` block.
    pub fn block(&self, rows: usize, cols: usize) -> Self {
        assert!(rows <= self.rows && cols <= self.cols, "block exceeds matrix");
        Matrix::from_fn(rows, cols, |i, j| self[(i, j)].clone())
    }

    /// Block starting at `(row0, col0)`.
    pub fn sub_block(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Self {
        assert!(row0 + rows <= self.rows && col0 + cols <= self.cols, "block exceeds matrix");
        Matrix::from_fn(rows, cols, |i, j| self[(row0 + i, col0 + j)].clone())
    }

    pub fn diag(&self) -> Vec<S> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].clone()).collect()
    }

    pub fn mul(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        Matrix::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = self[(i, 0)].clone() * &other[(0, j)];
            for k in 1..self.cols {
                acc += &(self[(i, k)].clone() * &other[(k, j)]);
            }
            acc
        })
    }

    /// `diag(d) * self`
    pub fn scale_rows(&self, d: &[S]) -> Matrix<S> {
        Matrix::from_fn(self.rows, self.cols, |i, j| d[i].clone() * &self[(i, j)])
    }

    /// `self * diag(d)`
    pub fn scale_cols(&self, d: &[S]) -> Matrix<S> {
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].clone() * &d[j])
    }

    pub fn max_abs_diff(&self, other: &Matrix<S>, ctx: &PrecisionContext) -> S {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        max_abs(
            ctx,
            self.data.iter().zip(&other.data).map(|(a, b)| a.clone() - b),
        )
    }

    /// Largest `|a_ij|` over the entries selected by `keep(i, j)`.
    pub fn max_abs_where(&self, ctx: &PrecisionContext, keep: impl Fn(usize, usize) -> bool) -> S {
        max_abs(
            ctx,
            (0..self.rows)
                .flat_map(|i| (0..self.cols).map(move |j| (i, j)))
                .filter(|&(i, j)| keep(i, j))
                .map(|(i, j)| self[(i, j)].clone()),
        )
    }

    /// Inverse of a unit lower triangular matrix by forward substitution.
    /// Entries above the diagonal are ignored.
    pub fn unit_lower_inverse(&self) -> Matrix<S> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut x = Matrix::from_fn(n, n, |i, j| {
            if i == j {
                self[(0, 0)].one_like()
            } else {
                self[(0, 0)].zero_like()
            }
        });
        for j in 0..n {
            for i in j + 1..n {
                let mut acc = self[(i, j)].clone();
                for k in j + 1..i {
                    acc += &(self[(i, k)].clone() * &x[(k, j)]);
                }
                x[(i, j)] = -acc;
            }
        }
        x
    }

    /// Inverse of a unit upper triangular matrix by back substitution.
    /// Entries below the diagonal are ignored.
    pub fn unit_upper_inverse(&self) -> Matrix<S> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut x = Matrix::from_fn(n, n, |i, j| {
            if i == j {
                self[(0, 0)].one_like()
            } else {
                self[(0, 0)].zero_like()
            }
        });
        for j in 0..n {
            for i in (0..j).rev() {
                let mut acc = self[(i, j)].clone();
                for k in i + 1..j {
                    acc += &(self[(i, k)].clone() * &x[(k, j)]);
                }
                x[(i, j)] = -acc;
            }
        }
        x
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &S)> {
        self.data
            .iter()
            .enumerate()
            .map(move |(idx, v)| (idx / self.cols, idx % self.cols, v))
    }
}
