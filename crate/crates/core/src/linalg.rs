//! Small dense linear algebra: a row-major matrix and a Cholesky solver.
//!
//! The systems solved here are normal equations of at most a dozen unknowns,
//! so nothing in this module tries to be clever about blocking or SIMD.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<F>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix buffer of length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally sized rows. An empty slice yields a 0x0 matrix.
    pub fn from_rows<R: AsRef<[F]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::invalid(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Single-column matrix.
    pub fn column_vector(values: &[F]) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[F] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> F {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: F) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[F] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<F> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// New matrix holding the given rows, in the given order (repeats allowed).
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// Appends one column with a constant value.
    pub fn with_constant_column(&self, value: F) -> Self {
        let cols = self.cols + 1;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.push(value);
        }
        Self {
            rows: self.rows,
            cols,
            data,
        }
    }

    /// Appends one column of per-row values.
    pub fn with_column(&self, values: &[F]) -> Result<Self> {
        if values.len() != self.rows {
            return Err(Error::invalid("appended column length mismatch"));
        }
        let cols = self.cols + 1;
        let mut data = Vec::with_capacity(self.rows * cols);
        for (r, &v) in values.iter().enumerate() {
            data.extend_from_slice(self.row(r));
            data.push(v);
        }
        Ok(Self {
            rows: self.rows,
            cols,
            data,
        })
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Square symmetric matrix stored densely, used for normal equations.
#[derive(Debug, Clone)]
pub struct SymMatrix<F> {
    n: usize,
    data: Vec<F>,
}

impl<F: Scalar> SymMatrix<F> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![F::zero(); n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: F) {
        self.data[i * self.n + j] = self.data[i * self.n + j] + v;
    }

    /// Accumulates `weight * v v^T` into the upper triangle. Call
    /// [`SymMatrix::mirror_upper`] once accumulation is done.
    #[inline]
    pub fn rank_one_upper(&mut self, v: &[F], weight: F) {
        for i in 0..self.n {
            let wi = weight * v[i];
            let row = &mut self.data[i * self.n..(i + 1) * self.n];
            for j in i..row.len() {
                row[j] = row[j] + wi * v[j];
            }
        }
    }

    pub fn mirror_upper(&mut self) {
        for i in 0..self.n {
            for j in 0..i {
                self.data[i * self.n + j] = self.data[j * self.n + i];
            }
        }
    }

    /// Solves `A x = b` for symmetric positive definite `A` via Cholesky.
    pub fn cholesky_solve(&self, b: &[F]) -> Result<Vec<F>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::invalid("right-hand side length mismatch"));
        }
        let mut l = vec![F::zero(); n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s = s - l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= F::zero() || !s.is_finite() {
                        return Err(Error::Singular);
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        // forward then backward substitution
        let mut y = vec![F::zero(); n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s = s - l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        let mut x = vec![F::zero(); n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s = s - l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        Ok(x)
    }
}

pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm<F: Scalar>(a: &[F]) -> F {
    dot(a, a).sqrt()
}
