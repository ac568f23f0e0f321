//! Dense row-major matrices and the minimum-norm least-squares solve that
//! every ILLS regression reduces to.

use std::ops::{Index, IndexMut};

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Relative singular-value cutoff: values below `RCOND * sigma_max` count as zero.
pub const RCOND: f64 = 1e-10;

/// Dense `rows x cols` matrix of `f64`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from a row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; every row must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Single-column matrix.
    pub fn column(values: &[f64]) -> Self {
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

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, values: &[f64]) {
        debug_assert_eq!(values.len(), self.rows);
        for (i, v) in values.iter().enumerate() {
            self[(i, j)] = *v;
        }
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest absolute entry, 0 for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "matvec of {}x{} matrix with vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok(self
            .iter_rows()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "matmul of {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(rhs.row(k)) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Output of [`lstsq`].
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresSolution {
    /// Minimum-norm minimiser of `||A x - b||_2`.
    pub coefficients: Vec<f64>,
    /// `||A x - b||_2` at the returned coefficients.
    pub residual_norm: f64,
    /// Number of singular values above the cutoff.
    pub rank: usize,
}

/// Minimum-norm least-squares solve through the SVD.
///
/// Singular values below [`RCOND`] times the largest one are discarded, so
/// rank-deficient systems (duplicated columns, saturated units) resolve to the
/// pseudo-inverse solution.
pub fn lstsq(a: &Matrix, b: &[f64]) -> Result<LeastSquaresSolution> {
    if a.rows != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "lstsq with {} rows but right-hand side of length {}",
            a.rows,
            b.len()
        )));
    }
    if !a.is_finite() {
        return Err(Error::NonFiniteInput("least-squares design matrix"));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("least-squares right-hand side"));
    }
    let n = a.cols;
    if a.rows == 0 || n == 0 {
        let residual_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        return Ok(LeastSquaresSolution {
            coefficients: vec![0.0; n],
            residual_norm,
            rank: 0,
        });
    }

    let svd = a.to_nalgebra().svd(true, true);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().fold(0.0_f64, |m, &s| m.max(s));
    let cutoff = RCOND * sigma_max;

    let rhs = DVector::from_column_slice(b);
    let mut x = DVector::<f64>::zeros(n);
    let mut rank = 0;
    if sigma_max > 0.0 {
        for (k, &s) in sigma.iter().enumerate() {
            if s <= cutoff {
                continue;
            }
            rank += 1;
            let coeff = u.column(k).dot(&rhs) / s;
            x.axpy(coeff, &v_t.row(k).transpose(), 1.0);
        }
    }

    let coefficients: Vec<f64> = x.iter().copied().collect();
    if coefficients.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("least-squares solution"));
    }
    let fitted = a.matvec(&coefficients)?;
    let residual_norm = fitted
        .iter()
        .zip(b)
        .map(|(f, y)| (f - y).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(LeastSquaresSolution {
        coefficients,
        residual_norm,
        rank,
    })
}
