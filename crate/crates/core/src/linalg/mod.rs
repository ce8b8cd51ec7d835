//! Dense row-major matrices and the handful of kernels the rest of the crate
//! needs: products, a cyclic Jacobi symmetric eigensolver, PSD square roots
//! and Cholesky-based SPD solves.

mod eigen;
mod solve;
mod svd;

pub use eigen::{psd_sqrt, sym_apply, sym_eig, EigenDecomposition, JACOBI_MAX_SWEEPS, JACOBI_TOL};
pub use solve::{solve_spd, Cholesky};
pub use svd::{nuclear_norm_and_polar, singular_values, RowSvd, SVD_MAX_SWEEPS};

use std::ops::{Index, IndexMut};

use crate::error::LinalgError;

/// Relative tolerance used by [`Matrix::is_symmetric`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Dense real matrix stored in row-major order.
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
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::Dimension(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally long rows. An empty slice gives a 0x0 matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(LinalgError::Dimension(format!(
                    "row {i} has {} entries, expected {cols}",
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

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on a zero chunk size
        let cols = self.cols.max(1);
        self.data.chunks_exact(cols).take(self.rows)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diag().iter().sum()
    }

    /// Largest absolute entry, 0 for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Selects rows by index, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// Largest deviation `|A[i,j] - A[j,i]|` relative to `max(1, |A[i,j]|)`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let a = self[(i, j)];
                let b = self[(j, i)];
                worst = worst.max((a - b).abs() / a.abs().max(1.0));
            }
        }
        worst
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && self.asymmetry() <= SYMMETRY_TOL
    }

    /// Returns `(A + Aᵀ) / 2`.
    pub fn symmetrized(&self) -> Matrix {
        let mut s = self.clone();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        s
    }

    pub fn scale(&self, c: f64) -> Matrix {
        let mut out = self.clone();
        out.scale_in_place(c);
        out
    }

    pub fn scale_in_place(&mut self, c: f64) {
        self.data.iter_mut().for_each(|v| *v *= c);
    }

    /// Adds `c` to every diagonal entry.
    pub fn add_diag(&mut self, c: f64) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += c;
        }
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: f64, other: &Matrix) -> Result<(), LinalgError> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
        Ok(())
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix, LinalgError> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    fn check_same_shape(&self, other: &Matrix) -> Result<(), LinalgError> {
        if self.shape() != other.shape() {
            return Err(LinalgError::Dimension(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }

    /// `A · B`.
    pub fn matmul(&self, b: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != b.rows {
            return Err(LinalgError::Dimension(format!(
                "cannot multiply {:?} by {:?}",
                self.shape(),
                b.shape()
            )));
        }
        let mut c = Matrix::zeros(self.rows, b.cols);
        gemm(
            (self.rows, self.cols, b.cols),
            (&self.data, self.cols, 1),
            (&b.data, b.cols, 1),
            &mut c,
        );
        Ok(c)
    }

    /// `Aᵀ · B`, without forming the transpose.
    pub fn matmul_tn(&self, b: &Matrix) -> Result<Matrix, LinalgError> {
        if self.rows != b.rows {
            return Err(LinalgError::Dimension(format!(
                "cannot multiply transpose of {:?} by {:?}",
                self.shape(),
                b.shape()
            )));
        }
        let mut c = Matrix::zeros(self.cols, b.cols);
        gemm(
            (self.cols, self.rows, b.cols),
            (&self.data, 1, self.cols),
            (&b.data, b.cols, 1),
            &mut c,
        );
        Ok(c)
    }

    /// `A · Bᵀ`, without forming the transpose.
    pub fn matmul_nt(&self, b: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != b.cols {
            return Err(LinalgError::Dimension(format!(
                "cannot multiply {:?} by transpose of {:?}",
                self.shape(),
                b.shape()
            )));
        }
        let mut c = Matrix::zeros(self.rows, b.rows);
        gemm(
            (self.rows, self.cols, b.rows),
            (&self.data, self.cols, 1),
            (&b.data, 1, b.cols),
            &mut c,
        );
        Ok(c)
    }

    /// Gram matrix `A · Aᵀ`, exactly symmetric.
    pub fn gram(&self) -> Matrix {
        let mut g = self.matmul_nt(self).expect("shapes agree");
        let n = self.rows;
        for i in 0..n {
            for j in 0..i {
                g.data[j * n + i] = g.data[i * n + j];
            }
        }
        g
    }

    /// `A · x` for a vector `x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::Dimension(format!(
                "vector of length {} against {:?}",
                x.len(),
                self.shape()
            )));
        }
        Ok(self.row_iter().map(|r| dot(r, x)).collect())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// `C = A · B` for `(m, k, n)` with row/column strides given per operand.
fn gemm(dims: (usize, usize, usize), a: (&[f64], usize, usize), b: (&[f64], usize, usize), c: &mut Matrix) {
    let (m, k, n) = dims;
    if m == 0 || n == 0 {
        return;
    }
    debug_assert!(c.data.len() == m * n);
    debug_assert!(k == 0 || a.0.len() >= (m - 1) * a.1 + (k - 1) * a.2 + 1);
    debug_assert!(k == 0 || b.0.len() >= (k - 1) * b.1 + (n - 1) * b.2 + 1);
    // SAFETY: the callers pass buffers whose lengths match the dimensions and
    // strides (checked above in debug builds), and `c` does not alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.0.as_ptr(),
            a.1 as isize,
            a.2 as isize,
            b.0.as_ptr(),
            b.1 as isize,
            b.2 as isize,
            0.0,
            c.data.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Dot product with four independent accumulators so the loop vectorizes.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += c * x`.
#[inline]
pub fn axpy_slice(y: &mut [f64], c: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}
