use super::{sym_eig, Matrix};
use crate::error::LinalgError;

/// Eigenvalues with `|λ| <= SINGULAR_RTOL · max|λ|` make a matrix singular.
const SINGULAR_RTOL: f64 = 1e-14;

/// Lower-triangular Cholesky factor `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    /// Factors a symmetric positive-definite matrix. Only the lower triangle is read.
    pub fn new(a: &Matrix) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let n = a.rows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let lj = l.row(j)[..j].to_vec();
            let d = a[(j, j)] - super::dot(&lj, &lj);
            if !(d > 0.0) || !d.is_finite() {
                return Err(LinalgError::Singular);
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let s = a[(i, j)] - super::dot(&l.row(i)[..j], &lj);
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &Matrix {
        &self.l
    }

    /// Solves `L y = b` in place.
    pub fn forward_substitute(&self, b: &mut [f64]) {
        let n = self.l.rows();
        for i in 0..n {
            let row = self.l.row(i);
            let s = super::dot(&row[..i], &b[..i]);
            b[i] = (b[i] - s) / row[i];
        }
    }

    /// Solves `Lᵀ x = y` in place.
    pub fn backward_substitute(&self, y: &mut [f64]) {
        let n = self.l.rows();
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.forward_substitute(&mut x);
        self.backward_substitute(&mut x);
        x
    }

    pub fn solve(&self, b: &Matrix) -> Result<Matrix, LinalgError> {
        let n = self.l.rows();
        if b.rows() != n {
            return Err(LinalgError::Dimension(format!(
                "right-hand side has {} rows, system has {n}",
                b.rows()
            )));
        }
        let bt = b.transpose();
        let mut xt = Matrix::zeros(b.cols(), n);
        for j in 0..b.cols() {
            xt.row_mut(j).copy_from_slice(&self.solve_vec(bt.row(j)));
        }
        Ok(xt.transpose())
    }

    /// `L⁻¹`, lower triangular.
    pub fn inverse_factor(&self) -> Matrix {
        let n = self.l.rows();
        // rows of (L⁻¹)ᵀ are the solutions of L x = e_j
        let mut inv_t = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            // entries above j stay zero
            for i in j..n {
                let row = self.l.row(i);
                let s = super::dot(&row[j..i], &e[j..i]);
                e[i] = (e[i] - s) / row[i];
            }
            inv_t.row_mut(j).copy_from_slice(&e);
        }
        inv_t.transpose()
    }
}

/// Solves `A X = B` for symmetric positive-definite `A`.
///
/// Cholesky is tried first; if it breaks down the system is solved through the
/// eigendecomposition, which still fails on a (numerically) singular `A`.
pub fn solve_spd(a: &Matrix, b: &Matrix) -> Result<Matrix, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if b.rows() != a.rows() {
        return Err(LinalgError::Dimension(format!(
            "right-hand side has {} rows, system has {}",
            b.rows(),
            a.rows()
        )));
    }
    match Cholesky::new(a) {
        Ok(ch) => ch.solve(b),
        Err(_) => eig_solve(a, b),
    }
}

fn eig_solve(a: &Matrix, b: &Matrix) -> Result<Matrix, LinalgError> {
    let eig = sym_eig(a)?;
    let largest = eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    if largest == 0.0
        || eig
            .eigenvalues
            .iter()
            .any(|l| l.abs() <= SINGULAR_RTOL * largest)
    {
        return Err(LinalgError::Singular);
    }
    let inv = eig.reconstruct_with(|l| 1.0 / l);
    inv.matmul(b)
}
