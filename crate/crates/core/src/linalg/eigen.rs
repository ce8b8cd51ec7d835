use super::Matrix;
use crate::error::LinalgError;

/// Off-diagonal Frobenius norm, relative to the input's Frobenius norm, below
/// which the Jacobi iteration stops.
pub const JACOBI_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues below `-NOT_PSD_TOL * max(1, |A|_max)` reject a matrix as not PSD.
const NOT_PSD_TOL: f64 = 1e-6;

/// Eigenpairs of a real symmetric matrix.
///
/// `eigenvalues` are sorted in descending order and column `j` of
/// `eigenvectors` belongs to `eigenvalues[j]`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl EigenDecomposition {
    /// Rebuilds `Q · diag(f(λ)) · Qᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let q = &self.eigenvectors;
        let n = q.rows();
        let mut scaled = q.clone();
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        for i in 0..n {
            for (v, s) in scaled.row_mut(i).iter_mut().zip(&fl) {
                *v *= s;
            }
        }
        scaled
            .matmul_nt(q)
            .expect("eigenvector matrix is square")
            .symmetrized()
    }

    pub fn reconstruct(&self) -> Matrix {
        self.reconstruct_with(|l| l)
    }
}

fn check_symmetric(a: &Matrix) -> Result<(), LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let deviation = a.asymmetry();
    if deviation > super::SYMMETRY_TOL {
        return Err(LinalgError::NotSymmetric { deviation });
    }
    if !a.all_finite() {
        return Err(LinalgError::NonFinite("eigendecomposition input".into()));
    }
    Ok(())
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eig(a: &Matrix) -> Result<EigenDecomposition, LinalgError> {
    check_symmetric(a)?;
    let n = a.rows();
    // work on the exactly symmetric part so tolerated noise cannot accumulate
    let mut w = a.symmetrized();
    let mut v = Matrix::identity(n);
    let scale = w.frobenius_norm();

    let mut converged_sweeps = 0;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off = off_diagonal_norm(&w);
        if off == 0.0 {
            break;
        }
        if off <= JACOBI_TOL * scale {
            // quadratic convergence: one more sweep polishes the small eigenvalues
            converged_sweeps += 1;
            if converged_sweeps > 1 {
                break;
            }
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut w, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let d = w.diag();
    order.sort_by(|&i, &j| d[j].total_cmp(&d[i]));
    let eigenvalues = order.iter().map(|&i| d[i]).collect();
    let eigenvectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(w: &Matrix) -> f64 {
    let n = w.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += w[(i, j)] * w[(i, j)];
        }
    }
    (2.0 * s).sqrt()
}

/// Annihilates `w[p,q]` with a plane rotation and accumulates it into `v`.
fn rotate(w: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = w[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = w[(p, p)];
    let aqq = w[(q, q)];
    // negligible against both diagonal entries: drop it
    let g = 100.0 * apq.abs();
    if app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
        w[(p, q)] = 0.0;
        w[(q, p)] = 0.0;
        return;
    }
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let n = w.rows();
    for k in 0..n {
        let wkp = w[(k, p)];
        let wkq = w[(k, q)];
        w[(k, p)] = c * wkp - s * wkq;
        w[(k, q)] = s * wkp + c * wkq;
    }
    for k in 0..n {
        let wpk = w[(p, k)];
        let wqk = w[(q, k)];
        w[(p, k)] = c * wpk - s * wqk;
        w[(q, k)] = s * wpk + c * wqk;
    }
    w[(p, p)] = app - t * apq;
    w[(q, q)] = aqq + t * apq;
    w[(p, q)] = 0.0;
    w[(q, p)] = 0.0;

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Applies a scalar function to the spectrum of a symmetric matrix.
pub fn sym_apply(a: &Matrix, f: impl Fn(f64) -> f64) -> Result<Matrix, LinalgError> {
    Ok(sym_eig(a)?.reconstruct_with(f))
}

/// Principal square root of a symmetric PSD matrix.
///
/// Eigenvalues below `floor` (slightly negative noise included) are raised to
/// `floor` before taking roots. Eigenvalues below `-1e-6 · max(1, |a|_max)`
/// are treated as a genuine loss of definiteness.
pub fn psd_sqrt(a: &Matrix, floor: f64) -> Result<Matrix, LinalgError> {
    let eig = sym_eig(a)?;
    check_psd(&eig, a)?;
    let floor = floor.max(0.0);
    Ok(eig.reconstruct_with(|l| l.max(floor).sqrt()))
}

pub(crate) fn check_psd(eig: &EigenDecomposition, a: &Matrix) -> Result<(), LinalgError> {
    let min = eig.eigenvalues.last().copied().unwrap_or(0.0);
    if min < -NOT_PSD_TOL * a.max_abs().max(1.0) {
        return Err(LinalgError::NotPsd {
            min_eigenvalue: min,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        m.add(&m.transpose()).unwrap().scale(0.5)
    }

    fn random_psd(n: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        m.matmul_tn(&m).unwrap()
    }

    fn orthonormality_error(q: &Matrix) -> f64 {
        q.matmul_tn(q)
            .unwrap()
            .sub(&Matrix::identity(q.cols()))
            .unwrap()
            .max_abs()
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let e = sym_eig(&Matrix::identity(3)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0, 1.0]);
        assert!(orthonormality_error(&e.eigenvectors) <= 1e-9);
    }

    #[test]
    fn diagonal_is_sorted_permuted_identity() {
        let e = sym_eig(&Matrix::from_diag(&[1.0, 4.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![4.0, 1.0]);
        assert_eq!(e.eigenvectors[(1, 0)].abs(), 1.0);
        assert_eq!(e.eigenvectors[(0, 1)].abs(), 1.0);
        assert_eq!(e.eigenvectors[(0, 0)], 0.0);
    }

    #[test]
    fn random_symmetric_reconstructs() {
        for seed in 0..10 {
            let a = random_symmetric(5, seed);
            let e = sym_eig(&a).unwrap();
            let err = e.reconstruct().sub(&a).unwrap().max_abs();
            assert!(err <= 1e-8 * a.max_abs(), "seed {seed}: {err}");
            assert!(orthonormality_error(&e.eigenvectors) <= 1e-9);
            assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn larger_graded_matrix_reconstructs() {
        let a = random_psd(60, 3);
        let e = sym_eig(&a).unwrap();
        assert!(e.reconstruct().sub(&a).unwrap().max_abs() <= 1e-8 * a.max_abs());
        assert!(orthonormality_error(&e.eigenvectors) <= 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            sym_eig(&Matrix::zeros(2, 3)),
            Err(LinalgError::NotSquare { .. })
        ));
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.5, 1.0]]).unwrap();
        assert!(matches!(sym_eig(&a), Err(LinalgError::NotSymmetric { .. })));
    }

    #[test]
    fn sqrt_closed_forms() {
        assert_eq!(
            psd_sqrt(&Matrix::identity(3), 0.0).unwrap(),
            Matrix::identity(3)
        );
        let b = psd_sqrt(&Matrix::from_diag(&[4.0, 9.0]), 0.0).unwrap();
        assert!(b.sub(&Matrix::from_diag(&[2.0, 3.0])).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn sqrt_squares_back() {
        for seed in 0..10 {
            let a = random_psd(4, seed);
            let b = psd_sqrt(&a, 0.0).unwrap();
            let err = b.matmul(&b).unwrap().sub(&a).unwrap().max_abs();
            assert!(err <= 1e-7 * a.max_abs().max(1.0));
        }
    }

    #[test]
    fn sqrt_clamps_noise_and_rejects_indefinite() {
        let noisy = Matrix::from_diag(&[1.0, -1e-10]);
        let b = psd_sqrt(&noisy, 0.0).unwrap();
        assert_eq!(b[(1, 1)], 0.0);
        let bad = Matrix::from_diag(&[1.0, -1e-3]);
        assert!(matches!(psd_sqrt(&bad, 0.0), Err(LinalgError::NotPsd { .. })));
    }
}
