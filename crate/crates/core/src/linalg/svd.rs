use super::{dot, Matrix};
use crate::error::LinalgError;

pub const SVD_MAX_SWEEPS: usize = 60;

/// One-sided Jacobi orthogonalization of the rows: `Uᵀ A = R` with
/// orthogonal `U` and mutually orthogonal rows `rᵢ = σᵢ vᵢᵀ`.
///
/// Singular values come out as row norms, so zero singular values carry
/// absolute error `O(ε‖A‖)` rather than the `O(√ε ‖A‖)` of an eigen route.
#[derive(Debug, Clone)]
pub struct RowSvd {
    /// Accumulated rotations `Uᵀ`.
    pub ut: Matrix,
    /// Orthogonalized rows.
    pub rows: Matrix,
}

impl RowSvd {
    pub fn new(a: &Matrix) -> Result<Self, LinalgError> {
        if !a.all_finite() {
            return Err(LinalgError::NonFinite("SVD input".into()));
        }
        let n = a.rows();
        let mut rows = a.clone();
        let mut ut = Matrix::identity(n);
        // rows below this squared norm are numerically zero
        let negligible = (f64::EPSILON * a.frobenius_norm()).powi(2);
        for _ in 0..SVD_MAX_SWEEPS {
            let mut norms: Vec<f64> = rows.row_iter().map(|r| dot(r, r)).collect();
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let (alpha, beta) = (norms[p], norms[q]);
                    if alpha <= negligible || beta <= negligible {
                        continue;
                    }
                    let gamma = dot(rows.row(p), rows.row(q));
                    if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    rotate_rows(&mut rows, p, q, c, s);
                    rotate_rows(&mut ut, p, q, c, s);
                    norms[p] = alpha - t * gamma;
                    norms[q] = beta + t * gamma;
                }
            }
            if !rotated {
                return Ok(Self { ut, rows });
            }
        }
        Err(LinalgError::NonFinite("one-sided Jacobi did not converge".into()))
    }

    pub fn singular_values(&self) -> Vec<f64> {
        self.rows.row_iter().map(|r| dot(r, r).sqrt()).collect()
    }
}

fn rotate_rows(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let cols = m.cols();
    let data = m.as_mut_slice();
    let (head, tail) = data.split_at_mut(q * cols);
    let rp = &mut head[p * cols..(p + 1) * cols];
    let rq = &mut tail[..cols];
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Singular values in no particular order.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>, LinalgError> {
    Ok(RowSvd::new(a)?.singular_values())
}

/// Nuclear norm `‖A‖_*` and the polar factor `U Vᵀ` of a square matrix,
/// which is the gradient of the nuclear norm wherever it exists.
///
/// Singular values at or below `rel_cutoff · σ_max` count as zero and drop
/// out of the polar factor.
pub fn nuclear_norm_and_polar(a: &Matrix, rel_cutoff: f64) -> Result<(f64, Matrix), LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let svd = RowSvd::new(a)?;
    let sigma = svd.singular_values();
    let cutoff = rel_cutoff.max(a.rows() as f64 * f64::EPSILON) * sigma.iter().cloned().fold(0.0, f64::max);
    let mut scaled = svd.rows.clone();
    for (i, &s) in sigma.iter().enumerate() {
        let f = if s > cutoff { 1.0 / s } else { 0.0 };
        scaled.row_mut(i).iter_mut().for_each(|v| *v *= f);
    }
    // U diag(1/σ) R
    let polar = svd.ut.matmul_tn(&scaled)?;
    Ok((sigma.iter().sum(), polar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_singular_values() {
        let mut s = singular_values(&Matrix::from_diag(&[3.0, -2.0, 0.0])).unwrap();
        s.sort_by(f64::total_cmp);
        assert_eq!(s, vec![0.0, 2.0, 3.0]);
    }

    #[test]
    fn matches_gram_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Matrix::from_fn(7, 5, |_, _| rng.random_range(-1.0..1.0));
        let mut s: Vec<f64> = singular_values(&a).unwrap().iter().map(|v| v * v).collect();
        s.sort_by(|x, y| y.total_cmp(x));
        let eig = sym_eig(&a.gram()).unwrap().eigenvalues;
        for (x, y) in s.iter().zip(&eig) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_deficient_zero_is_tiny() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let l = Matrix::from_fn(6, 2, |_, _| rng.random_range(-1.0..1.0));
        let a = l.matmul_nt(&Matrix::from_fn(6, 2, |_, _| rng.random_range(-1.0..1.0))).unwrap();
        let mut s = singular_values(&a).unwrap();
        s.sort_by(f64::total_cmp);
        assert!(s[..4].iter().all(|&v| v < 1e-14), "{s:?}");
    }

    #[test]
    fn polar_factor_of_orthogonal_times_spd() {
        let (c, s) = (0.6, 0.8);
        let q = Matrix::from_rows(&[[c, -s], [s, c]]).unwrap();
        let spd = Matrix::from_rows(&[[2.0, 0.5], [0.5, 1.0]]).unwrap();
        let a = q.matmul(&spd).unwrap();
        let (nuc, p) = nuclear_norm_and_polar(&a, 0.0).unwrap();
        assert!((nuc - spd.trace()).abs() < 1e-12);
        for (x, y) in p.as_slice().iter().zip(q.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_singular_values_leave_the_polar_factor() {
        let a = Matrix::from_diag(&[2.0, 1e-20, -3.0]);
        let (nuc, p) = nuclear_norm_and_polar(&a, 1e-12).unwrap();
        assert!((nuc - 5.0).abs() < 1e-15);
        let expected = Matrix::from_diag(&[1.0, 0.0, -1.0]);
        for (x, y) in p.as_slice().iter().zip(expected.as_slice()) {
            assert!((x - y).abs() < 1e-15);
        }
    }
}
