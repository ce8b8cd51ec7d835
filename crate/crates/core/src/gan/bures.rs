use crate::error::{Error, LinalgError, Result};
use crate::featmap::FeatureBatch;
use crate::linalg::{nuclear_norm_and_polar, psd_sqrt, sym_eig, Matrix};

/// Regularizer added inside matrix square roots; in the batch form it is the
/// relative cutoff below which singular values count as zero.
pub const DEFAULT_BURES_EPS: f64 = 1e-12;

/// Rows centered by the batch mean and then scaled to unit length.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedBatch {
    /// Unit rows (zero where the centered row vanished).
    pub rows: Matrix,
    /// Norms of the centered rows.
    pub norms: Vec<f64>,
}

/// Centers rows by their mean and L2-normalizes them; zero rows stay zero.
pub fn normalize_features(h: &Matrix) -> Result<NormalizedBatch> {
    let (b, m) = h.shape();
    if b < 2 {
        return Err(Error::Shape(format!("feature batch needs at least 2 rows, got {b}")));
    }
    let mut mean = vec![0.0; m];
    for r in h.row_iter() {
        crate::linalg::axpy_slice(&mut mean, 1.0 / b as f64, r);
    }
    let mut rows = h.clone();
    let mut norms = Vec::with_capacity(b);
    for i in 0..b {
        let r = rows.row_mut(i);
        for (v, mu) in r.iter_mut().zip(&mean) {
            *v -= mu;
        }
        let norm = crate::linalg::dot(r, r).sqrt();
        if norm > 0.0 {
            r.iter_mut().for_each(|v| *v /= norm);
        } else {
            r.iter_mut().for_each(|v| *v = 0.0);
        }
        norms.push(norm);
    }
    Ok(NormalizedBatch { rows, norms })
}

/// Pulls a gradient with respect to the normalized rows back to the raw rows.
pub fn normalize_backward(batch: &NormalizedBatch, grad_rows: &Matrix) -> Result<Matrix> {
    let (b, m) = batch.rows.shape();
    if grad_rows.shape() != (b, m) {
        return Err(Error::Shape(format!(
            "gradient is {:?}, batch is {:?}",
            grad_rows.shape(),
            (b, m)
        )));
    }
    let mut g = grad_rows.clone();
    for i in 0..b {
        let norm = batch.norms[i];
        let y = batch.rows.row(i);
        let gi = g.row_mut(i);
        if norm > 0.0 {
            let proj = crate::linalg::dot(y, gi);
            for (gv, yv) in gi.iter_mut().zip(y) {
                *gv = (*gv - yv * proj) / norm;
            }
        } else {
            gi.iter_mut().for_each(|v| *v = 0.0);
        }
    }
    let mut mean = vec![0.0; m];
    for r in g.row_iter() {
        crate::linalg::axpy_slice(&mut mean, 1.0 / b as f64, r);
    }
    for i in 0..b {
        crate::linalg::axpy_slice(g.row_mut(i), -1.0, &mean);
    }
    Ok(g)
}

/// `(1/b) Σ φ̄ φ̄ᵀ` over centered, normalized rows.
pub fn batch_covariance(features: &FeatureBatch) -> Result<Matrix> {
    let y = normalize_features(features.vectors())?.rows;
    Ok(y.matmul_tn(&y)?.symmetrized().scale(1.0 / y.rows() as f64))
}

fn check_psd_input(c: &Matrix, name: &str) -> Result<()> {
    if !c.is_square() {
        return Err(LinalgError::NotSquare {
            rows: c.rows(),
            cols: c.cols(),
        }
        .into());
    }
    if !c.all_finite() {
        return Err(LinalgError::NonFinite(name.into()).into());
    }
    Ok(())
}

/// `B² = Tr C_d + Tr C_g − 2 Tr (A C_g A)^{1/2}` with `A = (C_d + εI)^{1/2}`, clamped at 0.
pub fn bures_sq(c_d: &Matrix, c_g: &Matrix, eps: f64) -> Result<f64> {
    check_psd_input(c_d, "C_d")?;
    check_psd_input(c_g, "C_g")?;
    if c_d.shape() != c_g.shape() {
        return Err(LinalgError::Dimension(format!("{:?} vs {:?}", c_d.shape(), c_g.shape())).into());
    }
    let _ = psd_sqrt(c_g, 0.0)?;
    let mut shifted = c_d.clone();
    shifted.add_diag(eps);
    let a = psd_sqrt(&shifted, 0.0)?;
    let m = a.matmul(c_g)?.matmul(&a)?.symmetrized();
    let root_trace: f64 = sym_eig(&m)?.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok((c_d.trace() + c_g.trace() - 2.0 * root_trace).max(0.0))
}

/// `∇_{C_g} B² = I − A M^{-1/2} A` with `M = A C_g A + εI`.
pub fn bures_sq_grad(c_d: &Matrix, c_g: &Matrix, eps: f64) -> Result<Matrix> {
    check_psd_input(c_d, "C_d")?;
    check_psd_input(c_g, "C_g")?;
    if c_d.shape() != c_g.shape() {
        return Err(LinalgError::Dimension(format!("{:?} vs {:?}", c_d.shape(), c_g.shape())).into());
    }
    let mut shifted = c_d.clone();
    shifted.add_diag(eps);
    let a = psd_sqrt(&shifted, 0.0)?;
    let mut m = a.matmul(c_g)?.matmul(&a)?.symmetrized();
    m.add_diag(eps);
    let eig = sym_eig(&m)?;
    if eig.eigenvalues.last().copied().unwrap_or(0.0) <= 0.0 {
        return Err(LinalgError::Singular.into());
    }
    let inv_root = eig.reconstruct_with(|l| 1.0 / l.sqrt());
    let mut g = a.matmul(&inv_root)?.matmul(&a)?.scale(-1.0);
    g.add_diag(1.0);
    Ok(g.symmetrized())
}

/// Bures term between the covariances of two normalized batches, with its
/// gradient with respect to the fake rows `y`.
///
/// With `C_d = XᵀX/b` and `C_g = YᵀY/b`, the root trace equals the nuclear
/// norm of `XYᵀ/b`, so the value is `tr C_d + tr C_g − 2‖XYᵀ/b‖_*` and the
/// gradient is `(2/b)(Y − PᵀX)` with `P` the polar factor of `XYᵀ`. Working
/// on singular values keeps both exact when the features are nearly
/// collinear, where square roots of eigenvalues would amplify roundoff.
/// Singular values below `rel_cutoff · σ_max` are treated as zero.
pub fn bures_value_and_grad(x: &Matrix, y: &Matrix, rel_cutoff: f64) -> Result<(f64, Matrix)> {
    if x.shape() != y.shape() {
        return Err(Error::Shape(format!("{:?} vs {:?}", x.shape(), y.shape())));
    }
    let bf = y.rows() as f64;
    let tr_d = crate::linalg::dot(x.as_slice(), x.as_slice()) / bf;
    let tr_g = crate::linalg::dot(y.as_slice(), y.as_slice()) / bf;
    let g = x.matmul_nt(y)?.scale(1.0 / bf);
    let (nuclear, p) = nuclear_norm_and_polar(&g, rel_cutoff)?;
    let mut grad = p.matmul_tn(x)?.scale(-2.0 / bf);
    grad.axpy(2.0 / bf, y)?;
    Ok(((tr_d + tr_g - 2.0 * nuclear).max(0.0), grad))
}
