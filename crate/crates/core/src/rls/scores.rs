use crate::error::{Error, LinalgError, Result};
use crate::featmap::FeatureBatch;
use crate::linalg::{solve_spd, Cholesky, Matrix};

/// Which algebraic form produced a set of scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlsMethod {
    /// `φᵢᵀ (C + nγI)⁻¹ φᵢ` with `C = Φᵀ Φ`; cost driven by the feature dimension.
    Primal,
    /// `(K (K + nγI)⁻¹)ᵢᵢ`; cost driven by the number of points.
    Dual,
}

/// γ-ridge leverage scores of `n` points.
#[derive(Debug, Clone, PartialEq)]
pub struct LeverageScores {
    pub gamma: f64,
    pub scores: Vec<f64>,
    pub method: RlsMethod,
}

impl LeverageScores {
    pub fn n(&self) -> usize {
        self.scores.len()
    }

    /// `Σ ℓᵢ = Tr(K (K + nγI)⁻¹)`.
    pub fn effective_dimension(&self) -> f64 {
        self.scores.iter().sum()
    }
}

/// Input of [`rls_auto`].
#[derive(Debug, Clone, Copy)]
pub enum RlsInput<'a> {
    Kernel(&'a Matrix),
    Features(&'a FeatureBatch),
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::Parameter(format!("gamma must be positive, got {gamma}")));
    }
    Ok(())
}

/// Dual form `ℓᵢ = (K (K + nγI)⁻¹)ᵢᵢ = 1 - nγ ((K + nγI)⁻¹)ᵢᵢ`.
pub fn rls_dual(kernel: &Matrix, gamma: f64) -> Result<LeverageScores> {
    check_gamma(gamma)?;
    if !kernel.is_square() {
        return Err(LinalgError::NotSquare {
            rows: kernel.rows(),
            cols: kernel.cols(),
        }
        .into());
    }
    if !kernel.is_symmetric() {
        return Err(LinalgError::NotSymmetric {
            deviation: kernel.asymmetry(),
        }
        .into());
    }
    let n = kernel.rows();
    if n == 0 {
        return Err(Error::Data("cannot score an empty set".into()));
    }
    let shift = n as f64 * gamma;
    let mut a = kernel.clone();
    a.add_diag(shift);
    let scores = match Cholesky::new(&a) {
        Ok(ch) => {
            // ((LLᵀ)⁻¹)ᵢᵢ is the squared norm of column i of L⁻¹
            let inv = ch.inverse_factor();
            let mut diag_inv = vec![0.0; n];
            for r in inv.row_iter() {
                for (d, v) in diag_inv.iter_mut().zip(r) {
                    *d += v * v;
                }
            }
            diag_inv.iter().map(|d| 1.0 - shift * d).collect()
        }
        Err(_) => solve_spd(&a, kernel)?.diag(),
    };
    finish(gamma, scores, RlsMethod::Dual)
}

/// Primal form `ℓᵢ = φᵢᵀ (Φᵀ Φ + nγI)⁻¹ φᵢ`.
pub fn rls_primal(features: &FeatureBatch, gamma: f64) -> Result<LeverageScores> {
    check_gamma(gamma)?;
    let n = features.n();
    if n == 0 {
        return Err(Error::Data("cannot score an empty set".into()));
    }
    let phi = features.vectors();
    let mut c = phi.matmul_tn(phi)?.symmetrized();
    c.add_diag(n as f64 * gamma);
    let ch = Cholesky::new(&c)?;
    // rows of Φ L⁻ᵀ are L⁻¹ φᵢ
    let z = phi.matmul_nt(&ch.inverse_factor())?;
    let scores = z.row_iter().map(|r| crate::linalg::dot(r, r)).collect();
    finish(gamma, scores, RlsMethod::Primal)
}

fn finish(gamma: f64, scores: Vec<f64>, method: RlsMethod) -> Result<LeverageScores> {
    if let Some(bad) = scores.iter().find(|s| !s.is_finite() || **s < -1e-9 || **s > 1.0 + 1e-9) {
        return Err(Error::Data(format!(
            "leverage score {bad} outside [0, 1]; is the kernel positive semi-definite?"
        )));
    }
    Ok(LeverageScores {
        gamma,
        scores: scores.into_iter().map(|s| s.clamp(0.0, 1.0)).collect(),
        method,
    })
}

/// The form [`rls_auto`] uses for `n` points with `dim` features.
pub fn choose_method(n: usize, dim: usize) -> RlsMethod {
    if n > dim {
        RlsMethod::Primal
    } else {
        RlsMethod::Dual
    }
}

/// Primal when there are more points than features, dual otherwise.
pub fn rls_auto(input: RlsInput<'_>, gamma: f64) -> Result<LeverageScores> {
    match input {
        RlsInput::Kernel(k) => rls_dual(k, gamma),
        RlsInput::Features(f) => match choose_method(f.n(), f.dim()) {
            RlsMethod::Primal => rls_primal(f, gamma),
            RlsMethod::Dual => rls_dual(&f.gram(), gamma),
        },
    }
}
