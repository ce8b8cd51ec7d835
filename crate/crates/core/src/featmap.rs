//! Feature maps used to compute leverage scores: an implicit Gaussian kernel,
//! the discriminator's last hidden layer, and fixed features read from a file.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::{read_matrix_csv, write_matrix_csv};
use crate::linalg::{sym_eig, Matrix};
use crate::nn::Mlp;

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMapKind {
    /// `K(x, y) = exp(-‖x - y‖² / σ²)`.
    ImplicitGaussian { sigma: f64 },
    /// Last hidden layer of the current discriminator.
    DiscriminatorLayer,
    /// Precomputed features, one CSV row per training point.
    ExternalFeatures { path: PathBuf, has_header: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMapSpec {
    kind: FeatureMapKind,
    sketch_dim: Option<usize>,
}

impl FeatureMapSpec {
    pub fn new(kind: FeatureMapKind, sketch_dim: Option<usize>) -> Result<Self> {
        if let FeatureMapKind::ImplicitGaussian { sigma } = kind {
            check_sigma(sigma)?;
            if sketch_dim.is_some() {
                return Err(Error::Parameter(
                    "an implicit Gaussian feature map cannot be sketched".into(),
                ));
            }
        }
        if sketch_dim == Some(0) {
            return Err(Error::Parameter("sketch dimension must be at least 1".into()));
        }
        Ok(Self { kind, sketch_dim })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::new(FeatureMapKind::ImplicitGaussian { sigma }, None)
    }

    pub fn kind(&self) -> &FeatureMapKind {
        &self.kind
    }

    pub fn sketch_dim(&self) -> Option<usize> {
        self.sketch_dim
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Parameter(format!("bandwidth must be positive, got {sigma}")));
    }
    Ok(())
}

/// Explicit feature vectors `φ(x_i)`, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBatch {
    vectors: Matrix,
}

impl FeatureBatch {
    pub fn new(vectors: Matrix) -> Result<Self> {
        if !vectors.all_finite() {
            return Err(Error::Data("feature batch contains non-finite values".into()));
        }
        Ok(Self { vectors })
    }

    pub fn n(&self) -> usize {
        self.vectors.rows()
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn into_matrix(self) -> Matrix {
        self.vectors
    }

    /// Linear kernel matrix `Φ Φᵀ`.
    pub fn gram(&self) -> Matrix {
        self.vectors.gram()
    }

    pub fn select(&self, indices: &[usize]) -> FeatureBatch {
        FeatureBatch {
            vectors: self.vectors.select_rows(indices),
        }
    }
}

/// Gaussian kernel matrix over the rows of `points`. The diagonal is exactly 1.
pub fn gaussian_kernel_matrix(points: &Matrix, sigma: f64) -> Result<Matrix> {
    check_sigma(sigma)?;
    let n = points.rows();
    let inv = 1.0 / (sigma * sigma);
    let mut k = Matrix::identity(n);
    for i in 0..n {
        let xi = points.row(i);
        for j in 0..i {
            let d2: f64 = xi
                .iter()
                .zip(points.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let v = (-d2 * inv).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// `φ_D(x)`: activations of the layer feeding the discriminator's output unit.
pub fn extract_discriminator_features(disc: &Mlp, points: &Matrix) -> Result<FeatureBatch> {
    if disc.layers().len() < 2 {
        return Err(Error::Parameter(
            "discriminator features need at least two layers".into(),
        ));
    }
    FeatureBatch::new(disc.hidden_features(points)?)
}

/// Reads a feature CSV (one sample per row, optional single header line).
pub fn load_external_features(path: &Path, has_header: bool) -> Result<FeatureBatch> {
    FeatureBatch::new(read_matrix_csv(path, has_header)?)
}

pub fn write_features(path: &Path, features: &FeatureBatch, header: Option<&str>) -> Result<()> {
    write_matrix_csv(path, header, &features.vectors)
}

/// Projects features onto their top `k` principal directions (after centering).
///
/// Provided as a simple reduction for externally supplied high-dimensional
/// features; it is linear and will not match a manifold-learning embedding.
pub fn pca_reduce(features: &FeatureBatch, k: usize) -> Result<FeatureBatch> {
    let (n, m) = (features.n(), features.dim());
    if k == 0 || k > m {
        return Err(Error::Parameter(format!("cannot reduce {m} features to {k}")));
    }
    if n == 0 {
        return Err(Error::Data("cannot reduce an empty feature batch".into()));
    }
    let mut centered = features.vectors.clone();
    let mut mean = vec![0.0; m];
    for r in centered.row_iter() {
        crate::linalg::axpy_slice(&mut mean, 1.0 / n as f64, r);
    }
    for i in 0..n {
        crate::linalg::axpy_slice(centered.row_mut(i), -1.0, &mean);
    }
    let cov = centered.matmul_tn(&centered)?.symmetrized();
    let eig = sym_eig(&cov)?;
    let basis = Matrix::from_fn(m, k, |i, j| eig.eigenvectors[(i, j)]);
    FeatureBatch::new(centered.matmul(&basis)?)
}
