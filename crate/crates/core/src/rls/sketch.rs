use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::featmap::FeatureBatch;
use crate::linalg::Matrix;

/// Random projection `S = A / √k` from `m` to `k` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchMatrix {
    entries: Matrix,
}

impl SketchMatrix {
    /// i.i.d. standard-normal entries divided by `√k`.
    pub fn gaussian(m: usize, k: usize, rng: &mut impl Rng) -> Result<Self> {
        if m == 0 || k == 0 {
            return Err(Error::Parameter(format!("sketch dimensions {m}→{k} must be positive")));
        }
        let scale = 1.0 / (k as f64).sqrt();
        let entries = Matrix::from_fn(m, k, |_, _| {
            let z: f64 = StandardNormal.sample(rng);
            z * scale
        });
        Ok(Self { entries })
    }

    pub fn from_matrix(entries: Matrix) -> Result<Self> {
        if entries.rows() == 0 || entries.cols() == 0 {
            return Err(Error::Shape("empty sketch matrix".into()));
        }
        Ok(Self { entries })
    }

    pub fn source_dim(&self) -> usize {
        self.entries.rows()
    }

    pub fn target_dim(&self) -> usize {
        self.entries.cols()
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }
}

/// Row `ℓ` of the output is `Sᵀ φ_ℓ`.
pub fn sketch_features(features: &FeatureBatch, sketch: &SketchMatrix) -> Result<FeatureBatch> {
    if features.dim() != sketch.source_dim() {
        return Err(Error::Shape(format!(
            "features have dimension {}, sketch expects {}",
            features.dim(),
            sketch.source_dim()
        )));
    }
    FeatureBatch::new(features.vectors().matmul(&sketch.entries)?)
}

/// Smallest `k` with `k ≥ 4 ln b / (ε²/2 − ε³/3)`.
pub fn jl_min_dim(eps: f64, b: usize) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Parameter(format!("distortion must be in (0, 1), got {eps}")));
    }
    if b < 2 {
        return Err(Error::Parameter("need at least two points".into()));
    }
    let denom = eps * eps / 2.0 - eps.powi(3) / 3.0;
    Ok((4.0 * (b as f64).ln() / denom).ceil() as usize)
}

/// Largest `|‖Sᵀ(xᵢ − xⱼ)‖² / ‖xᵢ − xⱼ‖² − 1|` over distinct pairs of rows.
pub fn max_pairwise_distortion(original: &Matrix, projected: &Matrix) -> f64 {
    let sq = |m: &Matrix, i: usize, j: usize| -> f64 {
        m.row(i)
            .iter()
            .zip(m.row(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    };
    let mut worst: f64 = 0.0;
    for i in 0..original.rows() {
        for j in 0..i {
            let d = sq(original, i, j);
            if d > 0.0 {
                worst = worst.max((sq(projected, i, j) / d - 1.0).abs());
            }
        }
    }
    worst
}
