use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{rls_auto, rls_dual, sketch_features, LeverageScores, RlsInput, SamplingDistribution, SketchMatrix};
use crate::error::{Error, Result};
use crate::featmap::{
    extract_discriminator_features, gaussian_kernel_matrix, load_external_features, pca_reduce,
    FeatureBatch, FeatureMapKind, FeatureMapSpec,
};
use crate::linalg::Matrix;
use crate::nn::Mlp;

/// Default pool size, as a multiple of the batch size.
pub const DEFAULT_MULTIPLIER: usize = 20;

/// Largest point count for which a dense `n × n` kernel is formed.
pub const MAX_DUAL_POINTS: usize = 8_000;

/// How pool points are mapped to features in the second stage.
#[derive(Debug, Clone, Copy)]
pub enum PoolFeatures<'a> {
    /// Last hidden layer of the given discriminator.
    Discriminator(&'a Mlp),
    /// Implicit Gaussian kernel on the raw points.
    Gaussian { sigma: f64 },
    /// Precomputed features, one row per data point.
    Fixed(&'a FeatureBatch),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStageConfig {
    pub batch_size: usize,
    pub multiplier: usize,
    pub gamma: f64,
    pub sketch_dim: Option<usize>,
}

impl TwoStageConfig {
    pub fn pool_size(&self, n: usize) -> usize {
        (self.multiplier * self.batch_size).min(n)
    }
}

/// Uniform pool without replacement, then `batch_size` RLS-weighted draws
/// with replacement from the pool. Returns indices into `data`.
pub fn two_stage_sample_with(
    data: &Matrix,
    features: PoolFeatures<'_>,
    cfg: &TwoStageConfig,
    rng: &mut impl Rng,
) -> Result<Vec<usize>> {
    if cfg.multiplier == 0 || cfg.batch_size == 0 {
        return Err(Error::Parameter("batch size and multiplier must be at least 1".into()));
    }
    let n = data.rows();
    let b = cfg.pool_size(n);
    if b < cfg.batch_size {
        return Err(Error::Shape(format!(
            "pool of {b} points is smaller than the batch size {}",
            cfg.batch_size
        )));
    }
    let (pool, dist) = pool_distribution(data, features, cfg, b, rng)?;
    Ok(dist.sample(cfg.batch_size, rng)?.into_iter().map(|i| pool[i]).collect())
}

fn pool_distribution(
    data: &Matrix,
    features: PoolFeatures<'_>,
    cfg: &TwoStageConfig,
    b: usize,
    rng: &mut impl Rng,
) -> Result<(Vec<usize>, SamplingDistribution)> {
    let pool = index::sample(rng, data.rows(), b).into_vec();
    let scores = pool_scores(data, &pool, features, cfg, rng)?;
    let dist = match SamplingDistribution::normalize(&scores) {
        Ok(d) => d,
        // every pool feature vector is zero: no point is more informative than another
        Err(_) => SamplingDistribution::uniform(b)?,
    };
    Ok((pool, dist))
}

fn pool_scores(
    data: &Matrix,
    pool: &[usize],
    features: PoolFeatures<'_>,
    cfg: &TwoStageConfig,
    rng: &mut impl Rng,
) -> Result<LeverageScores> {
    let explicit = match features {
        PoolFeatures::Gaussian { sigma } => {
            if cfg.sketch_dim.is_some() {
                return Err(Error::Parameter(
                    "an implicit Gaussian feature map cannot be sketched".into(),
                ));
            }
            let k = gaussian_kernel_matrix(&data.select_rows(pool), sigma)?;
            return rls_dual(&k, cfg.gamma);
        }
        PoolFeatures::Discriminator(disc) => {
            extract_discriminator_features(disc, &data.select_rows(pool))?
        }
        PoolFeatures::Fixed(f) => {
            if f.n() != data.rows() {
                return Err(Error::Shape(format!(
                    "{} feature rows for {} data points",
                    f.n(),
                    data.rows()
                )));
            }
            f.select(pool)
        }
    };
    let explicit = match cfg.sketch_dim {
        Some(k) => {
            let s = SketchMatrix::gaussian(explicit.dim(), k, rng)?;
            sketch_features(&explicit, &s)?
        }
        None => explicit,
    };
    rls_auto(RlsInput::Features(&explicit), cfg.gamma)
}

/// Seeded two-stage sampler on discriminator features.
pub fn two_stage_sample(
    data: &Matrix,
    disc: &Mlp,
    size: usize,
    multiplier: usize,
    gamma: f64,
    sketch_dim: Option<usize>,
    rng_seed: u64,
) -> Result<Vec<usize>> {
    let cfg = TwoStageConfig {
        batch_size: size,
        multiplier,
        gamma,
        sketch_dim,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    two_stage_sample_with(data, PoolFeatures::Discriminator(disc), &cfg, &mut rng)
}

/// Scores of every data point under a fixed feature map, for one-stage
/// sampling. External features are reduced by PCA when `sketch_dim` is set.
pub fn fixed_map_scores(data: &Matrix, spec: &FeatureMapSpec, gamma: f64) -> Result<LeverageScores> {
    match spec.kind() {
        FeatureMapKind::ImplicitGaussian { sigma } => {
            if data.rows() > MAX_DUAL_POINTS {
                return Err(Error::Parameter(format!(
                    "a Gaussian kernel on {} points exceeds the dense limit of {MAX_DUAL_POINTS}",
                    data.rows()
                )));
            }
            rls_dual(&gaussian_kernel_matrix(data, *sigma)?, gamma)
        }
        FeatureMapKind::ExternalFeatures { path, has_header } => {
            let f = load_external_features(path, *has_header)?;
            if f.n() != data.rows() {
                return Err(Error::Shape(format!(
                    "{} has {} rows for {} data points",
                    path.display(),
                    f.n(),
                    data.rows()
                )));
            }
            let f = match spec.sketch_dim() {
                Some(k) => pca_reduce(&f, k)?,
                None => f,
            };
            if f.n() <= f.dim() && f.n() > MAX_DUAL_POINTS {
                return Err(Error::Parameter("too many points for the dual form".into()));
            }
            rls_auto(RlsInput::Features(&f), gamma)
        }
        FeatureMapKind::DiscriminatorLayer => Err(Error::Parameter(
            "discriminator features change during training; use the two-stage sampler".into(),
        )),
    }
}
