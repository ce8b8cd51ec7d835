use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LeverageScores;
use crate::error::{Error, Result};

/// Probability vector over `0..n` with a cumulative table for O(log n) draws.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDistribution {
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl SamplingDistribution {
    /// Normalizes non-negative finite weights with a positive sum.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Data("distribution over an empty set".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::Data(format!("weight {w} is negative or non-finite")));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Data(format!("weights sum to {total}")));
        }
        let probs: Vec<f64> = weights.into_iter().map(|w| w / total).collect();
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self { probs, cumulative })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    /// `pᵢ = ℓᵢ / Σ ℓⱼ`.
    pub fn normalize(scores: &LeverageScores) -> Result<Self> {
        Self::new(scores.scores.clone())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn draw(&self, rng: &mut impl Rng) -> usize {
        let u = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.probs.len() - 1)
    }

    /// `size` independent draws with replacement.
    pub fn sample(&self, size: usize, rng: &mut impl Rng) -> Result<Vec<usize>> {
        if size == 0 {
            return Err(Error::Parameter("sample size must be at least 1".into()));
        }
        Ok((0..size).map(|_| self.draw(rng)).collect())
    }
}

/// Seeded convenience wrapper around [`SamplingDistribution::sample`].
pub fn sample_batch(dist: &SamplingDistribution, size: usize, seed: u64) -> Result<Vec<usize>> {
    dist.sample(size, &mut ChaCha8Rng::seed_from_u64(seed))
}
