//! Multiplicative-weights mixture of generators.
//!
//! Each round trains a vanilla GAN on batches drawn from the current weights,
//! estimates the new generator's density at every training point with a
//! Gaussian KDE, and doubles the weight of points it under-covers
//! (`p_g(xᵢ) < δ·p(xᵢ)`). Weights may start uniform or at normalized RLS.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gan::{generate, latent_batch, train_vanilla, SamplerKind, TrainConfig};
use crate::io::{read_lines, read_matrix_csv, write_atomic, LineReader};
use crate::linalg::Matrix;
use crate::nn::{load_checkpoint, save_checkpoint, Mlp};
use crate::rls::{LeverageScores, SamplingDistribution};

pub const DEFAULT_DELTA: f64 = 0.25;
/// KDE bandwidth; matches the mode standard deviation of the benchmarks.
pub const DEFAULT_BANDWIDTH: f64 = 0.05;
/// Generator samples used for each density estimate.
pub const DENSITY_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub enum MwuInit {
    Uniform,
    Rls(LeverageScores),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MwuState {
    weights: Vec<f64>,
    generators: Vec<Mlp>,
    delta: f64,
}

impl MwuState {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn generators(&self) -> &[Mlp] {
        &self.generators
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn rounds(&self) -> usize {
        self.generators.len()
    }

    /// Current sampling distribution `wᵢ / Σ w`.
    pub fn distribution(&self) -> SamplingDistribution {
        SamplingDistribution::new(self.weights.clone()).expect("weights stay positive")
    }
}

pub fn mwu_init(n: usize, init: &MwuInit, delta: f64) -> Result<MwuState> {
    if n == 0 {
        return Err(Error::Parameter("MwuGAN needs at least one training point".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!("delta must be in (0, 1), got {delta}")));
    }
    let weights = match init {
        MwuInit::Uniform => vec![1.0 / n as f64; n],
        MwuInit::Rls(scores) => {
            if scores.n() != n {
                return Err(Error::Shape(format!("{} scores for {n} points", scores.n())));
            }
            if scores.scores.iter().any(|&s| !(s > 0.0)) {
                return Err(Error::Data("initial weights must be strictly positive".into()));
            }
            SamplingDistribution::normalize(scores)?.probs().to_vec()
        }
    };
    Ok(MwuState {
        weights,
        generators: Vec::new(),
        delta,
    })
}

/// Gaussian KDE `p̂(x) = (1/m) Σⱼ (2πh²)^{-d/2} exp(−‖x − sⱼ‖² / (2h²))`.
pub fn estimate_density(samples: &Matrix, queries: &Matrix, bandwidth: f64) -> Result<Vec<f64>> {
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::Parameter(format!("bandwidth must be positive, got {bandwidth}")));
    }
    if samples.rows() == 0 {
        return Err(Error::Data("density estimate needs at least one sample".into()));
    }
    if samples.cols() != queries.cols() {
        return Err(Error::Shape(format!(
            "samples are {}-dimensional, queries {}-dimensional",
            samples.cols(),
            queries.cols()
        )));
    }
    let d = samples.cols() as i32;
    let two_h2 = 2.0 * bandwidth * bandwidth;
    let norm = (std::f64::consts::PI * two_h2).powi(d).sqrt().recip() / samples.rows() as f64;
    Ok(queries
        .row_iter()
        .map(|q| {
            norm * samples
                .row_iter()
                .map(|s| {
                    let d2: f64 = q.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum();
                    (-d2 / two_h2).exp()
                })
                .sum::<f64>()
        })
        .collect())
}

/// Applies the weight update for a trained generator and appends it to the
/// mixture. Returns how many weights were doubled.
pub fn absorb_generator(
    state: &mut MwuState,
    gen: Mlp,
    data: &Matrix,
    bandwidth: f64,
    n_samples: usize,
    seed: u64,
) -> Result<usize> {
    if data.rows() != state.weights.len() {
        return Err(Error::Shape(format!(
            "{} data points for {} weights",
            data.rows(),
            state.weights.len()
        )));
    }
    if n_samples == 0 {
        return Err(Error::Parameter("density estimate needs at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = generate(&gen, n_samples, &mut rng)?;
    let density = estimate_density(&samples, data, bandwidth)?;
    let total: f64 = state.weights.iter().sum();
    let threshold: Vec<f64> = state.weights.iter().map(|w| state.delta * w / total).collect();
    let mut doubled = 0;
    for ((w, pg), t) in state.weights.iter_mut().zip(&density).zip(&threshold) {
        if *pg < *t {
            *w *= 2.0;
            doubled += 1;
        }
    }
    state.generators.push(gen);
    Ok(doubled)
}

/// Trains one vanilla GAN on the current weights and absorbs it.
pub fn mwu_round(state: &mut MwuState, data: &Matrix, cfg: &TrainConfig, bandwidth: f64) -> Result<usize> {
    let round = state.rounds() as u64;
    let cfg = TrainConfig {
        sampler: SamplerKind::Weighted(state.distribution()),
        seed: cfg.seed.wrapping_add(round.wrapping_mul(1_000_003)),
        ..cfg.clone()
    };
    let trained = train_vanilla(data, &cfg, None)?;
    absorb_generator(
        state,
        trained.generator,
        data,
        bandwidth,
        DENSITY_SAMPLES,
        cfg.seed ^ 0x5eed,
    )
}

/// Each sample comes from a generator picked uniformly at random.
pub fn mixture_sample(state: &MwuState, count: usize, rng_seed: u64) -> Result<Matrix> {
    let gens = state.generators();
    if gens.is_empty() {
        return Err(Error::State("mixture has no trained generators".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let choice: Vec<usize> = (0..count).map(|_| rng.random_range(0..gens.len())).collect();
    let dim = gens[0].output_dim();
    let mut out = Matrix::zeros(count, dim);
    for (k, g) in gens.iter().enumerate() {
        let rows: Vec<usize> = (0..count).filter(|&i| choice[i] == k).collect();
        if rows.is_empty() {
            continue;
        }
        let samples = g.predict(&latent_batch(rows.len(), g.input_dim(), &mut rng))?;
        for (src, &dst) in rows.iter().enumerate() {
            out.row_mut(dst).copy_from_slice(samples.row(src));
        }
    }
    Ok(out)
}

/// Writes `mixture.txt`, `weights.csv` and one checkpoint per generator.
pub fn save_mixture(dir: &Path, state: &MwuState) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (k, g) in state.generators.iter().enumerate() {
        save_checkpoint(&dir.join(format!("generator_{k}.txt")), g)?;
    }
    write_atomic(&dir.join("weights.csv"), |w| {
        writeln!(w, "weight")?;
        for v in &state.weights {
            writeln!(w, "{v}")?;
        }
        Ok(())
    })?;
    write_atomic(&dir.join("mixture.txt"), |w| {
        writeln!(w, "delta {}", state.delta)?;
        writeln!(w, "generators {}", state.generators.len())
    })
}

pub fn load_mixture(dir: &Path) -> Result<MwuState> {
    let (delta, count) = read_lines(&dir.join("mixture.txt"), |r, path| {
        let mut lines = LineReader::new(r, path);
        let mut field = |name: &str| -> Result<String> {
            let line = lines.expect_line()?;
            match line.split_once(' ') {
                Some((k, v)) if k == name => Ok(v.trim().to_string()),
                _ => Err(lines.error(format!("expected '{name} <value>'"))),
            }
        };
        let delta = field("delta")?;
        let count = field("generators")?;
        let bad = |m: &str| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: m.into(),
        };
        Ok((
            delta.parse::<f64>().map_err(|_| bad("invalid delta"))?,
            count.parse::<usize>().map_err(|_| bad("invalid generator count"))?,
        ))
    })?;
    let weights = read_matrix_csv(&dir.join("weights.csv"), true)?.column(0);
    if weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::Data("mixture weights must be positive".into()));
    }
    let generators = (0..count)
        .map(|k| load_checkpoint(&dir.join(format!("generator_{k}.txt"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(MwuState {
        weights,
        generators,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featmap::gaussian_kernel_matrix;
    use crate::nn::{Activation, Layer};
    use crate::rls::{rls_dual, RlsMethod};
    use crate::synthdata::{make_ring, RING_MINORITY};
    use rand_distr::{Distribution, StandardNormal};

    fn constant_generator(value: [f64; 2]) -> Mlp {
        Mlp::from_layers(vec![Layer {
            weights: Matrix::zeros(3, 2),
            bias: value.to_vec(),
            activation: Activation::Identity,
        }])
        .unwrap()
    }

    #[test]
    fn uniform_init() {
        let s = mwu_init(4, &MwuInit::Uniform, DEFAULT_DELTA).unwrap();
        assert_eq!(s.weights(), &[0.25; 4]);
        assert!(mwu_init(0, &MwuInit::Uniform, DEFAULT_DELTA).is_err());
        assert!(mwu_init(3, &MwuInit::Uniform, 1.5).is_err());
    }

    #[test]
    fn equal_scores_match_uniform() {
        let scores = LeverageScores {
            gamma: 1e-3,
            scores: vec![0.3; 5],
            method: RlsMethod::Dual,
        };
        let a = mwu_init(5, &MwuInit::Rls(scores), DEFAULT_DELTA).unwrap();
        for w in a.weights() {
            assert!((w - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn rls_init_favours_minority_modes() {
        let d = make_ring(1500, 4).unwrap();
        let k = gaussian_kernel_matrix(&d.points, 0.15).unwrap();
        let s = mwu_init(d.len(), &MwuInit::Rls(rls_dual(&k, 1e-3).unwrap()), DEFAULT_DELTA).unwrap();
        let mean = |minority: bool| {
            let v: Vec<f64> = s
                .weights()
                .iter()
                .zip(&d.labels)
                .filter(|(_, &l)| (l < RING_MINORITY) == minority)
                .map(|(w, _)| *w)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean(true) > mean(false));
    }

    #[test]
    fn kde_closed_form_and_tail() {
        let origin = Matrix::zeros(1, 2);
        let p = estimate_density(&origin, &origin, 1.0).unwrap();
        assert!((p[0] - 0.159155).abs() < 1e-6);
        let far = Matrix::from_rows(&[[50.0, 50.0]]).unwrap();
        assert!(estimate_density(&origin, &far, 1.0).unwrap()[0] < 1e-300);
        assert!(estimate_density(&origin, &origin, 0.0).is_err());
    }

    #[test]
    fn kde_recovers_standard_normal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples = Matrix::from_fn(1000, 2, |_, _| StandardNormal.sample(&mut rng));
        let grid = Matrix::from_fn(25, 2, |i, j| if j == 0 { (i / 5) as f64 - 2.0 } else { (i % 5) as f64 - 2.0 });
        let est = estimate_density(&samples, &grid, 0.2).unwrap();
        let mae: f64 = grid
            .row_iter()
            .zip(&est)
            .map(|(q, e)| {
                let truth = (-(q[0] * q[0] + q[1] * q[1]) / 2.0).exp() / (2.0 * std::f64::consts::PI);
                (truth - e).abs()
            })
            .sum::<f64>()
            / 25.0;
        assert!(mae <= 0.02, "{mae}");
    }

    #[test]
    fn degenerate_generator_doubles_everything() {
        let data = Matrix::from_fn(6, 2, |i, j| (i + j) as f64 * 0.1);
        let mut s = mwu_init(6, &MwuInit::Uniform, DEFAULT_DELTA).unwrap();
        let before = s.distribution();
        let doubled = absorb_generator(&mut s, constant_generator([100.0, 100.0]), &data, 0.05, 100, 1).unwrap();
        assert_eq!(doubled, 6);
        assert!(s.weights().iter().all(|&w| (w - 2.0 / 6.0).abs() < 1e-15));
        for (a, b) in before.probs().iter().zip(s.distribution().probs()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(s.rounds(), 1);
    }

    #[test]
    fn covering_generator_keeps_weights() {
        let data = Matrix::from_rows(&[[0.0, 0.0], [0.01, 0.0]]).unwrap();
        let mut s = mwu_init(2, &MwuInit::Uniform, DEFAULT_DELTA).unwrap();
        let doubled = absorb_generator(&mut s, constant_generator([0.0, 0.0]), &data, 0.05, 50, 1).unwrap();
        assert_eq!(doubled, 0);
        assert_eq!(s.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn mixture_sampling() {
        let mut s = mwu_init(2, &MwuInit::Uniform, DEFAULT_DELTA).unwrap();
        assert!(mixture_sample(&s, 5, 0).is_err());
        let data = Matrix::zeros(2, 2);
        absorb_generator(&mut s, constant_generator([1.0, 1.0]), &data, 0.05, 10, 0).unwrap();
        let single = mixture_sample(&s, 10, 0).unwrap();
        assert!(single.as_slice().iter().all(|&v| v == 1.0));
        absorb_generator(&mut s, constant_generator([-1.0, -1.0]), &data, 0.05, 10, 0).unwrap();
        let mix = mixture_sample(&s, 10_000, 3).unwrap();
        let ones = mix.row_iter().filter(|r| r[0] == 1.0).count();
        assert!((ones as f64 / 1e4 - 0.5).abs() < 0.02);
        assert_eq!(mix, mixture_sample(&s, 10_000, 3).unwrap());
    }

    #[test]
    fn mixture_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let data = Matrix::zeros(3, 2);
        let mut s = mwu_init(3, &MwuInit::Uniform, DEFAULT_DELTA).unwrap();
        absorb_generator(&mut s, constant_generator([5.0, 5.0]), &data, 0.05, 10, 0).unwrap();
        save_mixture(dir.path(), &s).unwrap();
        assert_eq!(load_mixture(dir.path()).unwrap(), s);
    }

    #[test]
    fn short_round_is_reproducible() {
        let d = make_ring(400, 3).unwrap();
        let cfg = TrainConfig {
            iterations: 20,
            batch_size: 16,
            latent_dim: 4,
            ..TrainConfig::default()
        };
        let run = || {
            let mut s = mwu_init(d.len(), &MwuInit::Uniform, DEFAULT_DELTA).unwrap();
            mwu_round(&mut s, &d.points, &cfg, DEFAULT_BANDWIDTH).unwrap();
            s
        };
        let a = run();
        assert_eq!(a, run());
        assert!(a.weights().iter().all(|&w| w >= 1.0 / 400.0));
    }
}
