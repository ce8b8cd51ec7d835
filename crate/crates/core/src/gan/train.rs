use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::bures::{bures_value_and_grad, normalize_backward, normalize_features, DEFAULT_BURES_EPS};
use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::io::write_atomic;
use crate::linalg::Matrix;
use crate::nn::{
    disc_loss_grads, gan_losses, gen_loss_grad, AdamConfig, AdamState, Gradients, Mlp, SYNTHETIC_LATENT,
};
use crate::rls::{two_stage_sample_with, PoolFeatures, SamplingDistribution, TwoStageConfig, DEFAULT_MULTIPLIER};
use crate::synthdata::MixtureSpec;

/// How real mini-batches are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum SamplerKind {
    Uniform,
    /// Fixed distribution over the data, e.g. normalized RLS under a fixed
    /// feature map or MwuGAN weights.
    Weighted(SamplingDistribution),
    /// Uniform pool, then RLS of the current discriminator's features.
    TwoStage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub sampler: SamplerKind,
    pub gamma: f64,
    pub sketch_dim: Option<usize>,
    pub multiplier: usize,
    /// λ in front of the Bures term; 0 gives the vanilla objective.
    pub bures_weight: f64,
    pub bures_eps: f64,
    pub seed: u64,
    pub adam: AdamConfig,
    pub latent_dim: usize,
    /// Record a metrics row every this many iterations (0 disables the trace).
    pub log_every: usize,
    /// Generator samples drawn for the coverage columns of the trace.
    pub eval_samples: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 30_000,
            batch_size: 64,
            sampler: SamplerKind::Uniform,
            gamma: 1e-3,
            sketch_dim: None,
            multiplier: DEFAULT_MULTIPLIER,
            bures_weight: 1.0,
            bures_eps: DEFAULT_BURES_EPS,
            seed: 0,
            adam: AdamConfig::default(),
            latent_dim: SYNTHETIC_LATENT,
            log_every: 0,
            eval_samples: 2_000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        let fail = |m: String| Err(Error::Parameter(m));
        if self.batch_size < 2 {
            return fail(format!("batch size must be at least 2, got {}", self.batch_size));
        }
        if !(self.bures_weight >= 0.0) || !self.bures_weight.is_finite() {
            return fail(format!("Bures weight must be non-negative, got {}", self.bures_weight));
        }
        if !(self.bures_eps > 0.0) {
            return fail(format!("Bures epsilon must be positive, got {}", self.bures_eps));
        }
        if self.latent_dim == 0 {
            return fail("latent dimension must be at least 1".into());
        }
        if n == 0 {
            return Err(Error::Data("training set is empty".into()));
        }
        match &self.sampler {
            SamplerKind::Weighted(d) if d.len() != n => Err(Error::Shape(format!(
                "sampling distribution covers {} points, data has {n}",
                d.len()
            ))),
            SamplerKind::TwoStage => {
                if !(self.gamma > 0.0) {
                    return fail(format!("gamma must be positive, got {}", self.gamma));
                }
                if self.multiplier == 0 {
                    return fail("multiplier must be at least 1".into());
                }
                if self.multiplier * self.batch_size > n && n < self.batch_size {
                    return Err(Error::Shape(format!(
                        "{n} points cannot fill a batch of {}",
                        self.batch_size
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// One row of the metrics trace; losses are averaged over the interval.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub iter: usize,
    pub disc_loss: f64,
    pub gen_loss: f64,
    pub bures_sq: f64,
    pub modes_covered: Option<usize>,
    pub hq_fraction: Option<f64>,
}

pub const TRACE_HEADER: &str = "iter,disc_loss,gen_loss,bures_sq,modes_covered,hq_fraction";

pub fn write_trace_csv(path: &Path, trace: &[MetricsRecord]) -> Result<()> {
    write_atomic(path, |w| {
        writeln!(w, "{TRACE_HEADER}")?;
        for r in trace {
            let modes = r.modes_covered.map(|m| m.to_string()).unwrap_or_default();
            let hq = r.hq_fraction.map(|h| h.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.iter, r.disc_loss, r.gen_loss, r.bures_sq, modes, hq
            )?;
        }
        Ok(())
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedGan {
    pub generator: Mlp,
    pub discriminator: Mlp,
    pub trace: Vec<MetricsRecord>,
}

impl TrainedGan {
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Result<Matrix> {
        generate(&self.generator, n, rng)
    }
}

/// `n × latent` standard-normal draws.
pub fn latent_batch(n: usize, latent_dim: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(n, latent_dim, |_, _| StandardNormal.sample(rng))
}

/// Pushes `n` fresh latent draws through the generator.
pub fn generate(gen: &Mlp, n: usize, rng: &mut impl Rng) -> Result<Matrix> {
    gen.predict(&latent_batch(n, gen.input_dim(), rng))
}

/// Generator objective for one batch and its parameter gradient.
#[derive(Debug, Clone)]
pub struct GeneratorStep {
    /// Non-saturating part `−mean log σ(D(G(z)))`.
    pub gan_loss: f64,
    /// `B²` between real and fake feature covariances (0 when λ = 0).
    pub bures_sq: f64,
    pub grads: Gradients,
}

impl GeneratorStep {
    pub fn total(&self, bures_weight: f64) -> f64 {
        self.gan_loss + bures_weight * self.bures_sq
    }
}

/// Loss `−mean log σ(D(G(z))) + λ B²(C_real, C_fake)` and its gradient with
/// respect to the generator parameters. The Bures term reaches the generator
/// through the discriminator's last hidden layer.
pub fn generator_step(
    gen: &Mlp,
    disc: &Mlp,
    z: &Matrix,
    real: &Matrix,
    bures_weight: f64,
    bures_eps: f64,
) -> Result<GeneratorStep> {
    let mut g_fwd = gen.forward(z)?;
    let mut d_fwd = disc.forward(&g_fwd.output)?;
    let logits = d_fwd.output.column(0);
    let gan_loss = gan_losses(&logits, &logits)?.gen;
    let grad_logits = Matrix::from_vec(logits.len(), 1, gen_loss_grad(&logits))?;
    let (bures_sq, grad_hidden) = if bures_weight > 0.0 {
        if real.rows() != z.rows() {
            return Err(Error::Shape("real and fake batches differ in size".into()));
        }
        let real_h = disc.hidden_features(real)?;
        let x = normalize_features(&real_h)?;
        let y = normalize_features(&d_fwd.hidden)?;
        let (value, grad_y) = bures_value_and_grad(&x.rows, &y.rows, bures_eps)?;
        let mut gh = normalize_backward(&y, &grad_y)?;
        gh.scale_in_place(bures_weight);
        (value, Some(gh))
    } else {
        (0.0, None)
    };
    let d_grads = disc.backward(&mut d_fwd.tape, &grad_logits, grad_hidden.as_ref())?;
    let grads = gen.backward(&mut g_fwd.tape, &d_grads.input, None)?;
    Ok(GeneratorStep {
        gan_loss,
        bures_sq,
        grads,
    })
}

/// Bures distance between the normalized discriminator features of two batches.
pub fn feature_bures(disc: &Mlp, real: &Matrix, fake: &Matrix, eps: f64) -> Result<f64> {
    let x = normalize_features(&disc.hidden_features(real)?)?;
    let y = normalize_features(&disc.hidden_features(fake)?)?;
    Ok(bures_value_and_grad(&x.rows, &y.rows, eps)?.0)
}

fn stack(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let mut data = Vec::with_capacity(a.as_slice().len() + b.as_slice().len());
    data.extend_from_slice(a.as_slice());
    data.extend_from_slice(b.as_slice());
    Ok(Matrix::from_vec(a.rows() + b.rows(), a.cols(), data)?)
}

/// Plain GAN: one discriminator step and one generator step per iteration.
pub fn train_vanilla(data: &Matrix, cfg: &TrainConfig, monitor: Option<&MixtureSpec>) -> Result<TrainedGan> {
    train(data, cfg, 0.0, monitor)
}

/// BuresGAN: the generator loss gains `λ B²` on discriminator features.
pub fn train_bures(data: &Matrix, cfg: &TrainConfig, monitor: Option<&MixtureSpec>) -> Result<TrainedGan> {
    train(data, cfg, cfg.bures_weight, monitor)
}

fn train(data: &Matrix, cfg: &TrainConfig, bures_weight: f64, monitor: Option<&MixtureSpec>) -> Result<TrainedGan> {
    cfg.validate(data.rows())?;
    let n = data.rows();
    let b = cfg.batch_size;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut eval_rng = rng.clone();
    eval_rng.set_stream(1);
    let mut gen = Mlp::synthetic_generator(cfg.latent_dim, &mut rng);
    if gen.output_dim() != data.cols() {
        gen = Mlp::new(
            &[cfg.latent_dim, crate::nn::SYNTHETIC_HIDDEN, crate::nn::SYNTHETIC_HIDDEN, data.cols()],
            &[
                crate::nn::Activation::Tanh,
                crate::nn::Activation::Tanh,
                crate::nn::Activation::Identity,
            ],
            &mut rng,
        )?;
    }
    let mut disc = Mlp::synthetic_discriminator(data.cols(), &mut rng);
    let mut adam_g = AdamState::new(&gen, cfg.adam);
    let mut adam_d = AdamState::new(&disc, cfg.adam);
    let uniform = SamplingDistribution::uniform(n)?;
    let two_stage = TwoStageConfig {
        batch_size: b,
        multiplier: cfg.multiplier,
        gamma: cfg.gamma,
        sketch_dim: cfg.sketch_dim,
    };

    let mut trace = Vec::new();
    let (mut sum_d, mut sum_g, mut count) = (0.0, 0.0, 0usize);
    for iter in 1..=cfg.iterations {
        let idx = match &cfg.sampler {
            SamplerKind::Uniform => uniform.sample(b, &mut rng)?,
            SamplerKind::Weighted(d) => d.sample(b, &mut rng)?,
            SamplerKind::TwoStage => {
                two_stage_sample_with(data, PoolFeatures::Discriminator(&disc), &two_stage, &mut rng)?
            }
        };
        let real = data.select_rows(&idx);
        let z = latent_batch(b, cfg.latent_dim, &mut rng);
        let fake = gen.predict(&z)?;

        let mut d_fwd = disc.forward(&stack(&real, &fake)?)?;
        let logits = d_fwd.output.column(0);
        let (d_real, d_fake) = logits.split_at(b);
        let losses = gan_losses(d_real, d_fake).map_err(|_| Error::Divergence {
            iteration: iter,
            what: "non-finite discriminator output".into(),
        })?;
        let (gr, gf) = disc_loss_grads(d_real, d_fake);
        let grad_out = Matrix::from_vec(2 * b, 1, [gr, gf].concat())?;
        let d_grads = disc.backward(&mut d_fwd.tape, &grad_out, None)?;
        adam_d.update(&mut disc, &d_grads).map_err(|e| at_iteration(e, iter))?;

        let step = generator_step(&gen, &disc, &z, &real, bures_weight, cfg.bures_eps)
            .map_err(|e| at_iteration(e, iter))?;
        let total = step.total(bures_weight);
        if !total.is_finite() || !losses.disc.is_finite() {
            return Err(Error::Divergence {
                iteration: iter,
                what: format!("losses disc={} gen={total}", losses.disc),
            });
        }
        adam_g.update(&mut gen, &step.grads).map_err(|e| at_iteration(e, iter))?;

        sum_d += losses.disc;
        sum_g += total;
        count += 1;
        if cfg.log_every > 0 && (iter % cfg.log_every == 0 || iter == cfg.iterations) {
            let bures_sq = if bures_weight > 0.0 {
                step.bures_sq
            } else {
                feature_bures(&disc, &real, &fake, cfg.bures_eps)?
            };
            let (modes_covered, hq_fraction) = match monitor {
                Some(spec) if cfg.eval_samples > 0 => {
                    let r = evaluate(&generate(&gen, cfg.eval_samples, &mut eval_rng)?, spec)?;
                    (Some(r.modes_covered), Some(r.hq_fraction))
                }
                _ => (None, None),
            };
            trace.push(MetricsRecord {
                iter,
                disc_loss: sum_d / count as f64,
                gen_loss: sum_g / count as f64,
                bures_sq,
                modes_covered,
                hq_fraction,
            });
            (sum_d, sum_g, count) = (0.0, 0.0, 0);
        }
    }
    Ok(TrainedGan {
        generator: gen,
        discriminator: disc,
        trace,
    })
}

fn at_iteration(e: Error, iteration: usize) -> Error {
    match e {
        Error::Divergence { what, .. } => Error::Divergence { iteration, what },
        Error::Linalg(l) => Error::Divergence {
            iteration,
            what: l.to_string(),
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use crate::synthdata::make_ring;

    fn small_config(iterations: usize) -> TrainConfig {
        TrainConfig {
            iterations,
            batch_size: 16,
            latent_dim: 4,
            log_every: 5,
            eval_samples: 200,
            seed: 3,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_iterations_leave_initial_networks() {
        let d = make_ring(200, 1).unwrap();
        let cfg = small_config(0);
        let out = train_vanilla(&d.points, &cfg, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let gen = Mlp::synthetic_generator(cfg.latent_dim, &mut rng);
        let disc = Mlp::synthetic_discriminator(2, &mut rng);
        assert_eq!(out.generator, gen);
        assert_eq!(out.discriminator, disc);
        assert!(out.trace.is_empty());
    }

    #[test]
    fn zero_weight_reduces_to_vanilla() {
        let d = make_ring(300, 2).unwrap();
        let mut cfg = small_config(12);
        cfg.bures_weight = 0.0;
        let a = train_vanilla(&d.points, &cfg, Some(&d.spec)).unwrap();
        let b = train_bures(&d.points, &cfg, Some(&d.spec)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trace.len(), 3);
    }

    #[test]
    fn runs_are_reproducible() {
        let d = make_ring(300, 2).unwrap();
        let mut cfg = small_config(10);
        cfg.sampler = SamplerKind::TwoStage;
        cfg.multiplier = 4;
        cfg.sketch_dim = Some(8);
        let a = train_bures(&d.points, &cfg, Some(&d.spec)).unwrap();
        let b = train_bures(&d.points, &cfg, Some(&d.spec)).unwrap();
        assert_eq!(a, b);
        assert!(a.trace.iter().all(|r| r.bures_sq >= 0.0 && r.gen_loss.is_finite()));
        cfg.seed += 1;
        let c = train_bures(&d.points, &cfg, Some(&d.spec)).unwrap();
        assert_ne!(a.generator, c.generator);
    }

    #[test]
    fn config_validation() {
        let data = Matrix::zeros(10, 2);
        let mut cfg = small_config(1);
        cfg.batch_size = 1;
        assert!(train_vanilla(&data, &cfg, None).is_err());
        let mut cfg = small_config(1);
        cfg.bures_weight = -1.0;
        assert!(train_bures(&data, &cfg, None).is_err());
        let mut cfg = small_config(1);
        cfg.sampler = SamplerKind::Weighted(SamplingDistribution::uniform(3).unwrap());
        assert!(train_vanilla(&data, &cfg, None).is_err());
        assert!(train_vanilla(&Matrix::zeros(0, 2), &small_config(1), None).is_err());
    }

    #[test]
    fn rls_sampler_on_symmetric_data_is_uniform() {
        // every point identical: leverage scores coincide, so the two-stage
        // sampler reduces to uniform selection
        let n = 20;
        let data = Matrix::from_fn(n, 2, |_, j| j as f64 * 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let disc = Mlp::synthetic_discriminator(2, &mut rng);
        let cfg = TwoStageConfig {
            batch_size: 5,
            multiplier: 4,
            gamma: 1e-3,
            sketch_dim: None,
        };
        let mut counts = vec![0usize; n];
        let draws = 4000;
        for _ in 0..draws {
            for i in two_stage_sample_with(&data, PoolFeatures::Discriminator(&disc), &cfg, &mut rng).unwrap() {
                counts[i] += 1;
            }
        }
        let expected = (draws * 5) as f64 / n as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 99.9% quantile of chi-squared with 19 degrees of freedom is about 43.8
        assert!(chi2 < 43.8, "{chi2}");
    }

    fn fd_check(gen: &mut Mlp, disc: &Mlp, z: &Matrix, real: &Matrix, lambda: f64) -> f64 {
        let analytic = generator_step(gen, disc, z, real, lambda, DEFAULT_BURES_EPS)
            .unwrap()
            .grads
            .flat();
        let params = gen.params();
        let h = 1e-6;
        let mut fd = Vec::with_capacity(params.len());
        for k in 0..params.len() {
            let mut p = params.clone();
            p[k] += h;
            gen.set_params(&p).unwrap();
            let up = generator_step(gen, disc, z, real, lambda, DEFAULT_BURES_EPS).unwrap().total(lambda);
            p[k] -= 2.0 * h;
            gen.set_params(&p).unwrap();
            let down = generator_step(gen, disc, z, real, lambda, DEFAULT_BURES_EPS).unwrap().total(lambda);
            fd.push((up - down) / (2.0 * h));
        }
        gen.set_params(&params).unwrap();
        let diff: f64 = analytic.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
        diff / scale
    }

    #[test]
    fn generator_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let tanh = Activation::Tanh;
        let mut gen = Mlp::new(&[3, 5, 2], &[tanh, Activation::Identity], &mut rng).unwrap();
        let disc = Mlp::new(&[2, 6, 4, 1], &[tanh, tanh, Activation::Identity], &mut rng).unwrap();
        let z = latent_batch(4, 3, &mut rng);
        let real = Matrix::from_fn(4, 2, |_, _| rng.random_range(-1.0..1.0));
        for lambda in [0.0, 1.0, 5.0] {
            let err = fd_check(&mut gen, &disc, &z, &real, lambda);
            assert!(err <= 1e-3, "lambda {lambda}: {err}");
        }
    }
}
