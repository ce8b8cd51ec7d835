//! Vanilla GAN and BuresGAN training with pluggable real-batch samplers.
//!
//! BuresGAN adds `λ B²(C_real, C_fake)` to the generator loss, where the
//! covariances are taken over centered, unit-normalized discriminator
//! features of the last hidden layer.

mod bures;
mod train;

pub use bures::{
    batch_covariance, bures_sq, bures_sq_grad, bures_value_and_grad, normalize_backward,
    normalize_features, NormalizedBatch, DEFAULT_BURES_EPS,
};
pub use train::{
    feature_bures, generate, generator_step, latent_batch, train_bures, train_vanilla,
    write_trace_csv, GeneratorStep, MetricsRecord, SamplerKind, TrainConfig, TrainedGan,
    TRACE_HEADER,
};
