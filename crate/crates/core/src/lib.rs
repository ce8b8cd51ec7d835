//! Ridge-leverage-score (RLS) biased mini-batch sampling for GAN training.
//!
//! The crate bundles everything needed to reproduce unbalanced mode-coverage
//! experiments on small synthetic mixtures:
//!
//! * [`linalg`]: dense matrices, Jacobi eigensolver, PSD square roots, SPD solves
//! * [`featmap`]: Gaussian kernels, discriminator features, external feature files
//! * [`rls`]: leverage scores (primal and dual), sketches, one- and two-stage samplers
//! * [`nn`]: small MLPs with hand-written backprop, GAN losses and Adam
//! * [`gan`]: vanilla GAN and BuresGAN training loops
//! * [`mwu`]: the multiplicative-weights mixture of generators
//! * [`synthdata`] and [`eval`]: the Ring/Grid benchmarks and their metrics
//! * [`experiment`]: configs, multi-seed runs and result aggregation

pub mod error;
pub mod eval;
pub mod experiment;
pub mod featmap;
pub mod gan;
pub mod io;
pub mod linalg;
pub mod mwu;
pub mod nn;
pub mod rls;
pub mod synthdata;

pub use error::{Error, LinalgError, Result};
