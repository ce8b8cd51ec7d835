//! Ridge leverage scores and the mini-batch samplers built on them.
//!
//! Scores are computed exactly, in primal form when points outnumber
//! feature dimensions and in dual (kernel) form otherwise.

mod sampling;
mod scores;
mod sketch;
mod twostage;

pub use sampling::{sample_batch, SamplingDistribution};
pub use scores::{choose_method, rls_auto, rls_dual, rls_primal, LeverageScores, RlsInput, RlsMethod};
pub use sketch::{jl_min_dim, max_pairwise_distortion, sketch_features, SketchMatrix};
pub use twostage::{
    fixed_map_scores, two_stage_sample, two_stage_sample_with, PoolFeatures, TwoStageConfig,
    DEFAULT_MULTIPLIER, MAX_DUAL_POINTS,
};
