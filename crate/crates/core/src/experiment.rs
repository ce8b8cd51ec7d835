//! Experiment configs, multi-seed runs and mean(std) aggregation.
//!
//! A config is a flat `key = value` file; every key has a default so an
//! empty file describes a vanilla GAN on the Ring benchmark.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport, EVAL_SAMPLES};
use crate::featmap::{FeatureMapKind, FeatureMapSpec};
use crate::gan::{train_bures, train_vanilla, write_trace_csv, SamplerKind, TrainConfig, TrainedGan};
use crate::io::{read_dataset_csv, write_atomic, write_points_csv};
use crate::linalg::Matrix;
use crate::mwu::{mixture_sample, mwu_init, mwu_round, save_mixture, MwuInit, MwuState};
use crate::nn::{save_checkpoint, AdamConfig};
use crate::rls::{fixed_map_scores, LeverageScores, SamplingDistribution, DEFAULT_MULTIPLIER};
use crate::synthdata::{make_dataset, DatasetKind, MixtureSpec, DEFAULT_N};

/// Environment variable holding the root directory for relative output paths.
pub const OUTPUT_ROOT_ENV: &str = "RLSGAN_OUTPUT";

/// Mixed into the run seed for the evaluation draws.
const EVAL_SEED_MIX: u64 = 0xe7a1_5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Gan,
    BuresGan,
    MwuGan,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Gan => "gan",
            ModelKind::BuresGan => "bures-gan",
            ModelKind::MwuGan => "mwu-gan",
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gan" => Ok(ModelKind::Gan),
            "bures-gan" => Ok(ModelKind::BuresGan),
            "mwu-gan" => Ok(ModelKind::MwuGan),
            other => Err(Error::Parameter(format!("unknown model '{other}'"))),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Mini-batch sampler; for MwuGAN it selects the weight initialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerChoice {
    Uniform,
    RlsFixedGaussian,
    RlsFixedFeatures,
    RlsDiscriminator,
}

impl SamplerChoice {
    pub fn name(self) -> &'static str {
        match self {
            SamplerChoice::Uniform => "uniform",
            SamplerChoice::RlsFixedGaussian => "rls-fixed-gaussian",
            SamplerChoice::RlsFixedFeatures => "rls-fixed-features",
            SamplerChoice::RlsDiscriminator => "rls-discriminator",
        }
    }
}

impl FromStr for SamplerChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(SamplerChoice::Uniform),
            "rls-fixed-gaussian" => Ok(SamplerChoice::RlsFixedGaussian),
            "rls-fixed-features" => Ok(SamplerChoice::RlsFixedFeatures),
            "rls-discriminator" => Ok(SamplerChoice::RlsDiscriminator),
            other => Err(Error::Parameter(format!("unknown sampler '{other}'"))),
        }
    }
}

impl fmt::Display for SamplerChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetKind,
    pub n: usize,
    /// Train on this dataset file instead of a fresh sample per seed.
    pub data: Option<PathBuf>,
    pub seeds: Vec<u64>,
    pub model: ModelKind,
    pub sampler: SamplerChoice,
    pub gamma: f64,
    /// Gaussian kernel bandwidth for `rls-fixed-gaussian`.
    pub sigma: f64,
    /// Sketch dimension `k`; `None` uses the features as they are.
    pub sketch_dim: Option<usize>,
    /// Feature file for `rls-fixed-features`.
    pub features: Option<PathBuf>,
    pub multiplier: usize,
    /// λ in front of the Bures term.
    pub bures_weight: f64,
    pub iterations: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// MwuGAN mixture size.
    pub generators: usize,
    pub delta: f64,
    /// KDE bandwidth for the MwuGAN weight update.
    pub bandwidth: f64,
    pub eval_samples: usize,
    pub log_every: usize,
    pub gamma_grid: Vec<f64>,
    pub k_grid: Vec<Option<usize>>,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetKind::Ring,
            n: DEFAULT_N,
            data: None,
            seeds: vec![0, 1, 2],
            model: ModelKind::Gan,
            sampler: SamplerChoice::Uniform,
            gamma: 1e-3,
            sigma: 0.15,
            sketch_dim: None,
            features: None,
            multiplier: DEFAULT_MULTIPLIER,
            bures_weight: 1.0,
            iterations: 30_000,
            batch_size: 64,
            learning_rate: AdamConfig::default().lr,
            generators: 15,
            delta: crate::mwu::DEFAULT_DELTA,
            bandwidth: crate::mwu::DEFAULT_BANDWIDTH,
            eval_samples: EVAL_SAMPLES,
            log_every: 0,
            gamma_grid: Vec::new(),
            k_grid: Vec::new(),
            output: None,
        }
    }
}

/// Every recognized key, in the order [`ExperimentConfig::to_text`] writes them.
pub const CONFIG_KEYS: &[&str] = &[
    "dataset",
    "n",
    "data",
    "seeds",
    "model",
    "sampler",
    "gamma",
    "sigma",
    "k",
    "features",
    "multiplier",
    "lambda",
    "iterations",
    "batch_size",
    "learning_rate",
    "generators",
    "delta",
    "bandwidth",
    "eval_samples",
    "log_every",
    "gamma_grid",
    "k_grid",
    "output",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parameter(format!("invalid value '{value}' for '{key}'")))
}

fn parse_opt_usize(key: &str, value: &str) -> Result<Option<usize>> {
    match value {
        "none" | "" => Ok(None),
        v => parse_value(key, v).map(Some),
    }
}

fn parse_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty() && value != "none").then(|| PathBuf::from(value))
}

fn parse_list<T>(value: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(f)
        .collect()
}

fn fmt_opt_usize(v: Option<usize>) -> String {
    v.map_or_else(|| "none".into(), |k| k.to_string())
}

fn fmt_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map_or_else(|| "none".into(), |p| p.display().to_string())
}

fn fmt_list<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Sets one field from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "dataset" => self.dataset = value.parse()?,
            "n" => self.n = parse_value(key, value)?,
            "data" => self.data = parse_path(value),
            "seeds" => self.seeds = parse_list(value, |s| parse_value(key, s))?,
            "model" => self.model = value.parse()?,
            "sampler" => self.sampler = value.parse()?,
            "gamma" => self.gamma = parse_value(key, value)?,
            "sigma" => self.sigma = parse_value(key, value)?,
            "k" => self.sketch_dim = parse_opt_usize(key, value)?,
            "features" => self.features = parse_path(value),
            "multiplier" => self.multiplier = parse_value(key, value)?,
            "lambda" => self.bures_weight = parse_value(key, value)?,
            "iterations" => self.iterations = parse_value(key, value)?,
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "learning_rate" => self.learning_rate = parse_value(key, value)?,
            "generators" => self.generators = parse_value(key, value)?,
            "delta" => self.delta = parse_value(key, value)?,
            "bandwidth" => self.bandwidth = parse_value(key, value)?,
            "eval_samples" => self.eval_samples = parse_value(key, value)?,
            "log_every" => self.log_every = parse_value(key, value)?,
            "gamma_grid" => self.gamma_grid = parse_list(value, |s| parse_value(key, s))?,
            "k_grid" => self.k_grid = parse_list(value, |s| parse_opt_usize(key, s))?,
            "output" => self.output = parse_path(value),
            other => return Err(Error::Parameter(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Parameter(format!("expected key=value, got '{assignment}'")))?;
        self.set(k.trim(), v)
    }

    /// Parses `key = value` lines on top of the defaults. `#` starts a comment.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            cfg.apply_override(line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: match e {
                    Error::Parameter(m) => m,
                    other => other.to_string(),
                },
            })?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    fn value_text(&self, key: &str) -> String {
        match key {
            "dataset" => self.dataset.name().into(),
            "n" => self.n.to_string(),
            "data" => fmt_path(&self.data),
            "seeds" => fmt_list(&self.seeds, u64::to_string),
            "model" => self.model.name().into(),
            "sampler" => self.sampler.name().into(),
            "gamma" => self.gamma.to_string(),
            "sigma" => self.sigma.to_string(),
            "k" => fmt_opt_usize(self.sketch_dim),
            "features" => fmt_path(&self.features),
            "multiplier" => self.multiplier.to_string(),
            "lambda" => self.bures_weight.to_string(),
            "iterations" => self.iterations.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "learning_rate" => self.learning_rate.to_string(),
            "generators" => self.generators.to_string(),
            "delta" => self.delta.to_string(),
            "bandwidth" => self.bandwidth.to_string(),
            "eval_samples" => self.eval_samples.to_string(),
            "log_every" => self.log_every.to_string(),
            "gamma_grid" => fmt_list(&self.gamma_grid, f64::to_string),
            "k_grid" => fmt_list(&self.k_grid, |k| fmt_opt_usize(*k)),
            "output" => fmt_path(&self.output),
            _ => unreachable!("CONFIG_KEYS and value_text disagree on '{key}'"),
        }
    }

    /// Text form that [`ExperimentConfig::parse`] reads back unchanged.
    pub fn to_text(&self) -> String {
        CONFIG_KEYS
            .iter()
            .map(|k| format!("{k} = {}\n", self.value_text(k)))
            .collect()
    }

    /// Checks everything that can be checked before any training starts.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Parameter(m));
        if self.seeds.is_empty() {
            return fail("seed list is empty".into());
        }
        if self.data.is_none() && self.n == 0 {
            return fail("dataset size must be at least 1".into());
        }
        if self.eval_samples == 0 {
            return fail("eval_samples must be at least 1".into());
        }
        if !(self.learning_rate > 0.0) {
            return fail(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.sketch_dim == Some(0) {
            return fail("sketch dimension must be at least 1".into());
        }
        for p in [&self.data, &self.features].into_iter().flatten() {
            if !p.is_file() {
                return fail(format!("{} does not exist", p.display()));
            }
        }
        match (self.model, self.sampler) {
            (ModelKind::MwuGan, SamplerChoice::RlsDiscriminator) => {
                return fail("MwuGAN weights need a fixed feature map".into());
            }
            (ModelKind::MwuGan, _) if self.generators == 0 => {
                return fail("MwuGAN needs at least one generator".into());
            }
            (_, SamplerChoice::RlsFixedFeatures) if self.features.is_none() => {
                return fail("rls-fixed-features needs a 'features' file".into());
            }
            (_, SamplerChoice::RlsFixedGaussian) if self.sketch_dim.is_some() => {
                return fail("an implicit Gaussian feature map cannot be sketched".into());
            }
            _ => {}
        }
        if self.model == ModelKind::MwuGan && !(self.bandwidth > 0.0) {
            return fail(format!("bandwidth must be positive, got {}", self.bandwidth));
        }
        Ok(())
    }

    /// Training data and the mixture used to score it for `seed`.
    pub fn training_data(&self, seed: u64) -> Result<(Matrix, MixtureSpec)> {
        let spec = self.dataset.spec();
        let points = match &self.data {
            Some(path) => read_dataset_csv(path)?.0,
            None => make_dataset(self.dataset, self.n, seed)?.points,
        };
        if points.cols() != spec.dim() {
            return Err(Error::Shape(format!(
                "data is {}-dimensional, {} is {}-dimensional",
                points.cols(),
                self.dataset.name(),
                spec.dim()
            )));
        }
        Ok((points, spec))
    }

    /// Leverage scores under the configured fixed feature map.
    pub fn fixed_scores(&self, data: &Matrix) -> Result<LeverageScores> {
        let spec = match self.sampler {
            SamplerChoice::RlsFixedGaussian => FeatureMapSpec::gaussian(self.sigma)?,
            SamplerChoice::RlsFixedFeatures => FeatureMapSpec::new(
                FeatureMapKind::ExternalFeatures {
                    path: self.features.clone().ok_or_else(|| {
                        Error::Parameter("rls-fixed-features needs a 'features' file".into())
                    })?,
                    has_header: true,
                },
                self.sketch_dim,
            )?,
            other => {
                return Err(Error::Parameter(format!("{other} has no fixed feature map")));
            }
        };
        fixed_map_scores(data, &spec, self.gamma)
    }

    /// Training loop settings for one seed.
    pub fn train_config(&self, seed: u64, data: &Matrix) -> Result<TrainConfig> {
        let sampler = match (self.model, self.sampler) {
            (ModelKind::MwuGan, _) | (_, SamplerChoice::Uniform) => SamplerKind::Uniform,
            (_, SamplerChoice::RlsDiscriminator) => SamplerKind::TwoStage,
            _ => SamplerKind::Weighted(SamplingDistribution::normalize(&self.fixed_scores(data)?)?),
        };
        Ok(TrainConfig {
            iterations: self.iterations,
            batch_size: self.batch_size,
            sampler,
            gamma: self.gamma,
            sketch_dim: self.sketch_dim,
            multiplier: self.multiplier,
            bures_weight: self.bures_weight,
            seed,
            adam: AdamConfig {
                lr: self.learning_rate,
                ..AdamConfig::default()
            },
            log_every: self.log_every,
            ..TrainConfig::default()
        })
    }

    /// Resolves a relative output directory against [`OUTPUT_ROOT_ENV`].
    pub fn resolved_output(&self) -> Option<PathBuf> {
        self.output.as_ref().map(|p| resolve_output(p))
    }
}

/// Joins a relative path onto the output root when the variable is set.
pub fn resolve_output(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if path.is_relative() && !root.is_empty() => PathBuf::from(root).join(path),
        _ => path.to_path_buf(),
    }
}

#[derive(Debug, Clone)]
pub enum TrainedModel {
    Single(TrainedGan),
    Mixture(MwuState),
}

impl TrainedModel {
    pub fn sample(&self, count: usize, seed: u64) -> Result<Matrix> {
        match self {
            TrainedModel::Single(g) => g.sample(count, &mut ChaCha8Rng::seed_from_u64(seed)),
            TrainedModel::Mixture(m) => mixture_sample(m, count, seed),
        }
    }
}

/// Outcome of one seed.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub model: TrainedModel,
    /// The evaluation draw the report was computed from.
    pub samples: Matrix,
    pub report: EvalReport,
}

/// Trains and evaluates one seed. The seed drives the dataset draw, the
/// network initialization and the evaluation samples.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedRun> {
    cfg.validate()?;
    let (data, spec) = cfg.training_data(seed)?;
    let train_cfg = cfg.train_config(seed, &data)?;
    let model = match cfg.model {
        ModelKind::Gan => TrainedModel::Single(train_vanilla(&data, &train_cfg, Some(&spec))?),
        ModelKind::BuresGan => TrainedModel::Single(train_bures(&data, &train_cfg, Some(&spec))?),
        ModelKind::MwuGan => {
            let init = match cfg.sampler {
                SamplerChoice::Uniform => MwuInit::Uniform,
                _ => MwuInit::Rls(cfg.fixed_scores(&data)?),
            };
            let mut state = mwu_init(data.rows(), &init, cfg.delta)?;
            for _ in 0..cfg.generators {
                mwu_round(&mut state, &data, &train_cfg, cfg.bandwidth)?;
            }
            TrainedModel::Mixture(state)
        }
    };
    let samples = model.sample(cfg.eval_samples, seed ^ EVAL_SEED_MIX)?;
    let report = evaluate(&samples, &spec)?;
    Ok(SeedRun {
        seed,
        model,
        samples,
        report,
    })
}

/// Mean and population standard deviation; both are infinite when any value
/// is, as happens for the KL of a run without high-quality samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Data("cannot aggregate zero runs".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Ok(Self {
                mean: f64::INFINITY,
                std: f64::INFINITY,
            });
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Ok(Self { mean, std: var.sqrt() })
    }

    /// `mean(std)` with `decimals` places, e.g. `5.0(1.1)`; an exact integer
    /// mean with zero spread prints as `8(0)`.
    pub fn format(&self, decimals: usize) -> String {
        if !self.mean.is_finite() {
            return format!("{}", self.mean);
        }
        if self.std == 0.0 && self.mean.fract() == 0.0 {
            return format!("{:.0}(0)", self.mean);
        }
        format!("{:.*}({:.*})", decimals, self.mean, decimals, self.std)
    }
}

/// Aggregate over seeds, in the layout of the benchmark tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub runs: usize,
    pub modes: MeanStd,
    pub hq: MeanStd,
    pub kl: MeanStd,
}

impl Summary {
    pub const CSV_HEADER: &'static str = "runs,nb_modes,hq_3sigma,kl_to_uniform,modes_mean,hq_mean";

    pub fn from_reports<'a>(reports: impl IntoIterator<Item = &'a EvalReport>) -> Result<Self> {
        let (mut modes, mut hq, mut kl) = (Vec::new(), Vec::new(), Vec::new());
        for r in reports {
            modes.push(r.modes_covered as f64);
            hq.push(r.hq_fraction);
            kl.push(r.kl_to_uniform);
        }
        Ok(Self {
            runs: modes.len(),
            modes: MeanStd::of(&modes)?,
            hq: MeanStd::of(&hq)?,
            kl: MeanStd::of(&kl)?,
        })
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.runs,
            self.modes.format(1),
            self.hq.format(2),
            self.kl.format(2),
            self.modes.mean,
            self.hq.mean
        )
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Nb modes {}  in 3σ {}  KL {}  ({} runs)",
            self.modes.format(1),
            self.hq.format(2),
            self.kl.format(2),
            self.runs
        )
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub runs: Vec<SeedRun>,
    pub summary: Summary,
}

pub const RESULTS_HEADER: &str = "seed,n_samples,modes_covered,hq_fraction,kl_to_uniform";

/// Runs every seed in order and writes outputs when an output directory is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_with(cfg, |_| {})
}

/// [`run_experiment`] with a callback after each finished seed.
pub fn run_experiment_with(cfg: &ExperimentConfig, mut on_seed: impl FnMut(&SeedRun)) -> Result<ExperimentResult> {
    cfg.validate()?;
    let out = cfg.resolved_output();
    if let Some(dir) = &out {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut runs = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let run = run_seed(cfg, seed)?;
        if let Some(dir) = &out {
            write_seed_outputs(&dir.join(format!("seed_{seed}")), &run)?;
        }
        on_seed(&run);
        runs.push(run);
    }
    let summary = Summary::from_reports(runs.iter().map(|r| &r.report))?;
    if let Some(dir) = &out {
        write_atomic(&dir.join("config.txt"), |w| w.write_all(cfg.to_text().as_bytes()))?;
        write_atomic(&dir.join("results.csv"), |w| {
            writeln!(w, "{RESULTS_HEADER}")?;
            for r in &runs {
                writeln!(w, "{},{}", r.seed, r.report.csv_row())?;
            }
            Ok(())
        })?;
        write_atomic(&dir.join("summary.csv"), |w| {
            writeln!(w, "dataset,model,sampler,{}", Summary::CSV_HEADER)?;
            writeln!(
                w,
                "{},{},{},{}",
                cfg.dataset.name(),
                cfg.model,
                cfg.sampler,
                summary.csv_row()
            )
        })?;
    }
    Ok(ExperimentResult { runs, summary })
}

/// Samples, report, trace and checkpoints of one seed.
pub fn write_seed_outputs(dir: &Path, run: &SeedRun) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_points_csv(&dir.join("samples.csv"), &run.samples)?;
    write_atomic(&dir.join("report.csv"), |w| {
        writeln!(w, "{}", EvalReport::CSV_HEADER)?;
        writeln!(w, "{}", run.report.csv_row())
    })?;
    match &run.model {
        TrainedModel::Single(g) => {
            save_checkpoint(&dir.join("generator.txt"), &g.generator)?;
            save_checkpoint(&dir.join("discriminator.txt"), &g.discriminator)?;
            write_trace_csv(&dir.join("trace.csv"), &g.trace)
        }
        TrainedModel::Mixture(m) => save_mixture(&dir.join("mixture"), m),
    }
}

/// One cell of an ablation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub gamma: f64,
    pub sketch_dim: Option<usize>,
    pub summary: Summary,
}

pub const ABLATION_HEADER: &str = "gamma,k,runs,nb_modes,hq_3sigma,kl_to_uniform,modes_mean,hq_mean";

/// Cross product of `gamma_grid` and `k_grid` (the configured `k` when the
/// latter is empty), one multi-seed experiment per cell.
pub fn run_ablation(cfg: &ExperimentConfig) -> Result<Vec<AblationRow>> {
    if cfg.gamma_grid.is_empty() {
        return Err(Error::Parameter("ablation needs a non-empty gamma_grid".into()));
    }
    if let Some(g) = cfg.gamma_grid.iter().find(|g| !(**g > 0.0)) {
        return Err(Error::Parameter(format!("gamma must be positive, got {g}")));
    }
    let ks = if cfg.k_grid.is_empty() {
        vec![cfg.sketch_dim]
    } else {
        cfg.k_grid.clone()
    };
    cfg.validate()?;
    let root = cfg.resolved_output();
    let mut rows = Vec::new();
    for &gamma in &cfg.gamma_grid {
        for &k in &ks {
            let cell = ExperimentConfig {
                gamma,
                sketch_dim: k,
                gamma_grid: Vec::new(),
                k_grid: Vec::new(),
                output: root
                    .as_ref()
                    .map(|r| r.join(format!("gamma_{gamma}_k_{}", fmt_opt_usize(k)))),
                ..cfg.clone()
            };
            let result = run_experiment(&cell)?;
            rows.push(AblationRow {
                gamma,
                sketch_dim: k,
                summary: result.summary,
            });
        }
    }
    if let Some(dir) = &root {
        write_ablation_csv(&dir.join("ablation.csv"), &rows)?;
    }
    Ok(rows)
}

pub fn write_ablation_csv(path: &Path, rows: &[AblationRow]) -> Result<()> {
    write_atomic(path, |w| {
        writeln!(w, "{ABLATION_HEADER}")?;
        for r in rows {
            writeln!(w, "{},{},{}", r.gamma, fmt_opt_usize(r.sketch_dim), r.summary.csv_row())?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            n: 300,
            seeds: vec![3],
            iterations: 20,
            batch_size: 16,
            eval_samples: 200,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn mean_std_formats_like_the_tables() {
        assert_eq!(MeanStd { mean: 5.0, std: 1.1 }.format(1), "5.0(1.1)");
        assert_eq!(MeanStd { mean: 8.0, std: 0.0 }.format(1), "8(0)");
        assert_eq!(MeanStd { mean: 0.9, std: 0.02 }.format(2), "0.90(0.02)");
        assert_eq!(MeanStd { mean: 24.4, std: 0.92 }.format(2), "24.40(0.92)");
        assert_eq!(MeanStd { mean: 7.5, std: 0.0 }.format(1), "7.5(0.0)");
    }

    #[test]
    fn population_std() {
        let m = MeanStd::of(&[4.0, 6.0]).unwrap();
        assert_eq!((m.mean, m.std), (5.0, 1.0));
        assert_eq!(MeanStd::of(&[3.0]).unwrap().std, 0.0);
        assert!(MeanStd::of(&[]).is_err());
        let inf = MeanStd::of(&[1.0, f64::INFINITY]).unwrap();
        assert_eq!((inf.mean, inf.std), (f64::INFINITY, f64::INFINITY));
        assert_eq!(inf.format(2), "inf");
    }

    #[test]
    fn text_round_trip() {
        let cfg = ExperimentConfig {
            dataset: DatasetKind::Grid,
            seeds: vec![1, 5, 9],
            model: ModelKind::BuresGan,
            sampler: SamplerChoice::RlsDiscriminator,
            gamma: 1e-4,
            sketch_dim: Some(25),
            bures_weight: 0.3,
            gamma_grid: vec![1e-2, 1e-3],
            k_grid: vec![None, Some(10)],
            output: Some("runs/a".into()),
            ..ExperimentConfig::default()
        };
        let back = ExperimentConfig::parse(&cfg.to_text(), Path::new("cfg")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn parse_comments_overrides_and_errors() {
        let text = "# comment\nmodel = bures-gan\n\nseeds = 4, 5 # trailing\n";
        let mut cfg = ExperimentConfig::parse(text, Path::new("c.txt")).unwrap();
        assert_eq!(cfg.model, ModelKind::BuresGan);
        assert_eq!(cfg.seeds, vec![4, 5]);
        cfg.apply_override("iterations=7").unwrap();
        assert_eq!(cfg.iterations, 7);
        assert!(cfg.apply_override("iterations").is_err());
        assert!(cfg.apply_override("colour=red").is_err());
        match ExperimentConfig::parse("n = 10\nbatch_size = big\n", Path::new("c.txt")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn validation() {
        assert!(tiny().validate().is_ok());
        let bad = [
            ExperimentConfig { seeds: vec![], ..tiny() },
            ExperimentConfig {
                model: ModelKind::MwuGan,
                sampler: SamplerChoice::RlsDiscriminator,
                ..tiny()
            },
            ExperimentConfig {
                sampler: SamplerChoice::RlsFixedFeatures,
                ..tiny()
            },
            ExperimentConfig {
                features: Some("/nonexistent/features.csv".into()),
                ..tiny()
            },
            ExperimentConfig {
                sampler: SamplerChoice::RlsFixedGaussian,
                sketch_dim: Some(3),
                ..tiny()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn zero_iterations_evaluates_untrained_generator() {
        let cfg = ExperimentConfig { iterations: 0, ..tiny() };
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.runs.len(), 1);
        assert_eq!(r.runs[0].report.n_samples, 200);
    }

    #[test]
    fn runs_are_reproducible_and_write_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            model: ModelKind::BuresGan,
            sampler: SamplerChoice::RlsDiscriminator,
            multiplier: 4,
            seeds: vec![1, 2],
            output: Some(dir.path().join("out")),
            ..tiny()
        };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&ExperimentConfig { output: None, ..cfg.clone() }).unwrap();
        assert_eq!(a.summary, b.summary);
        for (x, y) in a.runs.iter().zip(&b.runs) {
            assert_eq!(x.samples, y.samples);
        }
        let out = dir.path().join("out");
        for f in ["config.txt", "results.csv", "summary.csv", "seed_1/samples.csv", "seed_2/trace.csv"] {
            assert!(out.join(f).is_file(), "{f}");
        }
        let back = ExperimentConfig::from_file(&out.join("config.txt")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn fixed_gaussian_and_mwu_paths_run() {
        let gauss = ExperimentConfig {
            sampler: SamplerChoice::RlsFixedGaussian,
            ..tiny()
        };
        assert!(run_experiment(&gauss).is_ok());
        let mwu = ExperimentConfig {
            model: ModelKind::MwuGan,
            sampler: SamplerChoice::RlsFixedGaussian,
            generators: 2,
            ..tiny()
        };
        let r = run_experiment(&mwu).unwrap();
        match &r.runs[0].model {
            TrainedModel::Mixture(m) => assert_eq!(m.rounds(), 2),
            other => panic!("expected a mixture, got {other:?}"),
        }
    }

    #[test]
    fn ablation_grid_shape() {
        let cfg = ExperimentConfig {
            iterations: 2,
            gamma_grid: vec![1e-2, 1e-3, 1e-4],
            model: ModelKind::BuresGan,
            sampler: SamplerChoice::RlsDiscriminator,
            multiplier: 2,
            ..tiny()
        };
        let rows = run_ablation(&cfg).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows.iter().map(|r| r.gamma).collect::<Vec<_>>(), cfg.gamma_grid);
        let again = run_ablation(&cfg).unwrap();
        assert_eq!(rows, again);
        let two_k = ExperimentConfig {
            k_grid: vec![Some(10), Some(25)],
            ..cfg.clone()
        };
        assert_eq!(run_ablation(&two_k).unwrap().len(), 6);
        assert!(run_ablation(&ExperimentConfig {
            gamma_grid: vec![],
            ..cfg
        })
        .is_err());
    }

    #[test]
    fn output_root_only_applies_to_relative_paths() {
        let abs = Path::new("/abs/dir");
        assert_eq!(resolve_output(abs), abs);
    }
}
