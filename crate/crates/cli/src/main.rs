//! `rlsgan` experiment driver.
//!
//! Exit codes: 0 on success, 1 on a usage error, 2 on a runtime error.

mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rlsgan::synthdata::{DatasetKind, DEFAULT_N};

use commands::UsageError;

#[derive(Parser)]
#[command(name = "rlsgan", version, about = "Ridge-leverage-score sampling for GAN training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a labelled benchmark dataset to CSV.
    GenData(GenDataArgs),
    /// Compute ridge leverage scores of a dataset under a fixed feature map.
    Rls(RlsArgs),
    /// Train one model per seed and aggregate the evaluations.
    Train(RunArgs),
    /// Run a training config over a grid of gamma and k values.
    Ablate(RunArgs),
    /// Draw samples, data or scores as an SVG scatter plot.
    Plot(PlotArgs),
    /// Evaluate samples against a benchmark's modes.
    Eval(EvalArgs),
}

fn parse_dataset(s: &str) -> Result<DatasetKind, String> {
    s.parse().map_err(|e: rlsgan::Error| e.to_string())
}

#[derive(Args)]
struct GenDataArgs {
    /// ring, grid or 1d-motivating.
    #[arg(long, default_value = "ring", value_parser = parse_dataset)]
    dataset: DatasetKind,
    #[arg(long, default_value_t = DEFAULT_N)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FeatureChoice {
    /// Implicit Gaussian kernel with bandwidth `--sigma`.
    Gaussian,
    /// Precomputed features from `--features`.
    Features,
}

#[derive(Args)]
struct RlsArgs {
    /// Dataset CSV as written by gen-data.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "gaussian")]
    feature_map: FeatureChoice,
    #[arg(long, default_value_t = 0.15)]
    sigma: f64,
    /// Feature CSV with a header row, one row per data point.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Reduce external features to this dimension.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    gamma: f64,
    /// Scores CSV (index,score,prob).
    #[arg(long)]
    out: PathBuf,
    /// Scatter plot shaded by score.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Flat key = value config file; missing keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set iterations=1000`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory, relative paths resolved against $RLSGAN_OUTPUT.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Generated samples, drawn in blue.
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Real points, drawn in green.
    #[arg(long)]
    real: Option<PathBuf>,
    /// Dataset to shade by `--scores`.
    #[arg(long, requires = "scores")]
    data: Option<PathBuf>,
    #[arg(long, requires = "data")]
    scores: Option<PathBuf>,
    /// Plot at most this many rows of each file.
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long, default_value = "")]
    title: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Sample CSV with a header row.
    #[arg(long)]
    samples: PathBuf,
    #[arg(long, default_value = "ring", value_parser = parse_dataset)]
    dataset: DatasetKind,
    /// Write the report as a CSV row.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::GenData(a) => commands::gen_data(a.dataset, a.n, a.seed, &a.out),
        Command::Rls(a) => commands::rls(commands::RlsRequest {
            data: &a.data,
            gaussian: matches!(a.feature_map, FeatureChoice::Gaussian),
            sigma: a.sigma,
            features: a.features.as_deref(),
            k: a.k,
            gamma: a.gamma,
            out: &a.out,
            svg: a.svg.as_deref(),
        }),
        Command::Train(a) => commands::train(a.config.as_deref(), &a.overrides, a.output.as_deref()),
        Command::Ablate(a) => commands::ablate(a.config.as_deref(), &a.overrides, a.output.as_deref()),
        Command::Plot(a) => commands::plot(commands::PlotRequest {
            samples: a.samples.as_deref(),
            real: a.real.as_deref(),
            data: a.data.as_deref(),
            scores: a.scores.as_deref(),
            limit: a.limit,
            title: &a.title,
            out: &a.out,
        }),
        Command::Eval(a) => commands::eval(&a.samples, a.dataset, a.out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
