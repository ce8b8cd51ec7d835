use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rlsgan::eval::{evaluate, EvalReport};
use rlsgan::experiment::{
    resolve_output, run_ablation, run_experiment_with, ExperimentConfig, SeedRun,
};
use rlsgan::featmap::{FeatureMapKind, FeatureMapSpec};
use rlsgan::io::{read_dataset_csv, read_matrix_csv, read_scores_csv, write_atomic, write_dataset_csv, write_scores_csv};
use rlsgan::linalg::Matrix;
use rlsgan::rls::{fixed_map_scores, SamplingDistribution};
use rlsgan::synthdata::{make_dataset, DatasetKind};

use crate::svg::{self, Fill, Series};

/// Error caused by the invocation rather than by the computation.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Resolves `path` against the output root and creates its parent directory.
fn output_path(path: &Path) -> Result<PathBuf> {
    let path = resolve_output(path);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(path)
}

/// Points from a dataset CSV (`x[,y],mode_label`) or a plain CSV with a
/// header. A file without any lines holds no points.
fn load_points(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let Some(header) = text.lines().next() else {
        return Ok(Matrix::zeros(0, 2));
    };
    let points = if header.trim_end().ends_with("mode_label") {
        read_dataset_csv(path)?.0
    } else {
        read_matrix_csv(path, true)?
    };
    Ok(points)
}

fn first_rows(m: &Matrix, limit: Option<usize>) -> Matrix {
    match limit {
        Some(k) if k < m.rows() => m.select_rows(&(0..k).collect::<Vec<_>>()),
        _ => m.clone(),
    }
}

/// Plot coordinates; 1D points sit on the horizontal axis.
fn plot_points(m: &Matrix) -> Result<Vec<[f64; 2]>> {
    match m.cols() {
        0 => Ok(Vec::new()),
        1 => Ok(m.row_iter().map(|r| [r[0], 0.0]).collect()),
        2 => Ok(m.row_iter().map(|r| [r[0], r[1]]).collect()),
        d => bail!("cannot plot {d}-dimensional points"),
    }
}

fn write_svg(path: &Path, text: &str) -> Result<()> {
    let path = output_path(path)?;
    write_atomic(&path, |w| w.write_all(text.as_bytes()))?;
    Ok(())
}

pub fn gen_data(kind: DatasetKind, n: usize, seed: u64, out: &Path) -> Result<()> {
    if n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let data = make_dataset(kind, n, seed)?;
    let path = output_path(out)?;
    write_dataset_csv(&path, &data)?;
    let counts = data.mode_counts();
    println!(
        "wrote {n} {} points to {} ({} of {} modes populated)",
        kind.name(),
        path.display(),
        counts.iter().filter(|&&c| c > 0).count(),
        counts.len()
    );
    Ok(())
}

pub struct RlsRequest<'a> {
    pub data: &'a Path,
    pub gaussian: bool,
    pub sigma: f64,
    pub features: Option<&'a Path>,
    pub k: Option<usize>,
    pub gamma: f64,
    pub out: &'a Path,
    pub svg: Option<&'a Path>,
}

pub fn rls(req: RlsRequest<'_>) -> Result<()> {
    let spec = if req.gaussian {
        if req.k.is_some() {
            return Err(usage("--k applies to external features only"));
        }
        FeatureMapSpec::gaussian(req.sigma).map_err(|e| usage(e.to_string()))?
    } else {
        let path = req
            .features
            .ok_or_else(|| usage("--feature-map features needs --features"))?;
        let kind = FeatureMapKind::ExternalFeatures {
            path: path.to_path_buf(),
            has_header: true,
        };
        FeatureMapSpec::new(kind, req.k).map_err(|e| usage(e.to_string()))?
    };
    if !(req.gamma > 0.0) {
        return Err(usage(format!("--gamma must be positive, got {}", req.gamma)));
    }
    let (points, _) = read_dataset_csv(req.data)?;
    let scores = fixed_map_scores(&points, &spec, req.gamma)?;
    let dist = SamplingDistribution::normalize(&scores)?;
    let path = output_path(req.out)?;
    write_scores_csv(&path, &scores, &dist)?;
    println!(
        "{} scores ({:?} form), effective dimension {:.4}, written to {}",
        scores.n(),
        scores.method,
        scores.effective_dimension(),
        path.display()
    );
    if let Some(svg_path) = req.svg {
        let title = format!("ridge leverage scores, gamma = {}", req.gamma);
        write_svg(svg_path, &score_plot(&points, &scores.scores, &title)?)?;
    }
    Ok(())
}

/// 2D points shaded by score, or score against position for 1D points.
fn score_plot(points: &Matrix, scores: &[f64], title: &str) -> Result<String> {
    if points.rows() != scores.len() {
        bail!("{} points but {} scores", points.rows(), scores.len());
    }
    if points.cols() == 1 {
        let pts = points.column(0).into_iter().zip(scores).map(|(x, &s)| [x, s]).collect();
        let series = Series {
            label: "RLS".into(),
            points: pts,
            fill: Fill::Solid(svg::GENERATED),
        };
        return Ok(svg::scatter(title, "x", "ridge leverage score", &[series]));
    }
    let series = Series {
        label: "RLS (darker is higher)".into(),
        points: plot_points(points)?,
        fill: Fill::Shade(scores.to_vec()),
    };
    Ok(svg::scatter(title, "x", "y", &[series]))
}

fn load_config(config: Option<&Path>, overrides: &[String], output: Option<&Path>) -> Result<ExperimentConfig> {
    let mut cfg = match config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    for o in overrides {
        cfg.apply_override(o).map_err(|e| usage(e.to_string()))?;
    }
    if let Some(p) = output {
        cfg.output = Some(p.to_path_buf());
    }
    if cfg.output.is_none() {
        cfg.output = Some(format!("runs/{}-{}-{}", cfg.dataset.name(), cfg.model, cfg.sampler).into());
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn log_seed(run: &SeedRun) {
    eprintln!(
        "seed {}: {} modes covered, {:.4} high quality, KL {:.4}",
        run.seed, run.report.modes_covered, run.report.hq_fraction, run.report.kl_to_uniform
    );
}

pub fn train(config: Option<&Path>, overrides: &[String], output: Option<&Path>) -> Result<()> {
    let cfg = load_config(config, overrides, output)?;
    let result = run_experiment_with(&cfg, log_seed)?;
    println!("{} {} {}: {}", cfg.dataset.name(), cfg.model, cfg.sampler, result.summary);
    if let Some(dir) = cfg.resolved_output() {
        println!("results in {}", dir.display());
    }
    Ok(())
}

pub fn ablate(config: Option<&Path>, overrides: &[String], output: Option<&Path>) -> Result<()> {
    let cfg = load_config(config, overrides, output)?;
    if cfg.gamma_grid.is_empty() {
        return Err(usage("ablation needs gamma_grid, e.g. --set gamma_grid=1e-2,1e-3,1e-4"));
    }
    let rows = run_ablation(&cfg)?;
    println!("{:>10} {:>6} {:>12} {:>12}", "gamma", "k", "Nb modes", "in 3sigma");
    for r in &rows {
        let k = r.sketch_dim.map_or_else(|| "none".to_string(), |k| k.to_string());
        println!(
            "{:>10} {:>6} {:>12} {:>12}",
            r.gamma,
            k,
            r.summary.modes.format(1),
            r.summary.hq.format(2)
        );
    }
    if let Some(dir) = cfg.resolved_output() {
        println!("table in {}", dir.join("ablation.csv").display());
    }
    Ok(())
}

pub struct PlotRequest<'a> {
    pub samples: Option<&'a Path>,
    pub real: Option<&'a Path>,
    pub data: Option<&'a Path>,
    pub scores: Option<&'a Path>,
    pub limit: Option<usize>,
    pub title: &'a str,
    pub out: &'a Path,
}

pub fn plot(req: PlotRequest<'_>) -> Result<()> {
    if let (Some(data), Some(scores)) = (req.data, req.scores) {
        let points = first_rows(&load_points(data)?, req.limit);
        let (s, _) = read_scores_csv(scores)?;
        let s: Vec<f64> = s.into_iter().take(points.rows()).collect();
        return write_svg(req.out, &score_plot(&points, &s, req.title)?);
    }
    if req.samples.is_none() && req.real.is_none() {
        return Err(usage("nothing to plot: pass --samples, --real or --data with --scores"));
    }
    let mut series = Vec::new();
    // real data first so generated samples are drawn on top
    if let Some(p) = req.real {
        series.push(Series {
            label: "real".into(),
            points: plot_points(&first_rows(&load_points(p)?, req.limit))?,
            fill: Fill::Solid(svg::REAL),
        });
    }
    if let Some(p) = req.samples {
        series.push(Series {
            label: "generated".into(),
            points: plot_points(&first_rows(&load_points(p)?, req.limit))?,
            fill: Fill::Solid(svg::GENERATED),
        });
    }
    write_svg(req.out, &svg::scatter(req.title, "x", "y", &series))
}

pub fn eval(samples: &Path, kind: DatasetKind, out: Option<&Path>) -> Result<()> {
    let points = load_points(samples)?;
    let report = evaluate(&points, &kind.spec())?;
    println!("{report}");
    if let Some(out) = out {
        let path = output_path(out)?;
        write_atomic(&path, |w| {
            writeln!(w, "{}", EvalReport::CSV_HEADER)?;
            writeln!(w, "{}", report.csv_row())
        })?;
    }
    Ok(())
}
