//! Mode-coverage metrics for samples from a known Gaussian mixture.
//!
//! A sample is high quality when it lies within three standard deviations of
//! its nearest mode center, and a mode counts as covered once at least
//! [`MIN_SAMPLES_PER_MODE`] samples fall inside its 3σ ball.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::synthdata::MixtureSpec;

pub const MIN_SAMPLES_PER_MODE: usize = 50;
/// Radius of the quality ball, in mode standard deviations.
pub const QUALITY_RADIUS_SIGMAS: f64 = 3.0;
/// Number of generator samples used by the standard protocol.
pub const EVAL_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Samples within 3σ of each mode center.
    pub per_mode_counts: Vec<usize>,
    pub modes_covered: usize,
    pub hq_fraction: f64,
    /// KL divergence of the within-3σ mode histogram from uniform; infinite
    /// when no sample is high quality.
    pub kl_to_uniform: f64,
    pub n_samples: usize,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str = "n_samples,modes_covered,hq_fraction,kl_to_uniform";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.n_samples, self.modes_covered, self.hq_fraction, self.kl_to_uniform
        )
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "modes covered: {}/{}",
            self.modes_covered,
            self.per_mode_counts.len()
        )?;
        writeln!(f, "high quality:  {:.4}", self.hq_fraction)?;
        writeln!(f, "KL to uniform: {:.4}", self.kl_to_uniform)?;
        write!(f, "per mode:      {:?}", self.per_mode_counts)
    }
}

/// Scores `samples` (one per row) against the mixture's mode centers.
pub fn evaluate(samples: &Matrix, spec: &MixtureSpec) -> Result<EvalReport> {
    if samples.rows() == 0 {
        return Err(Error::Data("cannot evaluate an empty sample set".into()));
    }
    if samples.cols() != spec.dim() {
        return Err(Error::Shape(format!(
            "samples have {} columns, mixture is {}-dimensional",
            samples.cols(),
            spec.dim()
        )));
    }
    let radius_sq = (QUALITY_RADIUS_SIGMAS * spec.sigma).powi(2);
    let mut counts = vec![0usize; spec.n_modes()];
    let mut high_quality = 0usize;
    for x in samples.row_iter() {
        let (nearest, d2) = spec
            .means
            .iter()
            .map(|m| x.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .enumerate()
            .fold((0, f64::INFINITY), |best, (k, d2)| {
                if d2 < best.1 {
                    (k, d2)
                } else {
                    best
                }
            });
        if d2 <= radius_sq {
            counts[nearest] += 1;
            high_quality += 1;
        }
    }
    let modes_covered = counts
        .iter()
        .filter(|&&c| c >= MIN_SAMPLES_PER_MODE)
        .count();
    let kl_to_uniform = kl_mode_histogram(&counts).unwrap_or(f64::INFINITY);
    Ok(EvalReport {
        per_mode_counts: counts,
        modes_covered,
        hq_fraction: high_quality as f64 / samples.rows() as f64,
        kl_to_uniform,
        n_samples: samples.rows(),
    })
}

/// `KL(q ‖ u)` of the normalized histogram against the uniform distribution
/// over the same number of modes, with `0·log 0 = 0`.
pub fn kl_mode_histogram(counts: &[usize]) -> Result<f64> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::Data("mode histogram is empty".into()));
    }
    let k = counts.len() as f64;
    let kl = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let q = c as f64 / total as f64;
            q * (q * k).ln()
        })
        .sum::<f64>();
    Ok(kl.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthdata::make_ring;

    #[test]
    fn everything_on_one_center() {
        let spec = MixtureSpec::ring();
        let c = &spec.means[0];
        let samples = Matrix::from_fn(EVAL_SAMPLES, 2, |_, j| c[j]);
        let r = evaluate(&samples, &spec).unwrap();
        assert_eq!(r.modes_covered, 1);
        assert_eq!(r.hq_fraction, 1.0);
        assert_eq!(r.per_mode_counts[0], EVAL_SAMPLES);
        assert_eq!(r.per_mode_counts[1..].iter().sum::<usize>(), 0);
        assert!((r.kl_to_uniform - 8f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn coverage_threshold_is_fifty() {
        let spec = MixtureSpec::ring();
        let (a, b) = (&spec.means[0], &spec.means[1]);
        let mut rows = vec![a.clone(); 49];
        rows.extend(vec![b.clone(); 50]);
        let r = evaluate(&Matrix::from_rows(&rows).unwrap(), &spec).unwrap();
        assert_eq!(r.per_mode_counts[0], 49);
        assert_eq!(r.modes_covered, 1);
    }

    #[test]
    fn far_samples_are_not_counted() {
        let spec = MixtureSpec::ring();
        let samples = Matrix::from_rows(&[[0.0, 0.0], [2.5, 0.0]]).unwrap();
        let r = evaluate(&samples, &spec).unwrap();
        assert_eq!(r.hq_fraction, 0.5);
        assert_eq!(r.per_mode_counts.iter().sum::<usize>(), 1);
        assert_eq!(r.n_samples, 2);
    }

    #[test]
    fn true_ring_samples_cover_everything() {
        let d = make_ring(EVAL_SAMPLES, 17).unwrap();
        let r = evaluate(&d.points, &d.spec).unwrap();
        assert_eq!(r.modes_covered, 8);
        assert!(r.hq_fraction >= 0.98, "{}", r.hq_fraction);
    }

    #[test]
    fn kl_closed_forms() {
        assert_eq!(kl_mode_histogram(&[5, 5, 5, 5]).unwrap(), 0.0);
        let one_hot = kl_mode_histogram(&[0, 0, 7, 0, 0, 0, 0, 0]).unwrap();
        assert!((one_hot - 8f64.ln()).abs() < 1e-12);
        let q = [0.9, 0.05, 0.05];
        let expected: f64 = q.iter().map(|&qi: &f64| qi * (qi / (1.0 / 3.0)).ln()).sum();
        assert!((kl_mode_histogram(&[9000, 500, 500]).unwrap() - expected).abs() < 1e-12);
        assert!(kl_mode_histogram(&[0, 0]).is_err());
    }

    #[test]
    fn errors() {
        let spec = MixtureSpec::ring();
        assert!(evaluate(&Matrix::zeros(0, 2), &spec).is_err());
        assert!(evaluate(&Matrix::zeros(3, 1), &spec).is_err());
    }
}
