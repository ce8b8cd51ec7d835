//! Unbalanced Gaussian-mixture benchmarks: Ring (8 modes, 4 depleted), Grid
//! (25 modes, 10 depleted) and a 1D mixture with one majority mode.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rls::SamplingDistribution;

/// Relative weight of a depleted (minority) mode.
pub const DEPLETION_FACTOR: f64 = 0.05;
/// Standard deviation of every Ring/Grid mode.
pub const MODE_STD: f64 = 0.05;
pub const RING_RADIUS: f64 = 2.5;
pub const RING_MODES: usize = 8;
pub const RING_MINORITY: usize = 4;
pub const GRID_SIDE: usize = 5;
pub const GRID_SPACING: f64 = 2.0;
pub const GRID_MINORITY: usize = 10;
pub const DEFAULT_N: usize = 50_000;

/// Isotropic Gaussian mixture with a shared standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    pub means: Vec<Vec<f64>>,
    pub sigma: f64,
    pub weights: Vec<f64>,
}

impl MixtureSpec {
    /// Normalizes `relative_weights` and checks the invariants.
    pub fn new(means: Vec<Vec<f64>>, sigma: f64, relative_weights: &[f64]) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::Parameter("mixture needs at least one mode".into()));
        }
        if means.len() != relative_weights.len() {
            return Err(Error::Shape(format!(
                "{} means but {} weights",
                means.len(),
                relative_weights.len()
            )));
        }
        let dim = means[0].len();
        if dim == 0 || means.iter().any(|m| m.len() != dim) {
            return Err(Error::Shape("mode centers must share a nonzero dimension".into()));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Parameter(format!("sigma must be positive, got {sigma}")));
        }
        if relative_weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Parameter("mode weights must be finite and non-negative".into()));
        }
        let total: f64 = relative_weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Parameter("mode weights sum to zero".into()));
        }
        Ok(Self {
            means,
            sigma,
            weights: relative_weights.iter().map(|w| w / total).collect(),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.means.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    /// Ring: centers `2.5·(cos(2πi/8), sin(2πi/8))` for `i = 1..8`; modes
    /// `i = 1..4` (labels 0..3) are depleted by [`DEPLETION_FACTOR`].
    pub fn ring() -> Self {
        let means = (1..=RING_MODES)
            .map(|i| {
                let angle = 2.0 * PI * i as f64 / RING_MODES as f64;
                vec![RING_RADIUS * angle.cos(), RING_RADIUS * angle.sin()]
            })
            .collect();
        let weights: Vec<f64> = (0..RING_MODES)
            .map(|k| if k < RING_MINORITY { DEPLETION_FACTOR } else { 1.0 })
            .collect();
        Self::new(means, MODE_STD, &weights).expect("ring spec is valid")
    }

    /// Grid: 5x5 centers in `{-4,-2,0,2,4}²`, ordered column by column from
    /// the left (bottom to top within a column). The two leftmost columns
    /// (labels 0..9) are depleted.
    pub fn grid() -> Self {
        let offset = GRID_SPACING * (GRID_SIDE as f64 - 1.0) / 2.0;
        let mut means = Vec::with_capacity(GRID_SIDE * GRID_SIDE);
        for col in 0..GRID_SIDE {
            for row in 0..GRID_SIDE {
                means.push(vec![
                    GRID_SPACING * col as f64 - offset,
                    GRID_SPACING * row as f64 - offset,
                ]);
            }
        }
        let weights: Vec<f64> = (0..GRID_SIDE * GRID_SIDE)
            .map(|k| if k < GRID_MINORITY { DEPLETION_FACTOR } else { 1.0 })
            .collect();
        Self::new(means, MODE_STD, &weights).expect("grid spec is valid")
    }

    /// `0.9·N(0,1) + 0.05·N(10,1) + 0.05·N(-10,1)`.
    pub fn motivating_1d() -> Self {
        Self::new(
            vec![vec![0.0], vec![10.0], vec![-10.0]],
            1.0,
            &[0.9, 0.05, 0.05],
        )
        .expect("1d spec is valid")
    }

    /// Draws `n` labelled points.
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> (Matrix, Vec<usize>) {
        let modes = SamplingDistribution::new(self.weights.clone())
            .expect("mixture weights form a distribution");
        let dim = self.dim();
        let mut points = Matrix::zeros(n, dim);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let k = modes.draw(rng);
            labels.push(k);
            for (x, m) in points.row_mut(i).iter_mut().zip(&self.means[k]) {
                let z: f64 = StandardNormal.sample(rng);
                *x = m + self.sigma * z;
            }
        }
        (points, labels)
    }
}

/// Which benchmark a dataset was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Ring,
    Grid,
    Motivating1d,
}

impl DatasetKind {
    pub fn spec(self) -> MixtureSpec {
        match self {
            DatasetKind::Ring => MixtureSpec::ring(),
            DatasetKind::Grid => MixtureSpec::grid(),
            DatasetKind::Motivating1d => MixtureSpec::motivating_1d(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::Ring => "ring",
            DatasetKind::Grid => "grid",
            DatasetKind::Motivating1d => "1d-motivating",
        }
    }
}

impl std::str::FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ring" => Ok(DatasetKind::Ring),
            "grid" => Ok(DatasetKind::Grid),
            "1d-motivating" | "1d" => Ok(DatasetKind::Motivating1d),
            other => Err(Error::Parameter(format!("unknown dataset '{other}'"))),
        }
    }
}

/// Labelled sample from a [`MixtureSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub points: Matrix,
    /// Zero-based mode index of every point.
    pub labels: Vec<usize>,
    pub spec: MixtureSpec,
    pub seed: u64,
}

impl Dataset {
    pub fn generate(spec: MixtureSpec, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("dataset size must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (points, labels) = spec.sample(n, &mut rng);
        Ok(Self {
            points,
            labels,
            spec,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.rows() == 0
    }

    pub fn mode_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.spec.n_modes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

pub fn make_ring(n: usize, seed: u64) -> Result<Dataset> {
    Dataset::generate(MixtureSpec::ring(), n, seed)
}

pub fn make_grid(n: usize, seed: u64) -> Result<Dataset> {
    Dataset::generate(MixtureSpec::grid(), n, seed)
}

pub fn make_1d_motivating(n: usize, seed: u64) -> Result<Dataset> {
    Dataset::generate(MixtureSpec::motivating_1d(), n, seed)
}

pub fn make_dataset(kind: DatasetKind, n: usize, seed: u64) -> Result<Dataset> {
    Dataset::generate(kind.spec(), n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frequencies(d: &Dataset) -> Vec<f64> {
        d.mode_counts()
            .iter()
            .map(|&c| c as f64 / d.len() as f64)
            .collect()
    }

    #[test]
    fn ring_geometry_and_weights() {
        let spec = MixtureSpec::ring();
        let last = &spec.means[7];
        assert!((last[0] - 2.5).abs() < 1e-12 && last[1].abs() < 1e-12);
        for m in &spec.means {
            assert!((m[0].hypot(m[1]) - RING_RADIUS).abs() <= 1e-12);
        }
        assert!((spec.weights[0] / spec.weights[7] - 0.05).abs() < 1e-15);
        assert!((spec.weights[0] - 0.05 / 4.2).abs() < 1e-15);
        assert!((spec.weights[4] - 1.0 / 4.2).abs() < 1e-15);
    }

    #[test]
    fn grid_geometry_and_weights() {
        let spec = MixtureSpec::grid();
        assert_eq!(spec.n_modes(), 25);
        assert!(spec.means.contains(&vec![-4.0, -4.0]));
        assert!(spec.means.contains(&vec![4.0, 4.0]));
        for k in 0..10 {
            assert!(spec.means[k][0] <= -2.0);
            assert!((spec.weights[k] / spec.weights[24] - 0.05).abs() < 1e-15);
        }
        for k in 10..25 {
            assert!(spec.means[k][0] >= 0.0);
        }
    }

    #[test]
    fn motivating_mixture_parameters() {
        let spec = MixtureSpec::motivating_1d();
        assert_eq!(spec.weights, vec![0.9, 0.05, 0.05]);
        assert_eq!(spec.means, vec![vec![0.0], vec![10.0], vec![-10.0]]);
        assert_eq!(spec.sigma, 1.0);
    }

    #[test]
    fn ring_frequencies_converge() {
        let d = make_ring(1_000_000, 1).unwrap();
        for (f, w) in frequencies(&d).iter().zip(&d.spec.weights) {
            assert!((f - w).abs() <= 0.002, "{f} vs {w}");
        }
    }

    #[test]
    fn grid_frequencies_converge() {
        let d = make_grid(1_000_000, 2).unwrap();
        for (f, w) in frequencies(&d).iter().zip(&d.spec.weights) {
            assert!((f - w).abs() <= 0.002, "{f} vs {w}");
        }
    }

    #[test]
    fn motivating_mean_is_near_zero() {
        let n = 100_000;
        let d = make_1d_motivating(n, 3).unwrap();
        let mean = d.points.as_slice().iter().sum::<f64>() / n as f64;
        // mixture variance: 0.9·1 + 0.1·(1 + 100) = 11
        let sd_mean = (11.0f64 / n as f64).sqrt();
        assert!(mean.abs() <= 3.0 * sd_mean, "{mean}");
        assert_eq!(d.mode_counts().len(), 3);
    }

    #[test]
    fn per_mode_std_matches() {
        let d = make_ring(50_000, 4).unwrap();
        for k in 0..RING_MODES {
            let pts: Vec<&[f64]> = (0..d.len())
                .filter(|&i| d.labels[i] == k)
                .map(|i| d.points.row(i))
                .collect();
            if pts.len() < 1000 {
                continue;
            }
            let m = &d.spec.means[k];
            let var = pts
                .iter()
                .map(|p| (p[0] - m[0]).powi(2) + (p[1] - m[1]).powi(2))
                .sum::<f64>()
                / (2.0 * pts.len() as f64);
            assert!((var.sqrt() / MODE_STD - 1.0).abs() <= 0.05);
        }
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        assert_eq!(make_grid(500, 9).unwrap(), make_grid(500, 9).unwrap());
        assert_ne!(make_grid(500, 9).unwrap().points, make_grid(500, 10).unwrap().points);
    }

    #[test]
    fn invalid_specs() {
        assert!(make_ring(0, 1).is_err());
        assert!(MixtureSpec::new(vec![vec![0.0]], 0.0, &[1.0]).is_err());
        assert!(MixtureSpec::new(vec![vec![0.0]], 1.0, &[1.0, 2.0]).is_err());
        assert!("moon".parse::<DatasetKind>().is_err());
    }
}
