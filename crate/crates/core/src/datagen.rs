//! Seeded synthetic benchmarks.
//!
//! Every generator is a pure function of `(seed, trial)`. The random source
//! is ChaCha8 keyed by `seed` (expanded with `SeedableRng::seed_from_u64`)
//! with the trial index as the stream id, so trials are independent and can
//! be generated in any order. Uniforms are 53-bit floats in `[0, 1)`;
//! normals come from Box-Muller, consuming uniforms in pairs and using both
//! outputs in order. Points are drawn inliers first, then outliers, one
//! coordinate after another.

use std::f64::consts::PI;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Experiment {
    VectorAvg,
    Pca,
    MovingAvg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n: usize,
    pub dim: usize,
    pub outlier_frac: f64,
    pub trials: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    /// 200 points in `R^dim`.
    pub fn vector_avg(dim: usize, outlier_frac: f64, seed: u64) -> Self {
        Self {
            experiment: Experiment::VectorAvg,
            n: 200,
            dim,
            outlier_frac,
            trials: 100,
            seed,
        }
    }

    /// 500 points in `R^2`.
    pub fn pca(outlier_frac: f64, seed: u64) -> Self {
        Self {
            experiment: Experiment::Pca,
            n: 500,
            dim: 2,
            outlier_frac,
            trials: 100,
            seed,
        }
    }

    /// 200 samples of a sine wave, 10% of them spiked.
    pub fn moving_avg(seed: u64) -> Self {
        Self {
            experiment: Experiment::MovingAvg,
            n: 200,
            dim: 1,
            outlier_frac: 0.1,
            trials: 100,
            seed,
        }
    }

    pub fn with_n(self, n: usize) -> Self {
        Self { n, ..self }
    }

    pub fn with_trials(self, trials: usize) -> Self {
        Self { trials, ..self }
    }

    /// `round(frac · n)`, halves rounding up.
    pub fn outlier_count(&self) -> usize {
        ((self.outlier_frac * self.n as f64 + 0.5).floor() as usize).min(self.n)
    }

    pub fn inlier_count(&self) -> usize {
        self.n - self.outlier_count()
    }
}

/// The random source shared by all generators.
pub struct SampleStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl SampleStream {
    pub fn new(seed: u64, trial: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        Self { rng, spare: None }
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - u lies in (0, 1], keeping the logarithm finite
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Points with ground-truth inlier flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoints {
    pub points: Vec<Vec<f64>>,
    pub inlier_mask: Vec<bool>,
}

impl LabeledPoints {
    fn new(inliers: Vec<Vec<f64>>, outliers: Vec<Vec<f64>>) -> Self {
        let inlier_mask = std::iter::repeat_n(true, inliers.len())
            .chain(std::iter::repeat_n(false, outliers.len()))
            .collect();
        let mut points = inliers;
        points.extend(outliers);
        Self {
            points,
            inlier_mask,
        }
    }

    pub fn inliers(&self) -> Vec<Vec<f64>> {
        self.points
            .iter()
            .zip(&self.inlier_mask)
            .filter(|(_, &m)| m)
            .map(|(p, _)| p.clone())
            .collect()
    }
}

/// Inliers from `N(0, I)`, outliers uniform on `[0, 10]^dim`.
pub fn gen_vector_avg(cfg: &ExperimentConfig, trial: u64) -> LabeledPoints {
    let mut s = SampleStream::new(cfg.seed, trial);
    let inliers = (0..cfg.inlier_count())
        .map(|_| (0..cfg.dim).map(|_| s.normal()).collect())
        .collect();
    let outliers = (0..cfg.outlier_count())
        .map(|_| (0..cfg.dim).map(|_| s.uniform_in(0.0, 10.0)).collect())
        .collect();
    LabeledPoints::new(inliers, outliers)
}

/// Leading eigenvector of the inlier covariance `[[2, 1], [1, 1]]`.
pub fn pca_true_component() -> [f64; 2] {
    let slope = (5f64.sqrt() - 1.0) / 2.0;
    let len = (1.0 + slope * slope).sqrt();
    [1.0 / len, slope / len]
}

/// Inliers from `N(0, [[2, 1], [1, 1]])`, outliers from `N((3, 8), 2I)`.
pub fn gen_pca(cfg: &ExperimentConfig, trial: u64) -> LabeledPoints {
    let mut s = SampleStream::new(cfg.seed, trial);
    // Cholesky factor of [[2, 1], [1, 1]]
    let l11 = 2f64.sqrt();
    let l21 = 1.0 / l11;
    let l22 = (1.0 - l21 * l21).sqrt();
    let inliers = (0..cfg.inlier_count())
        .map(|_| {
            let z1 = s.normal();
            let z2 = s.normal();
            vec![l11 * z1, l21 * z1 + l22 * z2]
        })
        .collect();
    let sd = 2f64.sqrt();
    let outliers = (0..cfg.outlier_count())
        .map(|_| {
            let z1 = s.normal();
            let z2 = s.normal();
            vec![3.0 + sd * z1, 8.0 + sd * z2]
        })
        .collect();
    LabeledPoints::new(inliers, outliers)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisySeries {
    pub noisy: Vec<f64>,
    pub truth: Vec<f64>,
    /// Indices that received the extra spike noise, ascending.
    pub spiked: Vec<usize>,
}

/// `sin` on `n` equally spaced points spanning `[0, 2π]`, plus `N(0, 0.1²)`
/// everywhere and `N(0, 0.8²)` on a random `outlier_frac` share of indices.
pub fn gen_timeseries(cfg: &ExperimentConfig, trial: u64) -> NoisySeries {
    let mut s = SampleStream::new(cfg.seed, trial);
    let n = cfg.n;
    let step = if n > 1 {
        2.0 * PI / (n - 1) as f64
    } else {
        0.0
    };
    let truth: Vec<f64> = (0..n).map(|k| (k as f64 * step).sin()).collect();
    let mut noisy: Vec<f64> = truth.iter().map(|t| t + 0.1 * s.normal()).collect();
    let mut spiked = index::sample(s.rng(), n, cfg.outlier_count()).into_vec();
    spiked.sort_unstable();
    for &i in &spiked {
        noisy[i] += 0.8 * s.normal();
    }
    NoisySeries {
        noisy,
        truth,
        spiked,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn clean_config_has_only_inliers() {
        let d = gen_vector_avg(&ExperimentConfig::vector_avg(3, 0.0, 1), 0);
        assert_eq!(d.points.len(), 200);
        assert!(d.inlier_mask.iter().all(|&m| m));
    }

    #[test]
    fn generators_are_deterministic() {
        let cfg = ExperimentConfig::vector_avg(2, 0.2, 9);
        assert_eq!(gen_vector_avg(&cfg, 4), gen_vector_avg(&cfg, 4));
        assert_ne!(gen_vector_avg(&cfg, 4), gen_vector_avg(&cfg, 5));
        let p = ExperimentConfig::pca(0.3, 9);
        assert_eq!(gen_pca(&p, 1), gen_pca(&p, 1));
        let t = ExperimentConfig::moving_avg(9);
        assert_eq!(gen_timeseries(&t, 2), gen_timeseries(&t, 2));
    }

    #[test]
    fn outlier_split_and_range() {
        let d = gen_vector_avg(&ExperimentConfig::vector_avg(2, 0.30, 3), 0);
        assert_eq!(d.inlier_mask.iter().filter(|&&m| m).count(), 140);
        assert_eq!(d.inlier_mask.iter().filter(|&&m| !m).count(), 60);
        for (p, &m) in d.points.iter().zip(&d.inlier_mask) {
            if !m {
                assert!(p.iter().all(|&x| (0.0..=10.0).contains(&x)));
            }
        }
        assert_eq!(ExperimentConfig::vector_avg(2, 0.49, 0).outlier_count(), 98);
        assert_eq!(ExperimentConfig::pca(0.10, 0).inlier_count(), 450);
    }

    #[test]
    fn true_component_angle() {
        let [x, y] = pca_true_component();
        assert_relative_eq!(y.atan2(x).to_degrees(), 31.71747441146101, epsilon = 1e-10);
        assert_relative_eq!(x * x + y * y, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn pca_inlier_covariance_matches_parameter() {
        let cfg = ExperimentConfig::pca(0.0, 11).with_n(100_000);
        let d = gen_pca(&cfg, 0);
        let n = d.points.len() as f64;
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for p in &d.points {
            sxx += p[0] * p[0];
            sxy += p[0] * p[1];
            syy += p[1] * p[1];
        }
        assert!((sxx / n - 2.0).abs() < 0.05);
        assert!((sxy / n - 1.0).abs() < 0.05);
        assert!((syy / n - 1.0).abs() < 0.05);
    }

    #[test]
    fn sine_grid_and_spikes() {
        let cfg = ExperimentConfig::moving_avg(5);
        let s = gen_timeseries(&cfg, 0);
        assert_eq!(s.truth.len(), 200);
        assert!(s.truth[0].abs() < 1e-12);
        assert!(s.truth[199].abs() < 1e-12);
        assert_eq!(s.spiked.len(), 20);
    }

    #[test]
    fn base_noise_is_half_normal() {
        // E|N(0, 0.1²)| = 0.1 · sqrt(2/π)
        let cfg = ExperimentConfig::moving_avg(21);
        let (mut sum, mut count) = (0.0, 0usize);
        for trial in 0..100 {
            let s = gen_timeseries(&cfg, trial);
            for i in 0..s.noisy.len() {
                if s.spiked.binary_search(&i).is_err() {
                    sum += (s.noisy[i] - s.truth[i]).abs();
                    count += 1;
                }
            }
        }
        let expected = 0.1 * (2.0 / PI).sqrt();
        assert!((sum / count as f64 - expected).abs() < 0.005);
    }

    #[test]
    fn normals_have_unit_moments() {
        let mut s = SampleStream::new(3, 0);
        let z: Vec<f64> = (0..200_000).map(|_| s.normal()).collect();
        let m = z.iter().sum::<f64>() / z.len() as f64;
        let v = z.iter().map(|x| (x - m).powi(2)).sum::<f64>() / z.len() as f64;
        assert!(m.abs() < 0.01);
        assert!((v - 1.0).abs() < 0.01);
    }
}
