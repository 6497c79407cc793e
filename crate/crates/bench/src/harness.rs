//! Seeded reproductions of the averaging, PCA and smoothing tables, and the
//! weight-computation scaling benchmark.
//!
//! Trials run in parallel but every per-trial result is collected in trial
//! order before it is summed, so a report is a pure function of its seed.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use snap::aggregation::{
    component_median, geometric_median, inlier_mean, mean, median_of_means, weighted_mean,
    weighted_weiszfeld, MomRule, WeiszfeldConfig,
};
use snap::datagen::{
    gen_pca, gen_timeseries, gen_vector_avg, pca_true_component, ExperimentConfig, SampleStream,
};
use snap::metrics::{pairwise_matrix, Dataset, Metric};
use snap::stats::rmse;
use snap::subspace::{angle_error, pca, projection_error, weighted_pca};
use snap::timeseries::{ema, snap_moving_average, SmoothingConfig};
use snap::weights::{agreement_weights, KernelSpec};

pub const OUTLIER_FRACS: [f64; 5] = [0.10, 0.20, 0.30, 0.40, 0.49];
pub const ALPHAS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// One table cell: the mean of an error over all trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// Sub-table, e.g. `dim=2`, `angle`, `rmse`.
    pub group: String,
    pub method: String,
    /// Outlier fraction or smoothing factor.
    pub param: f64,
    pub mean_error: f64,
    /// Summed wall-clock time of the method over all trials.
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub experiment: String,
    pub seed: u64,
    pub trials: usize,
    pub cells: Vec<Cell>,
}

impl BenchReport {
    pub fn get(&self, group: &str, method: &str, param: f64) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.group == group && c.method == method && (c.param - param).abs() < 1e-9)
            .map(|c| c.mean_error)
    }

    pub fn methods(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.method.as_str()) {
                out.push(&c.method);
            }
        }
        out
    }
}

pub fn dim_group(dim: usize) -> String {
    format!("dim={dim}")
}

/// Labels of the eight SNAP averaging variants, `l2` first.
pub fn snap_avg_labels() -> Vec<String> {
    ["snap-l2", "snap-l2sq"]
        .iter()
        .flat_map(|p| KernelSpec::ALL.iter().map(move |k| format!("{p}/{k}")))
        .collect()
}

pub const VECTOR_BASELINES: [&str; 6] = [
    "inlier-mean",
    "mean",
    "weiszfeld",
    "comp-median",
    "mom95",
    "mom-sqrt",
];

/// One timed error per method.
type TimedRow = Vec<Timed<f64>>;

struct Timed<T> {
    value: T,
    elapsed: Duration,
}

fn timed<T>(f: impl FnOnce() -> T) -> Timed<T> {
    let start = Instant::now();
    let value = f();
    Timed {
        value,
        elapsed: start.elapsed(),
    }
}

fn trial_seed(seed: u64, trial: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ trial.wrapping_add(1)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Per-trial errors of `method_count` methods, reduced to one cell each.
fn reduce_cells(
    group: &str,
    param: f64,
    labels: &[String],
    per_trial: &[Vec<Timed<f64>>],
) -> Vec<Cell> {
    labels
        .iter()
        .enumerate()
        .map(|(m, label)| {
            let sum: f64 = per_trial.iter().map(|t| t[m].value).sum();
            let wall: Duration = per_trial.iter().map(|t| t[m].elapsed).sum();
            Cell {
                group: group.to_string(),
                method: label.clone(),
                param,
                mean_error: sum / per_trial.len() as f64,
                wall_seconds: wall.as_secs_f64(),
            }
        })
        .collect()
}

/// Vector averaging: distance of each estimate to the true mean `0`.
///
/// Both SNAP estimators share one set of Euclidean agreement weights.
pub fn run_vector_avg(seed: u64, trials: usize, dims: &[usize], fracs: &[f64]) -> BenchReport {
    let cfg = WeiszfeldConfig::default();
    let mut labels: Vec<String> = VECTOR_BASELINES.iter().map(|s| s.to_string()).collect();
    labels.extend(snap_avg_labels());

    let mut cells = Vec::new();
    for &dim in dims {
        for &frac in fracs {
            let exp = ExperimentConfig::vector_avg(dim, frac, seed).with_trials(trials);
            let per_trial: Vec<Vec<Timed<f64>>> = (0..trials as u64)
                .into_par_iter()
                .map(|trial| {
                    let data = gen_vector_avg(&exp, trial);
                    let pts = &data.points;
                    let mom_seed = trial_seed(seed, trial);
                    let err = |f: &dyn Fn() -> Vec<f64>| {
                        let t = timed(f);
                        Timed {
                            value: norm(&t.value),
                            elapsed: t.elapsed,
                        }
                    };
                    let mut row = vec![
                        err(&|| inlier_mean(pts, &data.inlier_mask).unwrap()),
                        err(&|| mean(pts).unwrap()),
                        err(&|| geometric_median(pts, &cfg).unwrap()),
                        err(&|| component_median(pts).unwrap()),
                        err(&|| median_of_means(pts, MomRule::Blocks95, mom_seed, &cfg).unwrap()),
                        err(&|| median_of_means(pts, MomRule::BlocksSqrt, mom_seed, &cfg).unwrap()),
                    ];
                    let dataset = Dataset::vectors(pts.clone()).unwrap();
                    let dist = timed(|| pairwise_matrix(&dataset, Metric::Euclidean).unwrap());
                    let share = dist.elapsed / (2 * KernelSpec::ALL.len()) as u32;
                    let weights: Vec<Timed<Vec<f64>>> = KernelSpec::ALL
                        .iter()
                        .map(|&spec| timed(|| agreement_weights(&dist.value, spec).into_vec()))
                        .collect();
                    for weighted_median in [true, false] {
                        for w in &weights {
                            let mut t = err(&|| {
                                if weighted_median {
                                    weighted_weiszfeld(pts, &w.value, &cfg).unwrap()
                                } else {
                                    weighted_mean(pts, &w.value).unwrap()
                                }
                            });
                            t.elapsed += share + w.elapsed / 2;
                            row.push(t);
                        }
                    }
                    row
                })
                .collect();
            cells.extend(reduce_cells(&dim_group(dim), frac, &labels, &per_trial));
        }
    }
    BenchReport {
        experiment: "vector-avg".into(),
        seed,
        trials,
        cells,
    }
}

pub fn snap_single_labels() -> Vec<String> {
    KernelSpec::ALL
        .iter()
        .map(|k| format!("snap/{k}"))
        .collect()
}

/// PCA: angle to the true first component and projection distance to PCA
/// fitted on the inlier sample.
pub fn run_pca(seed: u64, trials: usize, fracs: &[f64]) -> BenchReport {
    let truth = pca_true_component();
    let mut labels = vec!["pca".to_string()];
    labels.extend(snap_single_labels());

    let mut cells = Vec::new();
    for &frac in fracs {
        let exp = ExperimentConfig::pca(frac, seed).with_trials(trials);
        let per_trial: Vec<(TimedRow, TimedRow)> = (0..trials as u64)
            .into_par_iter()
            .map(|trial| {
                let data = gen_pca(&exp, trial);
                let reference = pca(&data.inliers(), 1).unwrap();
                let mut fits = vec![timed(|| pca(&data.points, 1).unwrap())];
                let dataset = Dataset::vectors(data.points.clone()).unwrap();
                let dist = timed(|| pairwise_matrix(&dataset, Metric::Euclidean).unwrap());
                let share = dist.elapsed / KernelSpec::ALL.len() as u32;
                for spec in KernelSpec::ALL {
                    let mut fit = timed(|| {
                        let w = agreement_weights(&dist.value, spec);
                        weighted_pca(&data.points, &w, 1).unwrap()
                    });
                    fit.elapsed += share;
                    fits.push(fit);
                }
                let angles = fits
                    .iter()
                    .map(|f| Timed {
                        value: angle_error(&f.value.first_component(), &truth).unwrap(),
                        elapsed: f.elapsed,
                    })
                    .collect();
                let projs = fits
                    .iter()
                    .map(|f| Timed {
                        value: projection_error(&f.value.basis, &reference.basis).unwrap(),
                        elapsed: f.elapsed,
                    })
                    .collect();
                (angles, projs)
            })
            .collect();
        let (angles, projs): (Vec<_>, Vec<_>) = per_trial.into_iter().unzip();
        cells.extend(reduce_cells("angle", frac, &labels, &angles));
        cells.extend(reduce_cells("proj", frac, &labels, &projs));
    }
    BenchReport {
        experiment: "pca".into(),
        seed,
        trials,
        cells,
    }
}

/// Smoothing: RMSE of the smoothed noisy sine against the clean sine.
pub fn run_moving_avg(seed: u64, trials: usize, alphas: &[f64]) -> BenchReport {
    let exp = ExperimentConfig::moving_avg(seed).with_trials(trials);
    let mut labels = vec!["ema".to_string()];
    labels.extend(snap_single_labels());

    let series: Vec<_> = (0..trials as u64)
        .map(|t| gen_timeseries(&exp, t))
        .collect();
    let mut cells = Vec::new();
    for &alpha in alphas {
        let per_trial: Vec<Vec<Timed<f64>>> = series
            .par_iter()
            .map(|s| {
                let mut row = vec![timed(|| rmse(&ema(&s.noisy, alpha).unwrap(), &s.truth))];
                for spec in KernelSpec::ALL {
                    let cfg = SmoothingConfig::new(alpha, spec).unwrap();
                    row.push(timed(|| {
                        rmse(&snap_moving_average(&s.noisy, &cfg).unwrap(), &s.truth)
                    }));
                }
                row
            })
            .collect();
        cells.extend(reduce_cells("rmse", alpha, &labels, &per_trial));
    }
    BenchReport {
        experiment: "moving-avg".into(),
        seed,
        trials,
        cells,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSeries {
    /// `vectors` or `rankings`.
    pub kind: String,
    /// Vector dimension or ranking length.
    pub size: usize,
    pub n: Vec<usize>,
    pub seconds: Vec<f64>,
    /// Least-squares slope of `ln seconds` against `ln n`.
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub series: Vec<ScalingSeries>,
}

/// `100, 200, 400, ...` up to and including `max_n`.
pub fn scaling_grid(max_n: usize) -> Vec<usize> {
    let mut grid = Vec::new();
    let mut n = 100;
    while n < max_n {
        grid.push(n);
        n *= 2;
    }
    grid.push(max_n);
    grid
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Best-of-`repeats` wall-clock time of one full weight computation.
pub fn time_weights(data: &Dataset, metric: Metric, repeats: usize) -> f64 {
    (0..repeats.max(1))
        .map(|_| {
            let start = Instant::now();
            let dist = pairwise_matrix(data, metric).unwrap();
            let w = agreement_weights(&dist, KernelSpec::LAPLACE_MAD);
            std::hint::black_box(w);
            start.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn random_vectors(n: usize, dim: usize, seed: u64) -> Dataset {
    let mut s = SampleStream::new(seed, 0);
    Dataset::vectors(
        (0..n)
            .map(|_| (0..dim).map(|_| s.normal()).collect())
            .collect(),
    )
    .unwrap()
}

pub fn random_rankings(n: usize, len: usize, seed: u64) -> Dataset {
    use rand::seq::SliceRandom;
    let mut s = SampleStream::new(seed, 1);
    let perms = (0..n)
        .map(|_| {
            let mut p: Vec<usize> = (0..len).collect();
            p.shuffle(s.rng());
            p
        })
        .collect();
    Dataset::rankings(perms).unwrap()
}

/// Times weight computation over [`scaling_grid`] for each vector dimension
/// (Euclidean) and ranking length (Kendall tau).
pub fn run_scaling(
    max_n: usize,
    dims: &[usize],
    ranking_lengths: &[usize],
    seed: u64,
) -> ScalingReport {
    let grid = scaling_grid(max_n);
    let mut series = Vec::new();
    let mut measure = |kind: &str, size: usize, make: &dyn Fn(usize) -> Dataset, metric: Metric| {
        let seconds: Vec<f64> = grid
            .iter()
            .map(|&n| time_weights(&make(n), metric, 3))
            .collect();
        let x: Vec<f64> = grid.iter().map(|&n| n as f64).collect();
        series.push(ScalingSeries {
            kind: kind.into(),
            size,
            n: grid.clone(),
            slope: log_log_slope(&x, &seconds),
            seconds,
        });
    };
    for &dim in dims {
        measure(
            "vectors",
            dim,
            &|n| random_vectors(n, dim, seed),
            Metric::Euclidean,
        );
    }
    for &len in ranking_lengths {
        measure(
            "rankings",
            len,
            &|n| random_rankings(n, len, seed),
            Metric::KendallTau,
        );
    }
    ScalingReport { series }
}
