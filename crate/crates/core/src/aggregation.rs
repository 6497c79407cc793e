//! Robust vector averaging in `R^m`.
//!
//! SNAP estimators weight each point by its agreement weight and then solve
//! either the weighted `l2` problem (a weighted geometric median, computed by
//! Weiszfeld iteration) or the weighted `l2²` problem, whose solution is the
//! weighted mean. The unweighted baselines are here too.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dist, sq_dist};
use crate::metrics::{pairwise_matrix, Dataset, Metric};
use crate::stats;
use crate::weights::{agreement_weights, KernelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeiszfeldConfig {
    pub max_iters: usize,
    /// Stop once an update moves the iterate less than this.
    pub tol: f64,
    /// Lower clamp for point-to-iterate distances.
    pub singularity_eps: f64,
}

impl Default for WeiszfeldConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-9,
            singularity_eps: 1e-12,
        }
    }
}

impl WeiszfeldConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || !(self.tol > 0.0) || !(self.singularity_eps > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "invalid Weiszfeld config {self:?}"
            )));
        }
        Ok(())
    }
}

/// Block-count rule for median of means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MomRule {
    /// `ceil(8 ln(1/0.05)) = 24` blocks.
    Blocks95,
    /// `floor(sqrt(n))` blocks.
    BlocksSqrt,
}

impl MomRule {
    pub fn block_count(self, n: usize) -> usize {
        let k = match self {
            MomRule::Blocks95 => (8.0 * (1.0f64 / 0.05).ln()).ceil() as usize,
            MomRule::BlocksSqrt => (n as f64).sqrt().floor() as usize,
        };
        k.clamp(1, n.max(1))
    }
}

/// How to aggregate a set of vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AggregationMethod {
    Mean,
    /// Unweighted geometric median.
    Weiszfeld,
    ComponentMedian,
    MedianOfMeans(MomRule),
    /// Agreement-weighted mean, the `l2²` estimator.
    WeightedMean {
        spec: KernelSpec,
        metric: Metric,
    },
    /// Agreement-weighted geometric median, the `l2` estimator.
    WeightedWeiszfeld {
        spec: KernelSpec,
        metric: Metric,
    },
}

impl AggregationMethod {
    /// SNAP `l2`: Euclidean disagreement and weighted geometric median.
    pub fn snap_l2(spec: KernelSpec) -> Self {
        AggregationMethod::WeightedWeiszfeld {
            spec,
            metric: Metric::Euclidean,
        }
    }

    /// SNAP `l2²`: Euclidean disagreement and weighted mean. The `l2²`
    /// names the averaging objective; weights from squared distances are
    /// available through [`AggregationMethod::WeightedMean`] directly.
    pub fn snap_l2sq(spec: KernelSpec) -> Self {
        AggregationMethod::WeightedMean {
            spec,
            metric: Metric::Euclidean,
        }
    }

    pub fn kernel_spec(&self) -> Option<KernelSpec> {
        match self {
            AggregationMethod::WeightedMean { spec, .. }
            | AggregationMethod::WeightedWeiszfeld { spec, .. } => Some(*spec),
            _ => None,
        }
    }
}

impl fmt::Display for AggregationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregationMethod::Mean => f.write_str("mean"),
            AggregationMethod::Weiszfeld => f.write_str("weiszfeld"),
            AggregationMethod::ComponentMedian => f.write_str("comp-median"),
            AggregationMethod::MedianOfMeans(MomRule::Blocks95) => f.write_str("mom95"),
            AggregationMethod::MedianOfMeans(MomRule::BlocksSqrt) => f.write_str("mom-sqrt"),
            AggregationMethod::WeightedMean { spec, metric } => {
                write!(f, "snap-mean[{metric}]-{spec}")
            }
            AggregationMethod::WeightedWeiszfeld { spec, metric } => {
                write!(f, "snap-weiszfeld[{metric}]-{spec}")
            }
        }
    }
}

fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    let dim = points.first().ok_or(Error::Empty)?.len();
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
    }
    Ok(dim)
}

fn check_weights(points: &[Vec<f64>], w: &[f64]) -> Result<usize> {
    let dim = check_points(points)?;
    if w.len() != points.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: w.len(),
        });
    }
    Ok(dim)
}

/// `Σ w_i x_i`.
pub fn weighted_mean(points: &[Vec<f64>], w: &[f64]) -> Result<Vec<f64>> {
    let dim = check_weights(points, w)?;
    let mut out = vec![0.0; dim];
    for (p, &wi) in points.iter().zip(w) {
        for (o, x) in out.iter_mut().zip(p) {
            *o += wi * x;
        }
    }
    Ok(out)
}

pub fn mean(points: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = points.len();
    weighted_mean(points, &vec![1.0 / n.max(1) as f64; n])
}

/// Outcome of a Weiszfeld run, with the objective recorded at every iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct WeiszfeldRun {
    pub estimate: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `Σ w_i ||x_i - x||` at the start point and after every update.
    pub objectives: Vec<f64>,
}

pub fn weighted_objective(points: &[Vec<f64>], w: &[f64], x: &[f64]) -> f64 {
    points.iter().zip(w).map(|(p, wi)| wi * dist(p, x)).sum()
}

/// Weighted Weiszfeld iteration started from the weighted mean.
pub fn weiszfeld_run(
    points: &[Vec<f64>],
    w: &[f64],
    cfg: &WeiszfeldConfig,
) -> Result<WeiszfeldRun> {
    cfg.validate()?;
    let dim = check_weights(points, w)?;
    let mut x = weighted_mean(points, w)?;
    let mut objectives = vec![weighted_objective(points, w, &x)];
    let mut next = vec![0.0; dim];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        iterations += 1;
        next.iter_mut().for_each(|v| *v = 0.0);
        let mut denom = 0.0;
        for (p, &wi) in points.iter().zip(w) {
            if wi == 0.0 {
                continue;
            }
            let c = wi / dist(p, &x).max(cfg.singularity_eps);
            denom += c;
            for (nv, pv) in next.iter_mut().zip(p) {
                *nv += c * pv;
            }
        }
        if denom == 0.0 {
            converged = true;
            break;
        }
        next.iter_mut().for_each(|v| *v /= denom);
        let step = dist(&next, &x);
        std::mem::swap(&mut x, &mut next);
        objectives.push(weighted_objective(points, w, &x));
        if step < cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(WeiszfeldRun {
        estimate: x,
        iterations,
        converged,
        objectives,
    })
}

/// Weighted geometric median `argmin Σ w_i ||x_i - x||`.
pub fn weighted_weiszfeld(
    points: &[Vec<f64>],
    w: &[f64],
    cfg: &WeiszfeldConfig,
) -> Result<Vec<f64>> {
    Ok(weiszfeld_run(points, w, cfg)?.estimate)
}

/// Unweighted geometric median.
pub fn geometric_median(points: &[Vec<f64>], cfg: &WeiszfeldConfig) -> Result<Vec<f64>> {
    let n = points.len();
    weighted_weiszfeld(points, &vec![1.0 / n.max(1) as f64; n], cfg)
}

/// Coordinate-wise median.
pub fn component_median(points: &[Vec<f64>]) -> Result<Vec<f64>> {
    let dim = check_points(points)?;
    let mut column = vec![0.0; points.len()];
    Ok((0..dim)
        .map(|d| {
            for (c, p) in column.iter_mut().zip(points) {
                *c = p[d];
            }
            stats::median(&column).expect("non-empty")
        })
        .collect())
}

/// Median of means: random near-equal blocks, one mean per block, then the
/// geometric median of the block means.
pub fn median_of_means(
    points: &[Vec<f64>],
    rule: MomRule,
    seed: u64,
    cfg: &WeiszfeldConfig,
) -> Result<Vec<f64>> {
    check_points(points)?;
    let n = points.len();
    let k = rule.block_count(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let (base, extra) = (n / k, n % k);
    let mut means = Vec::with_capacity(k);
    let mut start = 0;
    for b in 0..k {
        let len = base + usize::from(b < extra);
        let block: Vec<Vec<f64>> = order[start..start + len]
            .iter()
            .map(|&i| points[i].clone())
            .collect();
        means.push(mean(&block)?);
        start += len;
    }
    geometric_median(&means, cfg)
}

/// Runs `method` on `points`. `seed` only matters for median of means.
///
/// ```
/// use snap::aggregation::{snap_average, AggregationMethod, WeiszfeldConfig};
/// use snap::weights::KernelSpec;
///
/// let points = vec![vec![0.0], vec![0.1], vec![0.2], vec![10.0]];
/// let est = snap_average(
///     &points,
///     &AggregationMethod::snap_l2sq(KernelSpec::LAPLACE_MAD),
///     &WeiszfeldConfig::default(),
///     0,
/// )
/// .unwrap();
/// assert!(est[0] < 0.2);
/// ```
pub fn snap_average(
    points: &[Vec<f64>],
    method: &AggregationMethod,
    cfg: &WeiszfeldConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    match *method {
        AggregationMethod::Mean => mean(points),
        AggregationMethod::Weiszfeld => geometric_median(points, cfg),
        AggregationMethod::ComponentMedian => component_median(points),
        AggregationMethod::MedianOfMeans(rule) => median_of_means(points, rule, seed, cfg),
        AggregationMethod::WeightedMean { spec, metric } => {
            let w = snap_weights_for(points, spec, metric)?;
            weighted_mean(points, &w)
        }
        AggregationMethod::WeightedWeiszfeld { spec, metric } => {
            let w = snap_weights_for(points, spec, metric)?;
            weighted_weiszfeld(points, &w, cfg)
        }
    }
}

/// Agreement weights of vector data under a Euclidean-family metric.
pub fn snap_weights_for(points: &[Vec<f64>], spec: KernelSpec, metric: Metric) -> Result<Vec<f64>> {
    if !matches!(metric, Metric::Euclidean | Metric::SquaredEuclidean) {
        return Err(Error::InvalidArgument(format!(
            "vector weights need euclidean or sq-euclidean, got {metric}"
        )));
    }
    let data = Dataset::vectors(points.to_vec())?;
    Ok(agreement_weights(&pairwise_matrix(&data, metric)?, spec).into_vec())
}

/// Both sides of the deterministic deviation bound for the weighted mean
/// around the inlier mean `μ_I`:
/// `||x̄ - μ_I|| <= w_max Σ_I ||x_i - μ_I|| + Σ_O w_i ||x_i - μ_I||`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub inlier_term: f64,
    pub outlier_term: f64,
    pub holds: bool,
}

pub fn bound_check(points: &[Vec<f64>], w: &[f64], inlier_mask: &[bool]) -> Result<BoundCheck> {
    check_weights(points, w)?;
    let inliers = inlier_points(points, inlier_mask)?;
    let mu = mean(&inliers)?;
    let estimate = weighted_mean(points, w)?;
    let lhs = dist(&estimate, &mu);
    let w_max = w
        .iter()
        .zip(inlier_mask)
        .filter(|(_, &m)| m)
        .map(|(&wi, _)| wi)
        .fold(0.0, f64::max);
    let mut inlier_sum = 0.0;
    let mut outlier_term = 0.0;
    for ((p, &wi), &is_in) in points.iter().zip(w).zip(inlier_mask) {
        let r = dist(p, &mu);
        if is_in {
            inlier_sum += r;
        } else {
            outlier_term += wi * r;
        }
    }
    let inlier_term = w_max * inlier_sum;
    let rhs = inlier_term + outlier_term;
    Ok(BoundCheck {
        lhs,
        rhs,
        inlier_term,
        outlier_term,
        holds: lhs <= rhs + 1e-9,
    })
}

/// Gap between the full and the inlier-only weighted risk at `theta`, for the
/// squared loss, against `max_O w_i · Σ_O L(x_i, θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskGapCheck {
    pub gap: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn risk_gap_check(
    points: &[Vec<f64>],
    w: &[f64],
    inlier_mask: &[bool],
    theta: &[f64],
) -> Result<RiskGapCheck> {
    check_weights(points, w)?;
    if inlier_mask.len() != points.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: inlier_mask.len(),
        });
    }
    let loss: Vec<f64> = points.iter().map(|p| sq_dist(p, theta)).collect();
    let full: f64 = loss.iter().zip(w).map(|(l, wi)| l * wi).sum();
    let inlier: f64 = loss
        .iter()
        .zip(w)
        .zip(inlier_mask)
        .filter(|(_, &m)| m)
        .map(|((l, wi), _)| l * wi)
        .sum();
    let outliers = || loss.iter().zip(w).zip(inlier_mask).filter(|(_, &m)| !m);
    let w_max_out = outliers().map(|((_, &wi), _)| wi).fold(0.0, f64::max);
    let bound = w_max_out * outliers().map(|((l, _), _)| l).sum::<f64>();
    let gap = (full - inlier).abs();
    Ok(RiskGapCheck {
        gap,
        bound,
        holds: gap <= bound * (1.0 + 1e-12) + 1e-12,
    })
}

fn inlier_points(points: &[Vec<f64>], inlier_mask: &[bool]) -> Result<Vec<Vec<f64>>> {
    if inlier_mask.len() != points.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: inlier_mask.len(),
        });
    }
    let inliers: Vec<Vec<f64>> = points
        .iter()
        .zip(inlier_mask)
        .filter(|(_, &m)| m)
        .map(|(p, _)| p.clone())
        .collect();
    if inliers.is_empty() {
        return Err(Error::InvalidArgument("inlier set is empty".into()));
    }
    Ok(inliers)
}

/// Arithmetic mean of the points flagged as inliers.
pub fn inlier_mean(points: &[Vec<f64>], inlier_mask: &[bool]) -> Result<Vec<f64>> {
    mean(&inlier_points(points, inlier_mask)?)
}
