//! Disagreement scores and agreement weights.
//!
//! Every entity gets a disagreement score `Δ_i = D_i / D_a`, its summed
//! distance to all other entities divided by the sum over all pairs. The
//! scores are shifted so the set median (smallest score) sits at zero, then
//! pushed through a decreasing half-kernel whose scale is fitted from the
//! shifted scores themselves, and finally normalized onto the simplex.
//!
//! Nothing here has a tunable parameter: the kernel family and the scale
//! estimator are the only choices.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::metrics::DistanceMatrix;
use crate::stats;

/// Scales at or below this value are treated as zero.
pub const DEGENERATE_SCALE: f64 = 1e-12;

/// Consistency factor of the Laplacian scale `b` (both estimators).
#[allow(clippy::approx_constant)] // the rounded factor is the convention, not log2(e)
pub const LAPLACE_FACTOR: f64 = 1.4427;
/// Consistency factor of the half-Gaussian scale `σ` estimated from the MAD.
pub const GAUSS_MAD_FACTOR: f64 = 2.2631;
/// Consistency factor of the half-Gaussian scale `σ` estimated from the median.
pub const GAUSS_MED_FACTOR: f64 = 1.4826;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelFamily {
    /// `exp(-(Δ - Δ_sm) / b)`
    Laplacian,
    /// `exp(-(Δ - Δ_sm)² / (2σ²))`
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScaleRule {
    /// Median absolute deviation of the shifted scores.
    Mad,
    /// Median of the shifted scores.
    Med,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub scale_rule: ScaleRule,
}

impl KernelSpec {
    pub const LAPLACE_MAD: KernelSpec = KernelSpec::new(KernelFamily::Laplacian, ScaleRule::Mad);
    pub const LAPLACE_MED: KernelSpec = KernelSpec::new(KernelFamily::Laplacian, ScaleRule::Med);
    pub const GAUSS_MAD: KernelSpec = KernelSpec::new(KernelFamily::Gaussian, ScaleRule::Mad);
    pub const GAUSS_MED: KernelSpec = KernelSpec::new(KernelFamily::Gaussian, ScaleRule::Med);

    /// The four combinations, in table order.
    pub const ALL: [KernelSpec; 4] = [
        Self::LAPLACE_MAD,
        Self::LAPLACE_MED,
        Self::GAUSS_MAD,
        Self::GAUSS_MED,
    ];

    pub const fn new(family: KernelFamily, scale_rule: ScaleRule) -> Self {
        Self { family, scale_rule }
    }

    /// Short label such as `laplace-mad`.
    pub fn label(self) -> &'static str {
        match (self.family, self.scale_rule) {
            (KernelFamily::Laplacian, ScaleRule::Mad) => "laplace-mad",
            (KernelFamily::Laplacian, ScaleRule::Med) => "laplace-med",
            (KernelFamily::Gaussian, ScaleRule::Mad) => "gauss-mad",
            (KernelFamily::Gaussian, ScaleRule::Med) => "gauss-med",
        }
    }

    fn factor(self) -> f64 {
        match (self.family, self.scale_rule) {
            (KernelFamily::Laplacian, _) => LAPLACE_FACTOR,
            (KernelFamily::Gaussian, ScaleRule::Mad) => GAUSS_MAD_FACTOR,
            (KernelFamily::Gaussian, ScaleRule::Med) => GAUSS_MED_FACTOR,
        }
    }

    /// Kernel value at shifted score `delta_star = Δ - Δ_sm` for scale `s > 0`.
    pub fn kernel(self, delta_star: f64, s: f64) -> f64 {
        match self.family {
            KernelFamily::Laplacian => (-delta_star / s).exp(),
            KernelFamily::Gaussian => (-(delta_star * delta_star) / (2.0 * s * s)).exp(),
        }
    }

    /// Derivative of [`KernelSpec::kernel`] with respect to `Δ`.
    pub fn kernel_derivative(self, delta_star: f64, s: f64) -> f64 {
        let k = self.kernel(delta_star, s);
        match self.family {
            KernelFamily::Laplacian => -k / s,
            KernelFamily::Gaussian => -delta_star / (s * s) * k,
        }
    }
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self::LAPLACE_MAD
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown kernel spec `{s}`")))
    }
}

/// Normalized disagreement scores together with the sums they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisagreementScores {
    /// `Δ_i`, summing to one.
    pub delta: Vec<f64>,
    /// `D_i`, the row sums of the distance matrix.
    pub row_sums: Vec<f64>,
    /// `D_a`, the sum of all entries.
    pub total: f64,
}

impl DisagreementScores {
    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }

    /// Index and value of the smallest score. Ties go to the smallest index.
    pub fn set_median(&self) -> (usize, f64) {
        set_median(&self.delta)
    }
}

fn set_median(delta: &[f64]) -> (usize, f64) {
    let mut best = (0, delta[0]);
    for (i, &d) in delta.iter().enumerate().skip(1) {
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Row sums of `dist` normalized by their total. When every distance is
/// zero the scores fall back to `1/n`.
///
/// ```
/// use snap::metrics::{pairwise_matrix, Dataset, Metric};
/// use snap::weights::disagreement_scores;
///
/// let data = Dataset::scalars(vec![0.0, 1.0, 2.0]).unwrap();
/// let scores = disagreement_scores(&pairwise_matrix(&data, Metric::AbsoluteScalar).unwrap());
/// assert_eq!(scores.row_sums, vec![3.0, 2.0, 3.0]);
/// assert_eq!(scores.delta, vec![0.375, 0.25, 0.375]);
/// ```
pub fn disagreement_scores(dist: &DistanceMatrix) -> DisagreementScores {
    let n = dist.len();
    let row_sums: Vec<f64> = (0..n).map(|i| dist.row(i).iter().sum()).collect();
    let total: f64 = row_sums.iter().sum();
    let delta = if total > 0.0 {
        row_sums.iter().map(|d| d / total).collect()
    } else {
        vec![1.0 / n as f64; n]
    };
    DisagreementScores {
        delta,
        row_sums,
        total,
    }
}

/// Fitted kernel scale for `spec` from the shifted scores `Δ* = Δ - min Δ`.
pub fn robust_scale(scores: &DisagreementScores, spec: KernelSpec) -> f64 {
    robust_scale_of(&scores.delta, spec)
}

/// [`robust_scale`] on a bare score slice. Returns zero for empty input.
pub fn robust_scale_of(delta: &[f64], spec: KernelSpec) -> f64 {
    if delta.is_empty() {
        return 0.0;
    }
    let (_, delta_sm) = set_median(delta);
    let shifted: Vec<f64> = delta.iter().map(|d| d - delta_sm).collect();
    let spread = match spec.scale_rule {
        ScaleRule::Mad => stats::mad(&shifted),
        ScaleRule::Med => stats::median(&shifted),
    }
    .unwrap_or(0.0);
    spec.factor() * spread
}

/// Agreement weights on the simplex together with the fitted kernel state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub weights: Vec<f64>,
    /// Fitted `b` or `σ`.
    pub scale: f64,
    /// Score of the set median.
    pub delta_sm: f64,
    pub sm_index: usize,
}

impl WeightVector {
    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
            scale: 0.0,
            delta_sm: 1.0 / n as f64,
            sm_index: 0,
        }
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.weights
    }
}

impl Deref for WeightVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.weights
    }
}

/// Agreement weights for the entities behind `dist`.
///
/// ```
/// use snap::metrics::{pairwise_matrix, Dataset, Metric};
/// use snap::weights::{agreement_weights, KernelSpec};
///
/// let data = Dataset::scalars(vec![0.0, 0.1, 0.2, 10.0]).unwrap();
/// let dist = pairwise_matrix(&data, Metric::AbsoluteScalar).unwrap();
/// let w = agreement_weights(&dist, KernelSpec::LAPLACE_MAD);
/// assert!(w[3] < 1e-50);
/// assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
/// ```
pub fn agreement_weights(dist: &DistanceMatrix, spec: KernelSpec) -> WeightVector {
    weights_from_delta(&disagreement_scores(dist).delta, spec)
}

/// Agreement weights from already-normalized disagreement scores.
///
/// A vanishing scale is resolved by the kernel's limit: uniform weights when
/// all scores coincide, otherwise equal weight on the minimal-score set.
pub fn weights_from_delta(delta: &[f64], spec: KernelSpec) -> WeightVector {
    let n = delta.len();
    assert!(n > 0, "agreement weights of an empty set");
    let (sm_index, delta_sm) = set_median(delta);
    let scale = robust_scale_of(delta, spec);
    let shifted: Vec<f64> = delta.iter().map(|d| d - delta_sm).collect();

    let weights = if scale <= DEGENERATE_SCALE {
        let max_shift = shifted.iter().copied().fold(0.0, f64::max);
        if max_shift <= DEGENERATE_SCALE {
            vec![1.0 / n as f64; n]
        } else {
            let winners = shifted.iter().filter(|&&d| d <= DEGENERATE_SCALE).count();
            shifted
                .iter()
                .map(|&d| {
                    if d <= DEGENERATE_SCALE {
                        1.0 / winners as f64
                    } else {
                        0.0
                    }
                })
                .collect()
        }
    } else {
        normalize(shifted.iter().map(|&d| spec.kernel(d, scale)).collect())
    };

    WeightVector {
        weights,
        scale,
        delta_sm,
        sm_index,
    }
}

fn normalize(mut k: Vec<f64>) -> Vec<f64> {
    // the set median contributes exp(0) = 1, so the sum is at least one
    let total: f64 = k.iter().sum();
    for v in &mut k {
        *v /= total;
    }
    k
}

/// Analytic Jacobian `J[i][j] = ∂w_i/∂Δ_j` with the scale and the set-median
/// score held fixed at their fitted values.
pub fn jacobian(scores: &DisagreementScores, spec: KernelSpec) -> Result<Matrix> {
    let (_, delta_sm) = scores.set_median();
    jacobian_at(&scores.delta, spec, delta_sm, robust_scale(scores, spec))
}

/// Jacobian of the weights at `delta` for an explicit kernel state.
pub fn jacobian_at(delta: &[f64], spec: KernelSpec, delta_sm: f64, scale: f64) -> Result<Matrix> {
    if !(scale > DEGENERATE_SCALE) {
        return Err(Error::DegenerateScale(scale));
    }
    let n = delta.len();
    let k: Vec<f64> = delta
        .iter()
        .map(|&d| spec.kernel(d - delta_sm, scale))
        .collect();
    let dk: Vec<f64> = delta
        .iter()
        .map(|&d| spec.kernel_derivative(d - delta_sm, scale))
        .collect();
    let total: f64 = k.iter().sum();
    let total_sq = total * total;
    let mut jac = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            jac[(i, j)] = if i == j {
                dk[i] * (total - k[i]) / total_sq
            } else {
                -k[i] * dk[j] / total_sq
            };
        }
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{pairwise_matrix, Dataset, Metric};
    use approx::assert_relative_eq;

    fn scalar_weights(xs: &[f64], spec: KernelSpec) -> WeightVector {
        let data = Dataset::scalars(xs.to_vec()).unwrap();
        agreement_weights(
            &pairwise_matrix(&data, Metric::AbsoluteScalar).unwrap(),
            spec,
        )
    }

    fn constant_matrix(n: usize, c: f64) -> DistanceMatrix {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { c }).collect())
            .collect();
        DistanceMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn scores_of_three_scalars() {
        let data = Dataset::scalars(vec![0.0, 1.0, 2.0]).unwrap();
        let s = disagreement_scores(&pairwise_matrix(&data, Metric::AbsoluteScalar).unwrap());
        assert_eq!(s.row_sums, vec![3.0, 2.0, 3.0]);
        assert_eq!(s.total, 8.0);
        assert_eq!(s.delta, vec![3.0 / 8.0, 0.25, 3.0 / 8.0]);
        assert_eq!(s.set_median(), (1, 0.25));
    }

    #[test]
    fn single_entity_scores_to_one() {
        let s = disagreement_scores(&DistanceMatrix::from_rows(&[[0.0]]).unwrap());
        assert_eq!(s.delta, vec![1.0]);
        let w = agreement_weights(
            &DistanceMatrix::from_rows(&[[0.0]]).unwrap(),
            KernelSpec::GAUSS_MED,
        );
        assert_eq!(w.weights, vec![1.0]);
    }

    #[test]
    fn equal_distances_give_uniform_scores_and_weights() {
        let m = constant_matrix(5, 2.5);
        let s = disagreement_scores(&m);
        for d in &s.delta {
            assert_relative_eq!(*d, 0.2, epsilon = 1e-15);
        }
        for spec in KernelSpec::ALL {
            let w = agreement_weights(&m, spec);
            assert_eq!(w.weights, vec![0.2; 5]);
        }
        let zero = constant_matrix(4, 0.0);
        assert_eq!(
            agreement_weights(&zero, KernelSpec::LAPLACE_MED).weights,
            vec![0.25; 4]
        );
    }

    #[test]
    fn scale_estimators_by_hand() {
        let delta = [0.0, 0.1, 0.2, 0.3, 0.4];
        assert_relative_eq!(
            robust_scale_of(&delta, KernelSpec::LAPLACE_MED),
            0.28854,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            robust_scale_of(&delta, KernelSpec::GAUSS_MAD),
            0.22631,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            robust_scale_of(&delta, KernelSpec::LAPLACE_MAD),
            0.14427,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            robust_scale_of(&delta, KernelSpec::GAUSS_MED),
            0.29652,
            epsilon = 1e-12
        );
        assert_eq!(robust_scale_of(&[0.25; 4], KernelSpec::GAUSS_MAD), 0.0);
    }

    // Reference values computed with an independent numpy evaluation of the
    // score and kernel formulas.
    #[test]
    fn outlier_among_three_scalars() {
        let expected = [
            (
                KernelSpec::LAPLACE_MAD,
                [
                    0.11111158175132288,
                    0.44444420912434107,
                    0.44444420912433596,
                    4.42732000549254e-60,
                ],
                0.0023965116279069925,
            ),
            (
                KernelSpec::LAPLACE_MED,
                [
                    0.11111158175132403,
                    0.4444442091243406,
                    0.44444420912433547,
                    4.4273200054975684e-60,
                ],
                0.0023965116279070124,
            ),
            (
                KernelSpec::GAUSS_MAD,
                [
                    0.2528161929223178,
                    0.37359190353884114,
                    0.37359190353884114,
                    0.0,
                ],
                0.0037593023255814203,
            ),
            (
                KernelSpec::GAUSS_MED,
                [
                    0.16755956778356057,
                    0.4162202161082197,
                    0.4162202161082197,
                    0.0,
                ],
                0.0024627906976744554,
            ),
        ];
        for (spec, w_ref, s_ref) in expected {
            let w = scalar_weights(&[0.0, 0.1, 0.2, 10.0], spec);
            assert_relative_eq!(w.scale, s_ref, max_relative = 1e-12);
            for (a, b) in w.iter().zip(w_ref) {
                assert_relative_eq!(*a, b, max_relative = 1e-9, epsilon = 1e-300);
            }
            assert!(w[3] < 0.05);
            assert_eq!(w.sm_index, 1);
            assert!(w.iter().all(|&x| x >= w[3]));
        }
    }

    #[test]
    fn far_outlier_vanishes_as_population_grows() {
        for n_in in [3usize, 10, 30, 100] {
            let mut xs: Vec<f64> = (0..n_in).map(|i| i as f64 * 0.01).collect();
            xs.push(1e6);
            let w = scalar_weights(&xs, KernelSpec::LAPLACE_MAD);
            assert!(w[n_in] < 1e-6, "n_in = {n_in}: {}", w[n_in]);
        }
    }

    #[test]
    fn zero_scale_with_spread_selects_minimizers() {
        // Four of five scores tie at the minimum, so median and MAD vanish.
        let delta = [0.1, 0.1, 0.1, 0.1, 0.6];
        let w = weights_from_delta(&delta, KernelSpec::LAPLACE_MED);
        assert_eq!(w.scale, 0.0);
        assert_eq!(w.weights, vec![0.25, 0.25, 0.25, 0.25, 0.0]);
    }

    #[test]
    fn two_point_jacobian_closed_form() {
        let s = 0.3;
        let j = jacobian_at(&[0.5, 0.5], KernelSpec::LAPLACE_MAD, 0.5, s).unwrap();
        assert_relative_eq!(j[(0, 0)], -0.25 / s, epsilon = 1e-14);
        assert_relative_eq!(j[(1, 1)], -0.25 / s, epsilon = 1e-14);
        assert_relative_eq!(j[(0, 1)], 0.25 / s, epsilon = 1e-14);
        assert_relative_eq!(j[(1, 0)], 0.25 / s, epsilon = 1e-14);
    }

    #[test]
    fn jacobian_signs_and_column_sums() {
        let data = Dataset::scalars(vec![0.0, 0.3, 0.35, 1.1, 2.0, 4.0]).unwrap();
        let scores = disagreement_scores(&pairwise_matrix(&data, Metric::AbsoluteScalar).unwrap());
        let (sm, _) = scores.set_median();
        for spec in KernelSpec::ALL {
            let j = jacobian(&scores, spec).unwrap();
            for c in 0..j.cols() {
                let col_sum: f64 = j.column(c).iter().sum();
                assert!(
                    col_sum.abs() < 1e-10,
                    "{spec}: column {c} sums to {col_sum}"
                );
                // the half-Gaussian is flat at the set median
                if spec.family == KernelFamily::Gaussian && c == sm {
                    continue;
                }
                for r in 0..j.rows() {
                    if r == c {
                        assert!(j[(r, c)] < 0.0);
                    } else {
                        assert!(j[(r, c)] > 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn jacobian_rejects_degenerate_scale() {
        let scores = disagreement_scores(&constant_matrix(3, 1.0));
        assert!(matches!(
            jacobian(&scores, KernelSpec::LAPLACE_MAD),
            Err(Error::DegenerateScale(_))
        ));
    }

    #[test]
    fn spec_labels_parse() {
        for spec in KernelSpec::ALL {
            assert_eq!(spec.label().parse::<KernelSpec>().unwrap(), spec);
        }
    }
}
