//! Randomized property checks over seeded instance streams.
//!
//! Each check draws its instances from [`SampleStream`] so that a failure is
//! reproducible from the instance index alone.

use snap::aggregation::{bound_check, risk_gap_check, weiszfeld_run, WeiszfeldConfig};
use snap::datagen::SampleStream;
use snap::linalg::Matrix;
use snap::metrics::{kendall_tau, pairwise_matrix, Dataset, DistanceMatrix, Metric};
use snap::subspace::symmetric_eig;
use snap::weights::{
    agreement_weights, disagreement_scores, jacobian_at, robust_scale_of, weights_from_delta,
    KernelSpec, DEGENERATE_SCALE,
};

/// Outcome of one check over many instances.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub instances: usize,
    pub failures: usize,
    /// Largest violation seen, in the check's own units.
    pub worst: f64,
    pub first_failure: Option<usize>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

struct Tally {
    out: Outcome,
}

impl Tally {
    fn new() -> Self {
        Self {
            out: Outcome {
                instances: 0,
                failures: 0,
                worst: 0.0,
                first_failure: None,
            },
        }
    }

    fn record(&mut self, ok: bool, violation: f64) {
        if !ok {
            self.out.failures += 1;
            self.out.first_failure.get_or_insert(self.out.instances);
        }
        if violation.is_nan() || violation > self.out.worst {
            self.out.worst = violation;
        }
        self.out.instances += 1;
    }
}

const CHECK_STREAM: u64 = 0x5eed;

fn stream(seed: u64, instance: usize) -> SampleStream {
    SampleStream::new(seed ^ CHECK_STREAM, instance as u64)
}

fn pick(s: &mut SampleStream, lo: usize, hi: usize) -> usize {
    lo + ((hi - lo + 1) as f64 * s.uniform()) as usize
}

fn pick_spec(s: &mut SampleStream) -> KernelSpec {
    KernelSpec::ALL[pick(s, 0, 3)]
}

/// Gaussian inliers plus a random share of uniform outliers.
pub fn contaminated_points(s: &mut SampleStream, n: usize, m: usize) -> (Vec<Vec<f64>>, Vec<bool>) {
    let outliers = pick(s, 0, n / 2);
    let spread = s.uniform_in(2.0, 30.0);
    let mut points = Vec::with_capacity(n);
    let mut mask = Vec::with_capacity(n);
    for i in 0..n {
        let inlier = i < n - outliers;
        points.push(
            (0..m)
                .map(|_| {
                    if inlier {
                        s.normal()
                    } else {
                        s.uniform_in(-spread, spread)
                    }
                })
                .collect(),
        );
        mask.push(inlier);
    }
    (points, mask)
}

/// A random distance matrix from vectors, scalars or rankings, with
/// occasional duplicated entities to exercise ties.
fn random_matrix(s: &mut SampleStream) -> DistanceMatrix {
    let n = pick(s, 1, 40);
    match pick(s, 0, 3) {
        0 | 1 => {
            let m = pick(s, 1, 6);
            let (mut pts, _) = contaminated_points(s, n, m);
            if n > 2 && s.uniform() < 0.3 {
                pts[1] = pts[0].clone();
            }
            let metric = if s.uniform() < 0.5 {
                Metric::Euclidean
            } else {
                Metric::SquaredEuclidean
            };
            pairwise_matrix(&Dataset::vectors(pts).unwrap(), metric).unwrap()
        }
        2 => {
            let xs: Vec<f64> = (0..n).map(|_| (s.normal() * 4.0).round() / 4.0).collect();
            pairwise_matrix(&Dataset::scalars(xs).unwrap(), Metric::AbsoluteScalar).unwrap()
        }
        _ => {
            use rand::seq::SliceRandom;
            let l = pick(s, 2, 8);
            let perms: Vec<Vec<usize>> = (0..n)
                .map(|_| {
                    let mut p: Vec<usize> = (0..l).collect();
                    p.shuffle(s.rng());
                    p
                })
                .collect();
            pairwise_matrix(&Dataset::rankings(perms).unwrap(), Metric::KendallTau).unwrap()
        }
    }
}

/// Non-negative weights summing to one within `1e-10`.
pub fn simplex(seed: u64, instances: usize) -> Outcome {
    let mut t = Tally::new();
    for i in 0..instances {
        let mut s = stream(seed, i);
        let dist = random_matrix(&mut s);
        let w = agreement_weights(&dist, pick_spec(&mut s));
        let err = (w.iter().sum::<f64>() - 1.0).abs();
        t.record(err <= 1e-10 && w.iter().all(|&x| x >= 0.0), err);
    }
    t.out
}

/// Random orthogonal matrix from Gram-Schmidt on Gaussian columns.
pub fn random_rotation(s: &mut SampleStream, m: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    while basis.len() < m {
        let mut v: Vec<f64> = (0..m).map(|_| s.normal()).collect();
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    basis
}

/// Weights unchanged within `1e-9` under translation, rotation and positive
/// scaling of the points.
pub fn similarity_invariance(seed: u64, instances: usize) -> Outcome {
    let mut t = Tally::new();
    for i in 0..instances {
        let mut s = stream(seed, i);
        let n = pick(&mut s, 2, 40);
        let m = pick(&mut s, 1, 6);
        let (pts, _) = contaminated_points(&mut s, n, m);
        let rot = random_rotation(&mut s, m);
        let shift: Vec<f64> = (0..m).map(|_| s.uniform_in(-50.0, 50.0)).collect();
        let c = (s.uniform_in(-2.0, 2.0)).exp();
        let moved: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| {
                (0..m)
                    .map(|r| c * rot[r].iter().zip(p).map(|(a, x)| a * x).sum::<f64>() + shift[r])
                    .collect()
            })
            .collect();
        let metric = if i % 2 == 0 {
            Metric::Euclidean
        } else {
            Metric::SquaredEuclidean
        };
        let spec = pick_spec(&mut s);
        let w = agreement_weights(
            &pairwise_matrix(&Dataset::vectors(pts).unwrap(), metric).unwrap(),
            spec,
        );
        let w2 = agreement_weights(
            &pairwise_matrix(&Dataset::vectors(moved).unwrap(), metric).unwrap(),
            spec,
        );
        let err = w
            .iter()
            .zip(w2.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        t.record(err <= 1e-9, err);
    }
    t.out
}

/// Equal pairwise distances give `w_i = 1/n`.
pub fn uniformity(seed: u64, instances: usize) -> Outcome {
    let mut t = Tally::new();
    for i in 0..instances {
        let mut s = stream(seed, i);
        let n = pick(&mut s, 1, 60);
        let c = s.uniform_in(0.0, 100.0);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|a| (0..n).map(|b| if a == b { 0.0 } else { c }).collect())
            .collect();
        let w = agreement_weights(
            &DistanceMatrix::from_rows(&rows).unwrap(),
            pick_spec(&mut s),
        );
        let err = w
            .iter()
            .map(|x| (x - 1.0 / n as f64).abs())
            .fold(0.0, f64::max);
        t.record(err <= 1e-12, err);
    }
    t.out
}

/// `D_i <= D_k` implies `w_i >= w_k`.
pub fn monotonicity(seed: u64, instances: usize) -> Outcome {
    let mut t = Tally::new();
    for i in 0..instances {
        let mut s = stream(seed, i);
        let dist = random_matrix(&mut s);
        let scores = disagreement_scores(&dist);
        let w = agreement_weights(&dist, pick_spec(&mut s));
        let mut order: Vec<usize> = (0..w.len()).collect();
        order.sort_by(|&a, &b| scores.row_sums[a].total_cmp(&scores.row_sums[b]));
        let worst = order
            .windows(2)
            .map(|p| w[p[1]] - w[p[0]])
            .fold(0.0, f64::max);
        t.record(worst <= 0.0, worst);
    }
    t.out
}

/// Every minimizer of `D_i` carries the largest weight.
pub fn set_median_maximality(seed: u64, instances: usize) -> Outcome {
    let mut t = Tally::new();
    for i in 0..instances {
        let mut s = stream(seed, i);
        let dist = random_matrix(&mut s);
        let scores = disagreement_scores(&dist);
        let w = agreement_weights(&dist, pick_spec(&mut s));
        let d_min = scores
            .row_sums
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let w_max = w.max_weight();
        let gap = (0..w.len())
            .filter(|&k| scores.row_sums[k] == d_min)
            .map(|k| w_max - w[k])
            .fold(0.0, f64::max);
        t.record(gap <= 0.0, gap);
    }
    t.out
}

/// Scaling one entity's distances to all others by 1.5 strictly lowers its
/// weight once every weight is refitted. Instances are clean Gaussian clouds
/// so the weight is representable.
pub fn strict_sensitivity(seed: u64, instances: usize) -> Outcome {
    sensitivity(seed, instances, false)
}

/// The same perturbation with the set-median score and scale frozen at the
/// original fit, so only the scores move.
pub fn strict_sensitivity_frozen(seed: u64, instances: usize) -> Outcome {
    sensitivity(seed, instances, true)
}

fn sensitivity(seed: u64, instances: usize, frozen: bool) -> Outcome {
    let mut t = Tally::new();
    for i in 0..instances {
        let mut s = stream(seed, i);
        let n = pick(&mut s, 3, 30);
        let m = pick(&mut s, 1, 5);
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| s.normal()).collect())
            .collect();
        let metric = if i % 2 == 0 {
            Metric::Euclidean
        } else {
            Metric::SquaredEuclidean
        };
        let spec = pick_spec(&mut s);
        let k = pick(&mut s, 0, n - 1);
        let base = pairwise_matrix(&Dataset::vectors(pts).unwrap(), metric).unwrap();
        let mut rows: Vec<Vec<f64>> = (0..n).map(|r| base.row(r).to_vec()).collect();
        let scaled: Vec<f64> = rows[k].iter().map(|v| v * 1.5).collect();
        for (j, v) in scaled.into_iter().enumerate() {
            rows[k][j] = v;
            rows[j][k] = v;
        }
        let moved = DistanceMatrix::from_rows(&rows).unwrap();
        let w = agreement_weights(&base, spec);
        let after = if frozen {
            let delta = disagreement_scores(&moved).delta;
            frozen_weights(&delta, spec, w.delta_sm, w.scale)[k]
        } else {
            agreement_weights(&moved, spec)[k]
        };
        let rise = after - w[k];
        t.record(rise < 0.0, rise.max(0.0));
    }
    t.out
}

/// `||w' - w||_2 <= √2` for any two weight vectors of the same size.
pub fn bounded_variation(seed: u64, instances: usize) -> Outcome {
    let mut t = Tally::new();
    for i in 0..instances {
        let mut s = stream(seed, i);
        let n = pick(&mut s, 1, 40);
        let m = pick(&mut s, 1, 5);
        let (a, _) = contaminated_points(&mut s, n, m);
        let (b, _) = contaminated_points(&mut s, n, m);
        let wa = agreement_weights(
            &pairwise_matrix(&Dataset::vectors(a).unwrap(), Metric::Euclidean).unwrap(),
            pick_spec(&mut s),
        );
        let wb = agreement_weights(
            &pairwise_matrix(&Dataset::vectors(b).unwrap(), Metric::SquaredEuclidean).unwrap(),
            pick_spec(&mut s),
        );
        let d = wa
            .iter()
            .zip(wb.iter())
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        t.record(d <= 2f64.sqrt(), (d - 2f64.sqrt()).max(0.0));
    }
    t.out
}

/// Kernel weights at `delta` with the set-median score and scale frozen.
fn frozen_weights(delta: &[f64], spec: KernelSpec, delta_sm: f64, scale: f64) -> Vec<f64> {
    let k: Vec<f64> = delta
        .iter()
        .map(|&d| spec.kernel(d - delta_sm, scale))
        .collect();
    let total: f64 = k.iter().sum();
    k.into_iter().map(|v| v / total).collect()
}

/// Analytic Jacobian against central differences (step `1e-6`), relative
/// error below `1e-5` on every column other than the set median's. Entries
/// below the rounding floor of the difference quotient are compared against
/// that floor. The recorded violation is the error as a multiple of the
/// allowance.
pub fn jacobian_finite_difference(seed: u64, instances: usize) -> Outcome {
    const STEP: f64 = 1e-6;
    let mut t = Tally::new();
    let mut i = 0;
    while t.out.instances < instances {
        let mut s = stream(seed, i);
        i += 1;
        let n = pick(&mut s, 2, 25);
        let raw: Vec<f64> = (0..n).map(|_| s.uniform_in(0.5, 1.5)).collect();
        let total: f64 = raw.iter().sum();
        let delta: Vec<f64> = raw.iter().map(|d| d / total).collect();
        let spec = pick_spec(&mut s);
        let scale = robust_scale_of(&delta, spec);
        if scale <= DEGENERATE_SCALE {
            continue;
        }
        let fitted = weights_from_delta(&delta, spec);
        let (sm, delta_sm) = (fitted.sm_index, fitted.delta_sm);
        let jac = jacobian_at(&delta, spec, delta_sm, scale).unwrap();
        let mut worst = 0.0f64;
        for j in (0..n).filter(|&j| j != sm) {
            let mut up = delta.clone();
            let mut down = delta.clone();
            up[j] += STEP;
            down[j] -= STEP;
            let wu = frozen_weights(&up, spec, delta_sm, scale);
            let wd = frozen_weights(&down, spec, delta_sm, scale);
            for r in 0..n {
                let fd = (wu[r] - wd[r]) / (2.0 * STEP);
                let an = jac[(r, j)];
                // rounding in `wu - wd` bounds what the difference can resolve
                let noise = 8.0 * f64::EPSILON * wu[r].abs().max(wd[r].abs()) / (2.0 * STEP);
                let allowed = 1e-5 * an.abs().max(fd.abs()) + noise;
                worst = worst.max((fd - an).abs() / allowed);
            }
        }
        t.record(worst <= 1.0, worst);
    }
    t.out
}

/// Returns `(max outlier weight averaged over seeds)` at each `n` on data
/// where 80% of the points are `N(0, I_2)` and the rest sit at radius 20.
pub fn suppression_curve(ns: &[usize], seeds: u64, spec: KernelSpec) -> Vec<f64> {
    ns.iter()
        .map(|&n| {
            (0..seeds)
                .map(|seed| {
                    let mut s = SampleStream::new(seed ^ CHECK_STREAM, n as u64);
                    let inliers = ((0.8 * n as f64) + 0.5).floor() as usize;
                    let mut pts: Vec<Vec<f64>> =
                        (0..inliers).map(|_| vec![s.normal(), s.normal()]).collect();
                    for _ in inliers..n {
                        let a = s.uniform_in(0.0, std::f64::consts::TAU);
                        pts.push(vec![20.0 * a.cos(), 20.0 * a.sin()]);
                    }
                    let dist = pairwise_matrix(&Dataset::vectors(pts).unwrap(), Metric::Euclidean)
                        .unwrap();
                    let w = agreement_weights(&dist, spec);
                    w[inliers..].iter().cloned().fold(0.0, f64::max)
                })
                .sum::<f64>()
                / seeds as f64
        })
        .collect()
}

/// Deviation bound of the weighted mean and the risk-gap bound under
/// squared loss, with agreement weights on contaminated data.
pub fn deviation_bounds(seed: u64, instances: usize) -> Outcome {
    let mut t = Tally::new();
    for i in 0..instances {
        let mut s = stream(seed, i);
        let n = pick(&mut s, 2, 60);
        let m = pick(&mut s, 1, 8);
        let (pts, mask) = contaminated_points(&mut s, n, m);
        let metric = if i % 2 == 0 {
            Metric::Euclidean
        } else {
            Metric::SquaredEuclidean
        };
        let w = agreement_weights(
            &pairwise_matrix(&Dataset::vectors(pts.clone()).unwrap(), metric).unwrap(),
            pick_spec(&mut s),
        );
        let b = bound_check(&pts, &w, &mask).unwrap();
        let theta: Vec<f64> = (0..m).map(|_| s.normal()).collect();
        let g = risk_gap_check(&pts, &w, &mask, &theta).unwrap();
        t.record(
            b.holds && g.holds,
            (b.lhs - b.rhs).max(g.gap - g.bound).max(0.0),
        );
    }
    t.out
}

fn brute_force_kendall(a: &[usize], b: &[usize]) -> u64 {
    let mut pos = vec![0; a.len()];
    for (i, &x) in b.iter().enumerate() {
        pos[x] = i;
    }
    let mut count = 0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            if pos[a[i]] > pos[a[j]] {
                count += 1;
            }
        }
    }
    count
}

fn permutations(l: usize) -> Vec<Vec<usize>> {
    if l == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(l - 1) {
        for slot in 0..=p.len() {
            let mut q = p.clone();
            q.insert(slot, l - 1);
            out.push(q);
        }
    }
    out
}

/// Merge-sort Kendall tau against the pairwise count on every pair of
/// permutations of length `1..=max_len`.
pub fn kendall_exhaustive(max_len: usize) -> Outcome {
    let mut t = Tally::new();
    for l in 1..=max_len {
        let perms = permutations(l);
        for a in &perms {
            for b in &perms {
                let fast = kendall_tau(a, b);
                let slow = brute_force_kendall(a, b);
                t.record(fast == slow, fast.abs_diff(slow) as f64);
            }
        }
    }
    t.out
}

/// Rounding error of one evaluation of `Σ w_i ||x_i - x||` for iterates in
/// the convex hull of `points`.
pub fn objective_rounding_floor(points: &[Vec<f64>]) -> f64 {
    let m = points.first().map_or(1, Vec::len);
    let radius = points
        .iter()
        .map(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    16.0 * (m as f64 + 2.0) * f64::EPSILON * radius
}

/// The weighted Weiszfeld objective never increases between iterations
/// beyond a relative `1e-12` plus the rounding floor of its evaluation.
pub fn weiszfeld_monotone(seed: u64, instances: usize) -> Outcome {
    let mut t = Tally::new();
    for i in 0..instances {
        let mut s = stream(seed, i);
        let n = pick(&mut s, 1, 60);
        let m = pick(&mut s, 1, 6);
        let (pts, _) = contaminated_points(&mut s, n, m);
        let raw: Vec<f64> = (0..n).map(|_| s.uniform()).collect();
        let total: f64 = raw.iter().sum::<f64>().max(f64::MIN_POSITIVE);
        let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let run = weiszfeld_run(&pts, &w, &WeiszfeldConfig::default()).unwrap();
        let floor = objective_rounding_floor(&pts);
        // rise as a multiple of what rounding alone can explain
        let rise = run
            .objectives
            .windows(2)
            .map(|p| (p[1] - p[0]) / (1e-12 * p[0] + floor))
            .fold(0.0, f64::max);
        t.record(rise <= 1.0, rise);
    }
    t.out
}

/// `||S v - λ v|| <= 1e-8 ||S||_F` for every eigenpair of random symmetric
/// matrices of size `1..=max_dim`.
pub fn eigen_residual(seed: u64, max_dim: usize) -> Outcome {
    let mut t = Tally::new();
    for m in 1..=max_dim {
        let mut s = stream(seed, m);
        let a: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..m).map(|_| s.normal()).collect())
            .collect();
        let sym: Vec<Vec<f64>> = (0..m)
            .map(|r| (0..m).map(|c| a[r][c] + a[c][r]).collect())
            .collect();
        let mat = Matrix::from_rows(&sym).unwrap();
        let eig = symmetric_eig(&mat).unwrap();
        let norm = mat.frobenius_norm();
        let worst = (0..m)
            .map(|k| {
                let v = eig.vectors.column(k);
                let sv = mat.matvec(&v).unwrap();
                sv.iter()
                    .zip(&v)
                    .map(|(x, y)| (x - eig.values[k] * y).powi(2))
                    .sum::<f64>()
                    .sqrt()
                    / norm
            })
            .fold(0.0, f64::max);
        t.record(worst <= 1e-8, worst);
    }
    t.out
}

/// Share of seeds where the `l2²` agreement-weighted mean of clean
/// `N(0, I_m)` data is within `3/√n` of the sample mean's error.
pub fn clean_gaussian_agreement(seeds: u64, n: usize, m: usize, spec: KernelSpec) -> f64 {
    use snap::aggregation::{mean, snap_average, AggregationMethod};
    let cfg = WeiszfeldConfig::default();
    let ok = (0..seeds)
        .filter(|&seed| {
            let mut s = SampleStream::new(seed ^ CHECK_STREAM, 7);
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..m).map(|_| s.normal()).collect())
                .collect();
            let norm = |v: Vec<f64>| v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let snap =
                norm(snap_average(&pts, &AggregationMethod::snap_l2sq(spec), &cfg, 0).unwrap());
            let plain = norm(mean(&pts).unwrap());
            (snap - plain).abs() <= 3.0 / (n as f64).sqrt()
        })
        .count();
    ok as f64 / seeds as f64
}
