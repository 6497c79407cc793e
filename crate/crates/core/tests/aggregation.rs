use proptest::prelude::*;
use snap::aggregation::{
    bound_check, risk_gap_check, snap_average, snap_weights_for, weighted_mean, weiszfeld_run,
    AggregationMethod, MomRule, WeiszfeldConfig,
};
use snap::datagen::SampleStream;
use snap::metrics::Metric;
use snap::weights::KernelSpec;

fn methods() -> Vec<AggregationMethod> {
    let mut out = vec![
        AggregationMethod::Mean,
        AggregationMethod::Weiszfeld,
        AggregationMethod::MedianOfMeans(MomRule::Blocks95),
        AggregationMethod::MedianOfMeans(MomRule::BlocksSqrt),
    ];
    for spec in KernelSpec::ALL {
        out.push(AggregationMethod::snap_l2(spec));
        out.push(AggregationMethod::snap_l2sq(spec));
        out.push(AggregationMethod::WeightedMean {
            spec,
            metric: Metric::SquaredEuclidean,
        });
    }
    out
}

fn cloud() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2..=3usize, 30..=60usize)
        .prop_flat_map(|(m, n)| prop::collection::vec(prop::collection::vec(-5.0..5.0f64, m), n))
}

fn rotate(p: &[f64], theta: f64) -> Vec<f64> {
    let (s, c) = theta.sin_cos();
    let mut out = p.to_vec();
    out[0] = c * p[0] - s * p[1];
    out[1] = s * p[0] + c * p[1];
    out
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn contaminated(seed: u64, n: usize, outliers: usize, radius: f64) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut s = SampleStream::new(seed, 0);
    let mut pts = Vec::with_capacity(n);
    for i in 0..n {
        if i < n - outliers {
            pts.push(vec![s.normal(), s.normal()]);
        } else {
            let a = s.uniform_in(0.0, std::f64::consts::TAU);
            pts.push(vec![radius * a.cos(), radius * a.sin()]);
        }
    }
    let mask = (0..n).map(|i| i < n - outliers).collect();
    (pts, mask)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_method_follows_translation_and_rotation(
        pts in cloud(),
        theta in 0.0..std::f64::consts::TAU,
        shift in prop::collection::vec(-10.0..10.0f64, 3),
        seed in any::<u64>(),
    ) {
        // tight enough that solver tolerance does not mask the symmetry
        let cfg = WeiszfeldConfig {
            max_iters: 20_000,
            tol: 1e-14,
            ..WeiszfeldConfig::default()
        };
        for method in methods() {
            let base = snap_average(&pts, &method, &cfg, seed).unwrap();
            let moved: Vec<Vec<f64>> = pts
                .iter()
                .map(|p| rotate(p, theta).iter().zip(&shift).map(|(x, t)| x + t).collect())
                .collect();
            let want: Vec<f64> = rotate(&base, theta).iter().zip(&shift).map(|(x, t)| x + t).collect();
            let got = snap_average(&moved, &method, &cfg, seed).unwrap();
            prop_assert!(dist(&got, &want) <= 1e-8, "{method}: {got:?} vs {want:?}");
        }
    }

    /// The component median is equivariant under translations and signed
    /// coordinate permutations, not general rotations.
    #[test]
    fn component_median_follows_signed_permutations(
        pts in cloud(),
        shift in prop::collection::vec(-10.0..10.0f64, 3),
        flip in any::<bool>(),
    ) {
        let method = AggregationMethod::ComponentMedian;
        let cfg = WeiszfeldConfig::default();
        let map = |p: &[f64]| {
            let mut q = p.to_vec();
            q.swap(0, 1);
            if flip {
                q[0] = -q[0];
            }
            q.iter().zip(&shift).map(|(x, t)| x + t).collect::<Vec<f64>>()
        };
        let base = snap_average(&pts, &method, &cfg, 0).unwrap();
        let moved: Vec<Vec<f64>> = pts.iter().map(|p| map(p)).collect();
        let got = snap_average(&moved, &method, &cfg, 0).unwrap();
        prop_assert!(dist(&got, &map(&base)) <= 1e-12);
    }

    #[test]
    fn weiszfeld_objective_never_increases(
        pts in cloud(),
        spec in (0..4usize).prop_map(|i| KernelSpec::ALL[i]),
        uniform in any::<bool>(),
    ) {
        let w = if uniform {
            vec![1.0 / pts.len() as f64; pts.len()]
        } else {
            snap_weights_for(&pts, spec, Metric::Euclidean).unwrap()
        };
        let run = weiszfeld_run(&pts, &w, &WeiszfeldConfig::default()).unwrap();
        // what rounding in one objective evaluation can explain
        let radius = pts.iter().map(|p| dist(p, &[0.0; 3][..p.len()])).fold(0.0, f64::max);
        let floor = 16.0 * (pts[0].len() as f64 + 2.0) * f64::EPSILON * radius;
        for step in run.objectives.windows(2) {
            prop_assert!(step[1] <= step[0] + floor, "{} -> {}", step[0], step[1]);
        }
    }

    #[test]
    fn deviation_and_risk_gap_bounds_hold(
        seed in any::<u64>(),
        outliers in 0..40usize,
        radius in 2.0..50.0f64,
        spec in (0..4usize).prop_map(|i| KernelSpec::ALL[i]),
        theta in prop::collection::vec(-3.0..3.0f64, 2),
    ) {
        let (pts, mask) = contaminated(seed, 100, outliers, radius);
        let w = snap_weights_for(&pts, spec, Metric::Euclidean).unwrap();
        prop_assert!(bound_check(&pts, &w, &mask).unwrap().holds);
        prop_assert!(risk_gap_check(&pts, &w, &mask, &theta).unwrap().holds);
    }
}

#[test]
fn weighted_mean_error_stays_bounded_as_the_outlier_recedes() {
    for spec in KernelSpec::ALL {
        let errors: Vec<f64> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&r| {
                let (mut pts, mask) = contaminated(3, 100, 0, 0.0);
                pts[99] = vec![r, 0.0];
                let w = snap_weights_for(&pts, spec, Metric::Euclidean).unwrap();
                let inliers: Vec<Vec<f64>> = pts[..99].to_vec();
                let uniform = vec![1.0 / 99.0; 99];
                let mu = weighted_mean(&inliers, &uniform).unwrap();
                assert!(mask.iter().all(|&m| m));
                dist(&weighted_mean(&pts, &w).unwrap(), &mu)
            })
            .collect();
        for e in &errors[1..] {
            assert!(*e <= 2.0 * errors[0] + 1e-12, "{spec}: {errors:?}");
        }
    }
}

#[test]
fn snap_estimates_beat_weiszfeld_under_heavy_contamination() {
    let cfg = WeiszfeldConfig::default();
    let (pts, _) = contaminated(11, 200, 60, 8.0);
    let err = |m: &AggregationMethod| dist(&snap_average(&pts, m, &cfg, 0).unwrap(), &[0.0, 0.0]);
    let weiszfeld = err(&AggregationMethod::Weiszfeld);
    for spec in KernelSpec::ALL {
        assert!(err(&AggregationMethod::snap_l2(spec)) < weiszfeld, "{spec}");
        assert!(
            err(&AggregationMethod::snap_l2sq(spec)) < weiszfeld,
            "{spec}"
        );
    }
}

#[test]
fn scalar_outlier_is_ignored() {
    let pts = vec![vec![0.0], vec![0.1], vec![0.2], vec![10.0]];
    let est = snap_average(
        &pts,
        &AggregationMethod::snap_l2sq(KernelSpec::LAPLACE_MAD),
        &WeiszfeldConfig::default(),
        0,
    )
    .unwrap();
    assert!((est[0] - 0.1).abs() <= 0.05);
}
