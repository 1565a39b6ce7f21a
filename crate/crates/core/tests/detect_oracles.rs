// SPDX-License-Identifier: MIT OR Apache-2.0

//! Detection against independent brute-force oracles written here, plus the
//! in-crate solvers against each other.

use cpflux_core::{
    exhaustive, optimal_partition, pelt, penalized_cost, CostModel, DetectorConfig, SegmentCost,
    TimeSeries,
};
use proptest::prelude::*;

/// Two-pass residual sum of squares over `sigma2`, 0-based half-open.
fn naive_cost(y: &[f64], sigma2: f64) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / sigma2
}

fn naive_penalized(y: &[f64], cps: &[usize], beta: f64, sigma2: f64) -> f64 {
    let mut bounds = vec![0];
    bounds.extend_from_slice(cps);
    bounds.push(y.len());
    bounds
        .windows(2)
        .map(|w| naive_cost(&y[w[0]..w[1]], sigma2) + beta)
        .sum()
}

/// Every subset of interior boundaries, scored naively.
fn brute_force(y: &[f64], beta: f64, sigma2: f64) -> (f64, Vec<Vec<usize>>) {
    let n = y.len();
    let mut scored = Vec::new();
    for mask in 0u32..(1 << (n - 1)) {
        let cps: Vec<usize> = (1..n).filter(|&c| mask & (1 << (c - 1)) != 0).collect();
        scored.push((naive_penalized(y, &cps, beta, sigma2), cps));
    }
    let best = scored.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * (1.0 + best.abs());
    let near = scored
        .into_iter()
        .filter(|s| s.0 <= best + tol)
        .map(|s| s.1)
        .collect();
    (best, near)
}

fn series() -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        prop::collection::vec(-10.0f64..10.0, 2..=12),
        // Small integers make exact ties common.
        prop::collection::vec((0i32..4).prop_map(f64::from), 2..=12),
    ]
}

fn setup(y: &[f64], beta: f64, sigma2: f64, min_len: usize) -> (CostModel, DetectorConfig) {
    let ts = TimeSeries::new(y.to_vec()).unwrap();
    let cm = CostModel::new(&ts, sigma2).unwrap();
    let cfg = DetectorConfig::new(beta)
        .unwrap()
        .with_min_segment_length(min_len);
    (cm, cfg)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn solvers_agree_exactly(y in series(), beta in 0.1f64..50.0, sigma2 in 0.25f64..4.0) {
        let (cm, cfg) = setup(&y, beta, sigma2, 1);
        let a = pelt(&cm, &cfg).unwrap();
        let b = optimal_partition(&cm, &cfg).unwrap();
        let c = exhaustive(&cm, &cfg).unwrap();
        prop_assert_eq!(&a.changepoints, &b.changepoints);
        prop_assert_eq!(&a.changepoints, &c.changepoints);
        prop_assert_eq!(a.total_penalized_cost.to_bits(), b.total_penalized_cost.to_bits());
        prop_assert_eq!(a.total_penalized_cost.to_bits(), c.total_penalized_cost.to_bits());
    }

    #[test]
    fn solvers_agree_with_min_length(y in series(), beta in 0.1f64..50.0, min_len in 1usize..=4) {
        prop_assume!(y.len() >= min_len);
        let (cm, cfg) = setup(&y, beta, 1.0, min_len);
        let a = pelt(&cm, &cfg).unwrap();
        let b = optimal_partition(&cm, &cfg).unwrap();
        let c = exhaustive(&cm, &cfg).unwrap();
        prop_assert_eq!(&a.changepoints, &b.changepoints);
        prop_assert_eq!(&a.changepoints, &c.changepoints);
        prop_assert!(a.segments().all(|(s, u)| u + 1 - s >= min_len));
    }

    #[test]
    fn pelt_matches_brute_force(y in series(), beta in 0.1f64..50.0, sigma2 in 0.25f64..4.0) {
        let (cm, cfg) = setup(&y, beta, sigma2, 1);
        let seg = pelt(&cm, &cfg).unwrap();
        let (best, near_optimal) = brute_force(&y, beta, sigma2);
        prop_assert!((seg.total_penalized_cost - best).abs() <= 1e-9 * (1.0 + best.abs()));
        prop_assert!(near_optimal.contains(&seg.changepoints));
        // Documented tie-break among optimal sets: fewest changepoints, then
        // earliest last changepoint, recursively.
        let fewest = near_optimal.iter().map(Vec::len).min().unwrap();
        prop_assert_eq!(seg.changepoints.len(), fewest);
    }

    #[test]
    fn penalized_cost_matches_naive(y in series(), beta in 0.1f64..50.0, mask in any::<u16>()) {
        let n = y.len();
        let cps: Vec<usize> = (1..n).filter(|&c| mask & (1 << (c - 1)) != 0).collect();
        let (cm, _) = setup(&y, beta, 1.0, 1);
        let got = penalized_cost(&cm, &cps, beta).unwrap();
        let want = naive_penalized(&y, &cps, beta, 1.0);
        prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn optimality_certificate(
        y in prop::collection::vec(-5.0f64..5.0, 20..=60),
        beta in 0.5f64..20.0,
        seed in any::<u64>(),
    ) {
        let (cm, cfg) = setup(&y, beta, 1.0, 1);
        let best = pelt(&cm, &cfg).unwrap().total_penalized_cost;
        let n = y.len();
        let mut state = seed | 1;
        for _ in 0..10_000 {
            // xorshift64: enough to draw candidate segmentations.
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let density = (state % 7) + 1;
            let mut bits = state;
            let cps: Vec<usize> = (1..n)
                .filter(|_| {
                    bits = bits.rotate_left(5).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                    bits % 8 < density
                })
                .collect();
            let cost = penalized_cost(&cm, &cps, beta).unwrap();
            prop_assert!(best <= cost + 1e-9 * (1.0 + cost.abs()));
        }
    }

    #[test]
    fn changepoint_count_non_increasing_in_beta(y in prop::collection::vec(-8.0f64..8.0, 5..=80)) {
        let ts = TimeSeries::new(y).unwrap();
        let cm = CostModel::new(&ts, 1.0).unwrap();
        let mut prev = usize::MAX;
        for k in 0..40 {
            let beta = 0.05 * 1.25f64.powi(k);
            let m = pelt(&cm, &DetectorConfig::new(beta).unwrap()).unwrap().num_changepoints();
            prop_assert!(m <= prev, "beta {beta}: {m} > {prev}");
            prev = m;
        }
    }

    #[test]
    fn pelt_equals_optimal_partition_on_long_series(
        y in prop::collection::vec(-3.0f64..3.0, 50..=300),
        shifts in prop::collection::vec((0usize..300, -6.0f64..6.0), 0..6),
        beta in 1.0f64..30.0,
        min_len in 1usize..=5,
    ) {
        let mut y = y;
        let n = y.len();
        for (at, d) in shifts {
            for v in y.iter_mut().skip(at % n) {
                *v += d;
            }
        }
        let (cm, cfg) = setup(&y, beta, 1.0, min_len);
        let a = pelt(&cm, &cfg).unwrap();
        let b = optimal_partition(&cm, &cfg).unwrap();
        prop_assert_eq!(a.changepoints, b.changepoints);
        prop_assert_eq!(a.total_penalized_cost.to_bits(), b.total_penalized_cost.to_bits());
    }

    /// Small integer levels produce many exactly tied segmentations.
    #[test]
    fn pelt_equals_optimal_partition_with_ties(
        y in prop::collection::vec(0i32..4, 30..=200),
        offset in prop::sample::select(vec![0.0, -250.0, 1.0e4]),
        beta in prop::sample::select(vec![0.5, 1.0, 2.0, 4.0, 9.0]),
        sigma2 in prop::sample::select(vec![0.25, 1.0, 3.0]),
        min_len in 1usize..=4,
    ) {
        let y: Vec<f64> = y.into_iter().map(|v| v as f64 + offset).collect();
        let (cm, cfg) = setup(&y, beta, sigma2, min_len);
        let a = pelt(&cm, &cfg).unwrap();
        let b = optimal_partition(&cm, &cfg).unwrap();
        prop_assert_eq!(a.changepoints, b.changepoints);
        prop_assert_eq!(a.total_penalized_cost.to_bits(), b.total_penalized_cost.to_bits());
    }
}

#[test]
fn segment_means_and_cost_are_consistent() {
    let y = [0.0, 0.2, -0.1, 9.8, 10.1, 10.0, 3.0, 3.2];
    let (cm, cfg) = setup(&y, 3.0, 1.0, 1);
    let seg = pelt(&cm, &cfg).unwrap();
    for ((s, u), &m) in seg.segments().zip(&seg.segment_means) {
        let slice = &y[s - 1..u];
        let mean = slice.iter().sum::<f64>() / slice.len() as f64;
        assert!((m - mean).abs() < 1e-12);
        assert!((cm.cost(s, u) - naive_cost(slice, 1.0)).abs() < 1e-9);
    }
}
