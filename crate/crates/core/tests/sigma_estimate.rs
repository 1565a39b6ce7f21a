// SPDX-License-Identifier: MIT OR Apache-2.0

use cpflux_core::rng::SimRng;
use cpflux_core::{data_range, estimate_sigma2, TimeSeries};
use proptest::prelude::*;

/// A single n = 10 000 estimate has a standard deviation near 0.1 at
/// σ² = 4, so the ±0.2 band is checked as a rate over seeds alongside a
/// tight bound on the average.
#[test]
fn recovers_noise_variance_despite_mean_shifts() {
    let means = [0.0, 8.0, -3.0, 12.0, 5.0];
    let estimates: Vec<f64> = (0..100u64)
        .map(|seed| {
            let mut rng = SimRng::seed_from_u64(seed);
            let y: Vec<f64> = (0..10_000)
                .map(|i| rng.normal(means[i / 2000], 2.0))
                .collect();
            estimate_sigma2(&TimeSeries::new(y).unwrap()).unwrap()
        })
        .collect();
    let inside = estimates.iter().filter(|s| (*s - 4.0).abs() <= 0.2).count();
    let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
    assert!(inside >= 90, "{inside}/100 within 0.2");
    assert!((mean - 4.0).abs() <= 0.03, "average {mean}");
}

fn integer_series() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-1000i32..1000).prop_map(f64::from), 3..80)
}

proptest! {
    #[test]
    fn invariant_to_translation(y in integer_series(), c in -1000i32..1000) {
        let base = TimeSeries::new(y.clone()).unwrap();
        let shifted = TimeSeries::new(y.iter().map(|v| v + f64::from(c)).collect()).unwrap();
        prop_assert_eq!(data_range(&base), data_range(&shifted));
        if let Ok(s) = estimate_sigma2(&base) {
            prop_assert_eq!(estimate_sigma2(&shifted).unwrap(), s);
        }
    }

    #[test]
    fn scales_quadratically(y in integer_series(), c in 0.01f64..100.0, k in -5i32..6) {
        let base = TimeSeries::new(y.clone()).unwrap();
        let Ok(s) = estimate_sigma2(&base) else { return Ok(()); };
        let scaled = TimeSeries::new(y.iter().map(|v| v * c).collect()).unwrap();
        let want = s * c * c;
        prop_assert!((estimate_sigma2(&scaled).unwrap() - want).abs() <= 1e-9 * want);
        let p = 2f64.powi(k);
        let exact = TimeSeries::new(y.iter().map(|v| v * p).collect()).unwrap();
        prop_assert_eq!(estimate_sigma2(&exact).unwrap(), s * p * p);
    }
}
