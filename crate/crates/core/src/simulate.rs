// SPDX-License-Identifier: MIT OR Apache-2.0

//! Seeded data generators and the single-change deletion study: how often
//! does deleting one observation move a detected changepoint away from
//! where the deletion alone would put it?

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::CostModel;
use crate::detect::{default_beta, pelt, DetectorConfig, Dp};
use crate::error::{Error, Result};
use crate::influence::apply_deletion;
use crate::rng::SimRng;
use crate::series::TimeSeries;

/// The four-change example: N(0,1) on 1..=50, N(5,1) on 51..=100, a single
/// N(15,1) outlier at 101, N(5,1) on 102..=150 and N(4,1) on 151..=200.
pub fn outlier_recipe(rng: &mut SimRng) -> TimeSeries {
    let mut v = Vec::with_capacity(200);
    for i in 1..=200 {
        let mean = match i {
            1..=50 => 0.0,
            51..=100 => 5.0,
            101 => 15.0,
            102..=150 => 5.0,
            _ => 4.0,
        };
        v.push(rng.normal(mean, 1.0));
    }
    TimeSeries::new(v).expect("n = 200")
}

/// First `n / 2` values from N(0,1), the rest from N(δ,1).
pub fn single_shift(n: usize, delta: f64, rng: &mut SimRng) -> TimeSeries {
    let half = n / 2;
    let v = (0..n)
        .map(|i| rng.normal(if i < half { 0.0 } else { delta }, 1.0))
        .collect();
    TimeSeries::new(v).expect("n >= 2")
}

/// Grid and repetition count for [`run_deletion_study`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub sizes: Vec<usize>,
    pub shifts: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    /// Known noise variance of the generated data.
    pub sigma2: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            sizes: vec![100, 200, 300, 400, 500, 1000],
            shifts: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            reps: 500,
            seed: 2022,
            sigma2: 1.0,
        }
    }
}

/// Mean moved-proportion for one `(n, δ)` cell with ±2 standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyCell {
    pub n: usize,
    pub delta: f64,
    pub reps: usize,
    pub mean: f64,
    pub se: f64,
    pub lower: f64,
    pub upper: f64,
}

fn nearest(cps: &[usize], target: usize) -> Option<usize> {
    cps.iter().copied().min_by_key(|&c| (c.abs_diff(target), c))
}

/// Fraction of single-point deletions after which the changepoint nearest
/// the truth is no longer at its expected index (one lower when the deleted
/// point precedes it, unchanged otherwise).
pub fn moved_proportion(ts: &TimeSeries, cfg: &DetectorConfig, sigma2: f64) -> Result<f64> {
    let n = ts.len();
    let truth = n / 2;
    let cm = CostModel::new(ts, sigma2)?;
    let original = pelt(&cm, cfg)?;
    let reference = nearest(&original.changepoints, truth);

    // Deleting y_t leaves y_1..y_{t-1} untouched, so each altered fit resumes
    // from the original's state after step t - 1.
    let mut shared = Dp::new(n, cfg, true)?;
    // rejects settings the shortened series cannot satisfy
    Dp::new(n - 1, cfg, true)?;
    let mut moved = 0usize;
    for t in 1..=n {
        let altered = apply_deletion(ts, t)?;
        let altered_cm = CostModel::new(&altered, sigma2)?;
        let seg = shared.with_len(n - 1).finish(&altered_cm);
        shared.advance(&cm, t);
        let hit = match reference {
            Some(tau) => {
                let expected = if t <= tau { tau - 1 } else { tau };
                nearest(&seg.changepoints, expected) == Some(expected)
            }
            None => seg.changepoints.is_empty(),
        };
        if !hit {
            moved += 1;
        }
    }
    Ok(moved as f64 / n as f64)
}

/// Runs every `(n, δ, rep)` task on the current rayon pool. Each task draws
/// from its own ChaCha stream, so results do not depend on thread count.
pub fn run_deletion_study(cfg: &StudyConfig) -> Result<Vec<StudyCell>> {
    if cfg.reps < 2 {
        return Err(Error::InvalidConfig("reps must be >= 2".into()));
    }
    if cfg.sizes.iter().any(|&n| n < 4) {
        return Err(Error::InvalidConfig("sizes must be >= 4".into()));
    }
    let cells: Vec<(usize, f64)> = cfg
        .sizes
        .iter()
        .flat_map(|&n| cfg.shifts.iter().map(move |&d| (n, d)))
        .collect();
    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.reps).map(move |r| (c, r)))
        .collect();

    let props: Vec<f64> = tasks
        .par_iter()
        .map(|&(c, r)| {
            let (n, delta) = cells[c];
            let mut rng = SimRng::stream(cfg.seed, (c * cfg.reps + r) as u64);
            let ts = single_shift(n, delta, &mut rng);
            let det = DetectorConfig::new(default_beta(n, cfg.sigma2))?;
            moved_proportion(&ts, &det, cfg.sigma2)
        })
        .collect::<Result<_>>()?;

    Ok(cells
        .iter()
        .enumerate()
        .map(|(c, &(n, delta))| {
            let xs = &props[c * cfg.reps..(c + 1) * cfg.reps];
            let k = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / k;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
            let se = (var / k).sqrt();
            StudyCell {
                n,
                delta,
                reps: cfg.reps,
                mean,
                se,
                lower: mean - 2.0 * se,
                upper: mean + 2.0 * se,
            }
        })
        .collect())
}

/// CSV with header `n,delta,reps,mean,se,lower,upper`.
pub fn study_csv(cells: &[StudyCell]) -> String {
    let mut out = String::from("n,delta,reps,mean,se,lower,upper\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            c.n, c.delta, c.reps, c.mean, c.se, c.lower, c.upper
        ));
    }
    out
}
