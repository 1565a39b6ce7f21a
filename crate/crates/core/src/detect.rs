// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact minimization of the penalized segmentation cost
//! `Σ_j [C(y_{τ_j+1:τ_{j+1}}) + β]`.
//!
//! [`pelt`] is the production solver. [`optimal_partition`] (no pruning) and
//! [`exhaustive`] (all 2^(n−1) segmentations) exist as oracles and share the
//! same tie-break: fewest changepoints first, then the earliest last
//! changepoint, applied recursively to the prefix.

use serde::{Deserialize, Serialize};

use crate::cost::{CostModel, SegmentCost};
use crate::error::{Error, Result};
use crate::series::{SeriesStats, TimeSeries};

/// Largest series the exhaustive oracle will enumerate.
pub const EXHAUSTIVE_MAX_N: usize = 14;

/// Relative slack on the pruning test. Subadditivity holds exactly in real
/// arithmetic but can fail by a few ulps in floating point.
const PRUNE_SLACK: f64 = 1e-9;

/// Ordered changepoints (last index of each segment but the final one) with
/// fitted segment means and the penalized cost they achieve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    pub changepoints: Vec<usize>,
    pub n: usize,
    pub segment_means: Vec<f64>,
    pub total_penalized_cost: f64,
}

impl Segmentation {
    /// Builds a segmentation from explicit changepoints, filling in means and
    /// the penalized cost under `beta`.
    pub fn from_changepoints<C: SegmentCost>(
        cm: &C,
        changepoints: Vec<usize>,
        beta: f64,
    ) -> Result<Self> {
        let total_penalized_cost = penalized_cost(cm, &changepoints, beta)?;
        let n = cm.len();
        let segment_means = segment_bounds(&changepoints, n)
            .map(|(s, u)| cm.fitted(s, u))
            .collect();
        Ok(Self {
            changepoints,
            n,
            segment_means,
            total_penalized_cost,
        })
    }

    pub fn num_changepoints(&self) -> usize {
        self.changepoints.len()
    }

    /// Inclusive 1-based `(start, end)` of every segment.
    pub fn segments(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        segment_bounds(&self.changepoints, self.n)
    }

    /// 1-based segment number of every index.
    pub fn labels(&self) -> Vec<u32> {
        let mut labels = Vec::with_capacity(self.n);
        for (k, (s, u)) in self.segments().enumerate() {
            labels.extend(std::iter::repeat_n(k as u32 + 1, u - s + 1));
        }
        labels
    }

    /// Segment mean at every index.
    pub fn fitted_values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n);
        for ((s, u), &m) in self.segments().zip(&self.segment_means) {
            out.extend(std::iter::repeat_n(m, u - s + 1));
        }
        out
    }

    /// Zero-based segment number and bounds of the segment holding `t`.
    pub fn segment_containing(&self, t: usize) -> Result<(usize, usize, usize)> {
        if t == 0 || t > self.n {
            return Err(Error::IndexOutOfRange {
                index: t,
                n: self.n,
            });
        }
        let k = self.changepoints.partition_point(|&c| c < t);
        let (s, u) = self.segments().nth(k).expect("segment exists");
        Ok((k, s, u))
    }
}

/// Iterates `(τ_{j}+1, τ_{j+1})` with `τ_0 = 0`, `τ_{m+1} = n`.
pub fn segment_bounds(
    changepoints: &[usize],
    n: usize,
) -> impl Iterator<Item = (usize, usize)> + '_ {
    let ends = changepoints.iter().copied().chain(std::iter::once(n));
    let starts = std::iter::once(0).chain(changepoints.iter().copied());
    starts.zip(ends).map(|(a, b)| (a + 1, b))
}

/// Detection settings. `beta` is the per-segment penalty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub beta: f64,
    pub sigma2_override: Option<f64>,
    pub min_segment_length: usize,
}

impl DetectorConfig {
    pub fn new(beta: f64) -> Result<Self> {
        let cfg = Self {
            beta,
            sigma2_override: None,
            min_segment_length: 1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_sigma2(mut self, sigma2: f64) -> Self {
        self.sigma2_override = Some(sigma2);
        self
    }

    pub fn with_min_segment_length(mut self, len: usize) -> Self {
        self.min_segment_length = len;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "beta must be finite and > 0, got {}",
                self.beta
            )));
        }
        if let Some(s) = self.sigma2_override {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidSigma(s));
            }
        }
        if self.min_segment_length == 0 {
            return Err(Error::InvalidConfig(
                "min_segment_length must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// SIC-style penalty `2 log n`; the loss is already scaled by σ².
pub fn default_beta(n: usize, _sigma2: f64) -> f64 {
    2.0 * (n as f64).ln()
}

/// Sum over segments of `C(segment) + β`, accumulated left to right.
pub fn penalized_cost<C: SegmentCost>(cm: &C, changepoints: &[usize], beta: f64) -> Result<f64> {
    let n = cm.len();
    let mut prev = 0;
    for &c in changepoints {
        if c <= prev || c >= n {
            return Err(Error::InvalidChangepoints(format!(
                "{changepoints:?} must be strictly increasing within 1..{n}"
            )));
        }
        prev = c;
    }
    Ok(segment_bounds(changepoints, n).fold(0.0, |acc, (s, u)| acc + cm.cost(s, u) + beta))
}

/// Best predecessor found so far for one endpoint.
#[derive(Clone, Copy)]
struct Best {
    cost: f64,
    count: u32,
    last: usize,
}

impl Best {
    const NONE: Best = Best {
        cost: f64::INFINITY,
        count: u32::MAX,
        last: 0,
    };

    /// Strictly better under (cost, changepoint count); ties keep the
    /// earlier candidate since candidates are visited in ascending order.
    #[inline]
    fn improved_by(&self, cost: f64, count: u32) -> bool {
        cost < self.cost || (cost == self.cost && count < self.count)
    }
}

fn check_feasible(n: usize, cfg: &DetectorConfig) -> Result<()> {
    cfg.validate()?;
    if n < 2 {
        return Err(Error::EmptyInput { n });
    }
    if cfg.min_segment_length > n {
        return Err(Error::Infeasible {
            n,
            min_len: cfg.min_segment_length,
        });
    }
    Ok(())
}

/// A last-changepoint candidate with the prefix optimum it extends.
#[derive(Clone, Copy)]
struct Candidate {
    at: usize,
    f: f64,
    count: u32,
    /// Step from which the candidate is dropped. A candidate dominated at
    /// step t only loses to t once t itself is admissible (t + min_len).
    dead_from: usize,
    /// Parameter values θ for which the candidate's last segment has not
    /// yet been beaten by a later candidate.
    lo: f64,
    hi: f64,
}

impl Candidate {
    fn new(at: usize, f: f64, count: u32) -> Self {
        Self {
            at,
            f,
            count,
            dead_from: usize::MAX,
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }
}

/// Resumable dynamic program over last-changepoint candidates. With
/// pruning, candidate `t'` is dropped once `F(t') + C(t'+1, t) > F(t)`.
/// When the cost is quadratic in the segment parameter, it is also dropped
/// once no single θ keeps it at or below every later `F(t)` it was compared
/// with, which implies it can never be optimal again.
///
/// The state after step `t` depends only on `y_1..y_t`, so it can be cloned
/// onto another series sharing that prefix and continued there.
#[derive(Clone)]
pub(crate) struct Dp {
    beta: f64,
    min_len: usize,
    prune: bool,
    /// f[t] = optimal penalized cost of y_1..y_t, count[t] its segment count
    f: Vec<f64>,
    count: Vec<u32>,
    back: Vec<usize>,
    candidates: Vec<Candidate>,
    scratch: Vec<f64>,
    /// Next step to process.
    next: usize,
}

impl Dp {
    pub(crate) fn new(n: usize, cfg: &DetectorConfig, prune: bool) -> Result<Self> {
        check_feasible(n, cfg)?;
        let mut f = vec![f64::INFINITY; n + 1];
        f[0] = 0.0;
        Ok(Self {
            beta: cfg.beta,
            min_len: cfg.min_segment_length,
            prune,
            f,
            count: vec![0; n + 1],
            back: vec![0; n + 1],
            candidates: vec![Candidate::new(0, 0.0, 0)],
            scratch: Vec::new(),
            next: cfg.min_segment_length,
        })
    }

    /// The processed prefix carried over to a series of length `n`.
    pub(crate) fn with_len(&self, n: usize) -> Self {
        let keep = self.next.min(n + 1);
        let resize = |v: &[f64], fill: f64| {
            let mut out = v[..keep].to_vec();
            out.resize(n + 1, fill);
            out
        };
        let mut count = self.count[..keep].to_vec();
        count.resize(n + 1, 0);
        let mut back = self.back[..keep].to_vec();
        back.resize(n + 1, 0);
        Self {
            f: resize(&self.f, f64::INFINITY),
            count,
            back,
            candidates: self.candidates.clone(),
            scratch: Vec::new(),
            ..*self
        }
    }

    /// Processes steps up to and including `upto`.
    pub(crate) fn advance<C: SegmentCost>(&mut self, cm: &C, upto: usize) {
        let (beta, min_len) = (self.beta, self.min_len);
        while self.next <= upto {
            let t = self.next;
            self.next += 1;
            // t - min_len becomes admissible as a last changepoint at step t
            let newly = t - min_len;
            if newly > 0 && self.f[newly].is_finite() {
                self.candidates
                    .push(Candidate::new(newly, self.f[newly], self.count[newly]));
            }
            if self.prune {
                self.candidates.retain(|c| c.dead_from > t);
            }

            let mut best = Best::NONE;
            self.scratch.clear();
            for c in &self.candidates {
                let seg = c.f + cm.cost(c.at + 1, t);
                self.scratch.push(seg);
                let total = seg + beta;
                let cnt = c.count + 1;
                if best.improved_by(total, cnt) {
                    best = Best {
                        cost: total,
                        count: cnt,
                        last: c.at,
                    };
                }
            }
            self.f[t] = best.cost;
            self.count[t] = best.count;
            self.back[t] = best.last;

            if self.prune {
                let bound = best.cost + PRUNE_SLACK * (1.0 + best.cost.abs());
                for (c, &seg) in self.candidates.iter_mut().zip(&self.scratch) {
                    if c.dead_from != usize::MAX {
                        continue;
                    }
                    let dominated = seg > bound
                        || match cm.quadratic(c.at + 1, t) {
                            Some((w, m)) => {
                                let r = ((bound - seg) / w).sqrt();
                                c.lo = c.lo.max(m - r);
                                c.hi = c.hi.min(m + r);
                                c.lo > c.hi
                            }
                            None => false,
                        };
                    if dominated {
                        c.dead_from = t + min_len;
                    }
                }
            }
        }
    }

    /// Backtracks the optimum over the full series.
    pub(crate) fn finish<C: SegmentCost>(mut self, cm: &C) -> Segmentation {
        let n = cm.len();
        self.advance(cm, n);
        let mut changepoints = Vec::with_capacity(self.count[n].saturating_sub(1) as usize);
        let mut t = self.back[n];
        while t > 0 {
            changepoints.push(t);
            t = self.back[t];
        }
        changepoints.reverse();

        let segment_means = segment_bounds(&changepoints, n)
            .map(|(s, u)| cm.fitted(s, u))
            .collect();
        Segmentation {
            changepoints,
            n,
            segment_means,
            total_penalized_cost: self.f[n],
        }
    }
}

fn solve<C: SegmentCost>(cm: &C, cfg: &DetectorConfig, prune: bool) -> Result<Segmentation> {
    Ok(Dp::new(cm.len(), cfg, prune)?.finish(cm))
}

/// Pruned exact linear time search (PELT) with pruning constant K = 0,
/// plus parameter-range pruning for quadratic costs. Same result as
/// [`optimal_partition`].
pub fn pelt<C: SegmentCost>(cm: &C, cfg: &DetectorConfig) -> Result<Segmentation> {
    solve(cm, cfg, true)
}

/// Unpruned O(n²) optimal partitioning.
pub fn optimal_partition<C: SegmentCost>(cm: &C, cfg: &DetectorConfig) -> Result<Segmentation> {
    solve(cm, cfg, false)
}

/// Brute-force enumeration of every segmentation; `n <= 14`.
pub fn exhaustive<C: SegmentCost>(cm: &C, cfg: &DetectorConfig) -> Result<Segmentation> {
    let n = cm.len();
    if n > EXHAUSTIVE_MAX_N {
        return Err(Error::TooLarge {
            n,
            max: EXHAUSTIVE_MAX_N,
        });
    }
    check_feasible(n, cfg)?;

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut cps = Vec::with_capacity(n);
    for mask in 0u32..(1u32 << (n - 1)) {
        cps.clear();
        cps.extend((1..n).filter(|&i| mask & (1 << (i - 1)) != 0));
        if segment_bounds(&cps, n).any(|(s, u)| u + 1 - s < cfg.min_segment_length) {
            continue;
        }
        let cost = penalized_cost(cm, &cps, cfg.beta)?;
        let better = match &best {
            None => true,
            Some((bc, bcps)) => {
                cost < *bc
                    || (cost == *bc
                        && (cps.len() < bcps.len()
                            || (cps.len() == bcps.len() && cps.iter().rev().lt(bcps.iter().rev()))))
            }
        };
        if better {
            best = Some((cost, cps.clone()));
        }
    }
    let (_, cps) = best.expect("single-segment solution is always feasible");
    Segmentation::from_changepoints(cm, cps, cfg.beta)
}

/// σ² used for detection: the override when set, else the robust estimate.
pub fn resolve_sigma2(ts: &TimeSeries, cfg: &DetectorConfig) -> Result<f64> {
    Ok(SeriesStats::compute(ts, cfg.sigma2_override)?.sigma2)
}

/// Builds the cost model and runs [`pelt`]. Returns the segmentation and the
/// σ² it was fitted with.
pub fn detect(ts: &TimeSeries, cfg: &DetectorConfig) -> Result<(Segmentation, f64)> {
    let sigma2 = resolve_sigma2(ts, cfg)?;
    let cm = CostModel::new(ts, sigma2)?;
    Ok((pelt(&cm, cfg)?, sigma2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(v: &[f64], sigma2: f64) -> CostModel {
        CostModel::new(&TimeSeries::new(v.to_vec()).unwrap(), sigma2).unwrap()
    }

    fn cfg(beta: f64) -> DetectorConfig {
        DetectorConfig::new(beta).unwrap()
    }

    #[test]
    fn default_beta_values() {
        let e2 = std::f64::consts::E.powi(2);
        assert!((2.0 * e2.ln() - 4.0).abs() < 1e-12);
        assert!((default_beta(1000, 1.0) - 13.815510557964274).abs() < 1e-12);
        assert!((default_beta(200, 1.0) - 10.596634733096073).abs() < 1e-12);
    }

    #[test]
    fn step_series() {
        let m = cm(&[0.0, 0.0, 0.0, 10.0, 10.0, 10.0], 1.0);
        for seg in [
            pelt(&m, &cfg(1.0)).unwrap(),
            optimal_partition(&m, &cfg(1.0)).unwrap(),
            exhaustive(&m, &cfg(1.0)).unwrap(),
        ] {
            assert_eq!(seg.changepoints, vec![3]);
            assert_eq!(seg.segment_means, vec![0.0, 10.0]);
            assert_eq!(seg.total_penalized_cost, 2.0);
        }
        assert_eq!(penalized_cost(&m, &[3], 1.0).unwrap(), 2.0);
    }

    #[test]
    fn two_points() {
        let m = cm(&[0.0, 10.0], 1.0);
        assert_eq!(exhaustive(&m, &cfg(0.5)).unwrap().changepoints, vec![1]);
        assert!(exhaustive(&m, &cfg(100.0)).unwrap().changepoints.is_empty());
        let m = cm(&[4.0, 4.0], 1.0);
        assert!(optimal_partition(&m, &cfg(1.0))
            .unwrap()
            .changepoints
            .is_empty());
    }

    #[test]
    fn constant_short_series() {
        for n in 2..=3 {
            let m = cm(&vec![1.5; n], 1.0);
            assert!(exhaustive(&m, &cfg(0.1)).unwrap().changepoints.is_empty());
            assert_eq!(penalized_cost(&m, &[], 0.1).unwrap(), 0.1);
        }
    }

    #[test]
    fn penalty_dominates() {
        let m = cm(&[0.0, 1.0, 0.0, 1.0, 0.5], 1.0);
        let whole = m.segment_cost(1, 5).unwrap();
        let seg = pelt(&m, &cfg(whole + 1.0)).unwrap();
        assert!(seg.changepoints.is_empty());
    }

    #[test]
    fn invalid_changepoints() {
        let m = cm(&[0.0, 1.0, 2.0], 1.0);
        for bad in [vec![0], vec![3], vec![2, 1], vec![1, 1]] {
            assert!(matches!(
                penalized_cost(&m, &bad, 1.0),
                Err(Error::InvalidChangepoints(_))
            ));
        }
    }

    #[test]
    fn exhaustive_guard() {
        let m = cm(&[0.0; 15], 1.0);
        assert!(matches!(
            exhaustive(&m, &cfg(1.0)),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn tie_prefers_fewer_then_earlier() {
        // [0, 2, 0] with σ²=1: one split costs C = 2 either way; both single
        // splits tie at 2 + 2β; no split costs 8/3 + β.
        let m = cm(&[0.0, 2.0, 0.0], 1.0);
        let beta = 2.0 / 3.0;
        // no split: 8/3 + 2/3 = 10/3; one split: 2 + 4/3 = 10/3; two splits: 0 + 2 = 2
        let seg = exhaustive(&m, &cfg(beta)).unwrap();
        assert_eq!(seg.changepoints, vec![1, 2]);
        let beta = 2.0;
        // none: 8/3 + 2 = 4.67; one: 2 + 4 = 6; two: 6
        assert!(pelt(&m, &cfg(beta)).unwrap().changepoints.is_empty());
        // exact tie: [0,0,1,1] with beta equal to the gain of the split
        let m = cm(&[0.0, 0.0, 1.0, 1.0], 1.0);
        let seg = pelt(&m, &cfg(1.0)).unwrap();
        assert!(seg.changepoints.is_empty(), "{seg:?}");
    }

    #[test]
    fn min_segment_length() {
        let m = cm(&[0.0, 0.0, 0.0, 9.0, 0.0, 0.0, 0.0], 1.0);
        let c = cfg(1.0);
        assert_eq!(pelt(&m, &c).unwrap().changepoints, vec![3, 4]);
        let c2 = cfg(1.0).with_min_segment_length(2);
        let p = pelt(&m, &c2).unwrap();
        assert_eq!(
            p.changepoints,
            optimal_partition(&m, &c2).unwrap().changepoints
        );
        assert_eq!(p.changepoints, exhaustive(&m, &c2).unwrap().changepoints);
        assert!(p.segments().all(|(s, u)| u - s + 1 >= 2));
        assert!(matches!(
            pelt(&m, &cfg(1.0).with_min_segment_length(8)),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn labels_and_segments() {
        let m = cm(&[0.0; 7], 1.0);
        let s = Segmentation::from_changepoints(&m, vec![3, 4], 1.0).unwrap();
        assert_eq!(s.labels(), vec![1, 1, 1, 2, 3, 3, 3]);
        assert_eq!(
            s.segments().collect::<Vec<_>>(),
            vec![(1, 3), (4, 4), (5, 7)]
        );
        assert_eq!(s.segment_containing(4).unwrap(), (1, 4, 4));
        assert_eq!(s.segment_containing(7).unwrap(), (2, 5, 7));
        assert!(s.segment_containing(8).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(DetectorConfig::new(0.0).is_err());
        assert!(DetectorConfig::new(f64::NAN).is_err());
        assert!(cfg(1.0).with_min_segment_length(0).validate().is_err());
        assert!(cfg(1.0).with_sigma2(-2.0).validate().is_err());
    }

    #[test]
    fn resumed_state_matches_fresh_fit() {
        let mut rng = crate::rng::SimRng::seed_from_u64(5);
        for min_len in 1..=3 {
            let y: Vec<f64> = (0..60)
                .map(|i| rng.normal(if i < 30 { 0.0 } else { 2.5 }, 1.0))
                .collect();
            let config = cfg(6.0).with_min_segment_length(min_len);
            let cm = CostModel::from_values(&y, 1.0).unwrap();
            let mut shared = Dp::new(y.len(), &config, true).unwrap();
            for t in 1..=y.len() {
                let mut deleted = y.clone();
                deleted.remove(t - 1);
                let dm = CostModel::from_values(&deleted, 1.0).unwrap();
                assert_eq!(
                    shared.with_len(deleted.len()).finish(&dm),
                    pelt(&dm, &config).unwrap()
                );

                let mut spiked = y.clone();
                spiked[t - 1] += 20.0;
                let sm = CostModel::from_values(&spiked, 1.0).unwrap();
                assert_eq!(
                    shared.with_len(spiked.len()).finish(&sm),
                    pelt(&sm, &config).unwrap()
                );
                shared.advance(&cm, t);
            }
        }
    }
}
