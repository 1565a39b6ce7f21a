// SPDX-License-Identifier: MIT OR Apache-2.0

//! Segment costs for the Normal change-in-mean model.
//!
//! After an O(n) prefix-sum pass every segment cost is an O(1) query:
//! `C(s, t) = (Σy² − (Σy)² / len) / σ²`, the minimum over θ of
//! `Σ (y_j − θ)² / σ²`, attained at the segment mean.

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// A per-segment minimized loss with O(1) queries over 1-based inclusive
/// ranges `s..=t`.
///
/// Implementations must be subadditive under splitting (adding a changepoint
/// never increases the unpenalized cost); pruned search relies on it.
pub trait SegmentCost: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Minimized loss of `y_s..=y_t`. Callers guarantee `1 <= s <= t <= n`.
    fn cost(&self, s: usize, t: usize) -> f64;

    /// The loss minimizer (segment location parameter) for `y_s..=y_t`.
    fn fitted(&self, s: usize, t: usize) -> f64;

    /// `(w, m)` such that the loss of `y_s..=y_t` at a fixed parameter θ is
    /// `cost(s, t) + w (θ − m)²`, for losses of that form. Search uses it to
    /// discard candidates by parameter range.
    fn quadratic(&self, _s: usize, _t: usize) -> Option<(f64, f64)> {
        None
    }
}

/// Single-observation Normal loss `(y − θ)² / σ²`.
pub fn point_cost(y: f64, theta: f64, sigma2: f64) -> f64 {
    let r = y - theta;
    r * r / sigma2
}

/// Prefix sums of `y` and `y²` plus the noise variance.
#[derive(Clone, Debug, PartialEq)]
pub struct CostModel {
    prefix_sum: Vec<f64>,
    prefix_sumsq: Vec<f64>,
    sigma2: f64,
    inv_sigma2: f64,
}

impl CostModel {
    pub fn new(ts: &TimeSeries, sigma2: f64) -> Result<Self> {
        Self::from_values(ts.values(), sigma2)
    }

    pub(crate) fn from_values(values: &[f64], sigma2: f64) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::InvalidSigma(sigma2));
        }
        let mut prefix_sum = Vec::with_capacity(values.len() + 1);
        let mut prefix_sumsq = Vec::with_capacity(values.len() + 1);
        let (mut s, mut ss) = (0.0, 0.0);
        prefix_sum.push(s);
        prefix_sumsq.push(ss);
        for &y in values {
            s += y;
            ss += y * y;
            prefix_sum.push(s);
            prefix_sumsq.push(ss);
        }
        Ok(Self {
            prefix_sum,
            prefix_sumsq,
            sigma2,
            inv_sigma2: 1.0 / sigma2,
        })
    }

    pub fn prefix_sum(&self) -> &[f64] {
        &self.prefix_sum
    }

    pub fn prefix_sumsq(&self) -> &[f64] {
        &self.prefix_sumsq
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    fn check_range(&self, s: usize, t: usize) -> Result<()> {
        let n = self.len();
        if s == 0 || s > n {
            return Err(Error::IndexOutOfRange { index: s, n });
        }
        if t < s || t > n {
            return Err(Error::IndexOutOfRange { index: t, n });
        }
        Ok(())
    }

    /// Checked [`SegmentCost::cost`].
    pub fn segment_cost(&self, s: usize, t: usize) -> Result<f64> {
        self.check_range(s, t)?;
        Ok(self.cost(s, t))
    }

    /// Checked arithmetic mean of `y_s..=y_t`.
    pub fn segment_mean(&self, s: usize, t: usize) -> Result<f64> {
        self.check_range(s, t)?;
        Ok(self.fitted(s, t))
    }
}

/// Shorthand for [`CostModel::new`].
pub fn build_cost(ts: &TimeSeries, sigma2: f64) -> Result<CostModel> {
    CostModel::new(ts, sigma2)
}

impl SegmentCost for CostModel {
    fn len(&self) -> usize {
        self.prefix_sum.len() - 1
    }

    #[inline]
    fn cost(&self, s: usize, t: usize) -> f64 {
        debug_assert!(1 <= s && s <= t && t <= self.len());
        if s == t {
            return 0.0;
        }
        let len = (t - s + 1) as f64;
        let sum = self.prefix_sum[t] - self.prefix_sum[s - 1];
        let sumsq = self.prefix_sumsq[t] - self.prefix_sumsq[s - 1];
        // cancellation can leave a tiny negative residual
        ((sumsq - sum * sum / len) * self.inv_sigma2).max(0.0)
    }

    #[inline]
    fn fitted(&self, s: usize, t: usize) -> f64 {
        debug_assert!(1 <= s && s <= t && t <= self.len());
        (self.prefix_sum[t] - self.prefix_sum[s - 1]) / (t - s + 1) as f64
    }

    #[inline]
    fn quadratic(&self, s: usize, t: usize) -> Option<(f64, f64)> {
        Some(((t - s + 1) as f64 * self.inv_sigma2, self.fitted(s, t)))
    }
}
