// SPDX-License-Identifier: MIT OR Apache-2.0

//! Statistics derived from a full set of alteration runs.

use serde::{Deserialize, Serialize};

use crate::cost::{point_cost, CostModel, SegmentCost};
use crate::detect::Segmentation;
use crate::error::{Error, Result};

use super::{AlterationRun, Method};

/// Mean values are compared after rounding to this many significant digits.
pub const MEAN_SIGNIFICANT_DIGITS: usize = 12;

pub fn round_significant(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{:.*e}", MEAN_SIGNIFICANT_DIGITS - 1, v)
        .parse()
        .expect("formatted float parses")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilityStatus {
    /// Present at its location whenever any other observation is altered.
    Stable,
    /// Moved or deleted by at least one alteration of another observation.
    Unstable,
    /// Bounds a single-observation segment of the original fit.
    Outlier,
}

impl StabilityStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            StabilityStatus::Stable => "stable",
            StabilityStatus::Unstable => "unstable",
            StabilityStatus::Outlier => "outlier",
        }
    }
}

/// Where the original changepoint at `tau` is expected to sit after
/// alteration `t`. A deleted slot counts with the segment on its left, so
/// deleting `tau + 1` shifts the boundary onto the deleted slot.
fn aligned_location(method: Method, tau: usize, t: usize) -> usize {
    match method {
        Method::Delete if t == tau + 1 => tau + 1,
        _ => tau,
    }
}

pub fn classify_changepoints(
    original: &Segmentation,
    runs: &[AlterationRun],
) -> Vec<StabilityStatus> {
    let lengths: Vec<usize> = original.segments().map(|(s, u)| u + 1 - s).collect();
    original
        .changepoints
        .iter()
        .enumerate()
        .map(|(k, &tau)| {
            if lengths[k] == 1 || lengths[k + 1] == 1 {
                return StabilityStatus::Outlier;
            }
            let moved = runs.iter().any(|run| {
                let t = run.alteration.t;
                if t == tau {
                    return false;
                }
                let loc = aligned_location(run.alteration.method, tau, t);
                run.observed_changepoints.binary_search(&loc).is_err()
            });
            if moved {
                StabilityStatus::Unstable
            } else {
                StabilityStatus::Stable
            }
        })
        .collect()
}

/// Provenance of a location in the location-stability plot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocationClass {
    /// An original changepoint, with its status.
    Changepoint(StabilityStatus),
    /// Any other index.
    Other,
}

/// Observed-minus-expected changepoint occurrence counts per index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocationStability {
    pub delta: Vec<i64>,
    pub class: Vec<LocationClass>,
}

pub fn location_stability(
    original: &Segmentation,
    statuses: &[StabilityStatus],
    runs: &[AlterationRun],
) -> LocationStability {
    let n = original.n;
    let mut delta = vec![0i64; n];
    for run in runs {
        for &j in &run.observed_changepoints {
            delta[j - 1] += 1;
        }
        for j in run.expected.changepoints() {
            delta[j - 1] -= 1;
        }
    }
    let mut class = vec![LocationClass::Other; n];
    for (&tau, &st) in original.changepoints.iter().zip(statuses) {
        class[tau - 1] = LocationClass::Changepoint(st);
    }
    LocationStability { delta, class }
}

/// Per-index multisets of fitted means across all runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterStability {
    /// For each index, `(mean, occurrences)` sorted by mean.
    pub values: Vec<Vec<(f64, u32)>>,
    /// Mean of the original fit at each index.
    pub original_means: Vec<f64>,
}

impl ParameterStability {
    /// Total number of (index, distinct mean) pairs.
    pub fn distinct_count(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }
}

pub fn parameter_stability(original: &Segmentation, runs: &[AlterationRun]) -> ParameterStability {
    let n = original.n;
    let mut raw: Vec<Vec<f64>> = vec![Vec::with_capacity(runs.len()); n];
    for run in runs {
        for (i, m) in run.observed_segment_means.iter().enumerate() {
            if let Some(m) = m {
                raw[i].push(round_significant(*m));
            }
        }
    }
    let values = raw
        .into_iter()
        .map(|mut vs| {
            vs.sort_by(f64::total_cmp);
            let mut out: Vec<(f64, u32)> = Vec::new();
            for v in vs {
                match out.last_mut() {
                    Some((last, c)) if *last == v => *c += 1,
                    _ => out.push((v, 1)),
                }
            }
            out
        })
        .collect();
    ParameterStability {
        values,
        original_means: original.fitted_values(),
    }
}

/// Dense `n × n` matrix of observed-minus-expected segment numbers.
/// Row `t` is the altered point, column `i` the affected point (1-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InfluenceMatrix {
    n: usize,
    data: Vec<i32>,
}

impl InfluenceMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, t: usize, i: usize) -> i32 {
        self.data[(t - 1) * self.n + (i - 1)]
    }

    pub fn row(&self, t: usize) -> &[i32] {
        &self.data[(t - 1) * self.n..t * self.n]
    }

    pub fn nonzero_count(&self) -> usize {
        self.data.iter().filter(|&&d| d != 0).count()
    }

    /// Non-zero cells as `(t, i, d)`, row-major.
    pub fn sparse(&self) -> Vec<(usize, usize, i32)> {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &d)| d != 0)
            .map(|(k, &d)| (k / self.n + 1, k % self.n + 1, d))
            .collect()
    }

    pub fn from_sparse(n: usize, cells: &[(usize, usize, i32)]) -> Result<Self> {
        let mut m = Self::zeros(n);
        for &(t, i, d) in cells {
            if t == 0 || t > n {
                return Err(Error::IndexOutOfRange { index: t, n });
            }
            if i == 0 || i > n {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
            m.data[(t - 1) * n + (i - 1)] = d;
        }
        Ok(m)
    }

    /// Maximal runs of equal non-zero values within each row, as
    /// `(t, first_i, last_i, d)`.
    pub fn nonzero_runs(&self) -> Vec<(usize, usize, usize, i32)> {
        let mut out = Vec::new();
        for t in 1..=self.n {
            let row = self.row(t);
            let mut i = 0;
            while i < self.n {
                let d = row[i];
                let start = i;
                while i < self.n && row[i] == d {
                    i += 1;
                }
                if d != 0 {
                    out.push((t, start + 1, i, d));
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> i32 {
        self.data.iter().map(|d| d.abs()).max().unwrap_or(0)
    }
}

pub fn influence_matrix(runs: &[AlterationRun]) -> InfluenceMatrix {
    let n = runs.len();
    let mut m = InfluenceMatrix::zeros(n);
    for run in runs {
        let t = run.alteration.t;
        let row = &mut m.data[(t - 1) * n..t * n];
        for (cell, (o, e)) in row
            .iter_mut()
            .zip(run.observed.labels().iter().zip(run.expected.labels()))
        {
            if let (Some(o), Some(e)) = (o, e) {
                *cell = *o as i32 - *e as i32;
            }
        }
    }
    m
}

/// True when contaminating `y_t` to `v` costs more inside its original
/// segment than two extra segments would: `2β < γ(v; θ̂)`, with θ̂ the
/// original mean of the segment holding `t`.
pub fn check_outlier_threshold(
    cm: &CostModel,
    original: &Segmentation,
    t: usize,
    beta: f64,
    v: f64,
) -> Result<bool> {
    if original.n != cm.len() {
        return Err(Error::LengthMismatch {
            expected: cm.len(),
            actual: original.n,
        });
    }
    let (_, s, u) = original.segment_containing(t)?;
    let theta = cm.fitted(s, u);
    Ok(2.0 * beta < point_cost(v, theta, cm.sigma2()))
}
