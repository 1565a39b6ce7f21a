// SPDX-License-Identifier: MIT OR Apache-2.0

//! The rolling alteration procedure: every observation in turn is deleted
//! or contaminated, the detector is re-run on the altered series, and the
//! observed segmentation is compared with the one expected from the
//! alteration alone.

mod labels;
mod stats;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::CostModel;
use crate::detect::{pelt, DetectorConfig, Segmentation};
use crate::error::{Error, Result};
use crate::series::{data_range, estimate_sigma2, TimeSeries};

pub use labels::{
    align_observed, expected_contamination, expected_deletion, expected_for, LabeledSeries,
};
pub use stats::{
    check_outlier_threshold, classify_changepoints, influence_matrix, location_stability,
    parameter_stability, round_significant, InfluenceMatrix, LocationClass, LocationStability,
    ParameterStability, StabilityStatus, MEAN_SIGNIFICANT_DIGITS,
};

/// Default contamination offset as a multiple of the data range.
pub const DEFAULT_CONTAMINATION_MULTIPLIER: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Delete,
    Contaminate,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Delete => "delete",
            Method::Contaminate => "contaminate",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "delete" | "deletion" => Ok(Method::Delete),
            "contaminate" | "contamination" | "outlier" => Ok(Method::Contaminate),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

/// One alteration of the original series at 1-based index `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alteration {
    pub method: Method,
    pub t: usize,
    /// Added to `y_t` under contamination; ignored for deletion.
    pub contamination_offset: f64,
}

impl Alteration {
    pub fn apply(&self, ts: &TimeSeries) -> Result<TimeSeries> {
        match self.method {
            Method::Delete => apply_deletion(ts, self.t),
            Method::Contaminate => apply_contamination(ts, self.t, self.contamination_offset),
        }
    }
}

/// The series without `y_t`.
pub fn apply_deletion(ts: &TimeSeries, t: usize) -> Result<TimeSeries> {
    ts.check_index(t)?;
    if ts.len() < 3 {
        return Err(Error::TooShort {
            n: ts.len(),
            min: 3,
        });
    }
    let mut v = ts.values().to_vec();
    v.remove(t - 1);
    TimeSeries::new(v)
}

/// The series with `offset` added to `y_t`.
pub fn apply_contamination(ts: &TimeSeries, t: usize, offset: f64) -> Result<TimeSeries> {
    ts.check_index(t)?;
    if !offset.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "contamination offset must be finite, got {offset}"
        )));
    }
    let mut v = ts.values().to_vec();
    v[t - 1] += offset;
    TimeSeries::new(v)
}

/// Result of re-running detection on one altered series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlterationRun {
    pub alteration: Alteration,
    pub observed: LabeledSeries,
    pub expected: LabeledSeries,
    /// Changepoints of `observed`, in original coordinates.
    pub observed_changepoints: Vec<usize>,
    /// Fitted mean (on the altered data) at each original index.
    pub observed_segment_means: Vec<Option<f64>>,
}

/// Options for [`run_influence`].
#[derive(Clone, Debug, PartialEq)]
pub struct InfluenceOptions {
    pub method: Method,
    /// Contamination offset as a multiple of the data range.
    pub multiplier: f64,
    /// Re-estimate σ² on every altered series instead of reusing the fit's.
    pub reestimate_sigma2: bool,
    /// Worker threads; `None` uses the global pool.
    pub parallelism: Option<usize>,
}

impl InfluenceOptions {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            multiplier: DEFAULT_CONTAMINATION_MULTIPLIER,
            reestimate_sigma2: false,
            parallelism: None,
        }
    }
}

/// Everything the four diagnostics are drawn from.
#[derive(Clone, Debug, PartialEq)]
pub struct InfluenceReport {
    pub data: TimeSeries,
    pub original: Segmentation,
    pub method: Method,
    pub config: DetectorConfig,
    pub sigma2: f64,
    pub contamination_offset: f64,
    pub runs: Vec<AlterationRun>,
    pub statuses: Vec<StabilityStatus>,
    pub location: LocationStability,
    pub parameter_stability: ParameterStability,
    pub influence_matrix: InfluenceMatrix,
}

impl InfluenceReport {
    pub fn n(&self) -> usize {
        self.original.n
    }

    /// `(stable, unstable, outlier)` counts.
    pub fn status_counts(&self) -> (usize, usize, usize) {
        self.statuses
            .iter()
            .fold((0, 0, 0), |(s, u, o), st| match st {
                StabilityStatus::Stable => (s + 1, u, o),
                StabilityStatus::Unstable => (s, u + 1, o),
                StabilityStatus::Outlier => (s, u, o + 1),
            })
    }
}

fn run_one(
    ts: &TimeSeries,
    original: &Segmentation,
    cfg: &DetectorConfig,
    sigma2: f64,
    reestimate: bool,
    alteration: Alteration,
) -> Result<AlterationRun> {
    let n = ts.len();
    let altered = alteration.apply(ts)?;
    let sigma2 = if reestimate {
        estimate_sigma2(&altered)?
    } else {
        sigma2
    };
    let cm = CostModel::new(&altered, sigma2)?;
    let seg = pelt(&cm, cfg)?;

    let t = alteration.t;
    let observed = align_observed(&seg, alteration.method, t, n)?;
    let expected = expected_for(alteration.method, original, t)?;

    let rounded: Vec<f64> = seg
        .segment_means
        .iter()
        .map(|&m| round_significant(m))
        .collect();
    let mut means: Vec<Option<f64>> = Vec::with_capacity(n);
    for ((s, u), &m) in seg.segments().zip(&rounded) {
        means.extend(std::iter::repeat_n(Some(m), u - s + 1));
    }
    if alteration.method == Method::Delete {
        means.insert(t - 1, None);
    }

    Ok(AlterationRun {
        alteration,
        observed_changepoints: observed.changepoints(),
        observed,
        expected,
        observed_segment_means: means,
    })
}

/// Detects on the original series, then rolls the alteration through every
/// index `t = 1..=n` and assembles the diagnostics.
///
/// Every altered fit reuses the original β and (unless re-estimation is
/// requested) the original σ². Output does not depend on thread count.
pub fn run_influence(
    ts: &TimeSeries,
    cfg: &DetectorConfig,
    opts: &InfluenceOptions,
) -> Result<InfluenceReport> {
    let sigma2 = match cfg.sigma2_override {
        Some(s) => s,
        None => estimate_sigma2(ts)?,
    };
    let cm = CostModel::new(ts, sigma2)?;
    let original = pelt(&cm, cfg)?;
    run_influence_from(ts, cfg, opts, original, sigma2)
}

/// As [`run_influence`] with an already fitted original segmentation.
pub fn run_influence_from(
    ts: &TimeSeries,
    cfg: &DetectorConfig,
    opts: &InfluenceOptions,
    original: Segmentation,
    sigma2: f64,
) -> Result<InfluenceReport> {
    cfg.validate()?;
    if !(opts.multiplier.is_finite() && opts.multiplier > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "contamination multiplier must be > 0, got {}",
            opts.multiplier
        )));
    }
    let n = ts.len();
    if original.n != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: original.n,
        });
    }
    if opts.method == Method::Delete && n < 3 {
        return Err(Error::TooShort { n, min: 3 });
    }
    let offset = opts.multiplier * data_range(ts);
    let reestimate = opts.reestimate_sigma2;

    let work = || -> Result<Vec<AlterationRun>> {
        (1..=n)
            .into_par_iter()
            .map(|t| {
                let alteration = Alteration {
                    method: opts.method,
                    t,
                    contamination_offset: offset,
                };
                run_one(ts, &original, cfg, sigma2, reestimate, alteration)
            })
            .collect()
    };
    let runs = match opts.parallelism {
        Some(p) => rayon::ThreadPoolBuilder::new()
            .num_threads(p.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };

    let statuses = classify_changepoints(&original, &runs);
    let location = location_stability(&original, &statuses, &runs);
    let parameter_stability = parameter_stability(&original, &runs);
    let influence_matrix = influence_matrix(&runs);

    Ok(InfluenceReport {
        data: ts.clone(),
        original,
        method: opts.method,
        config: cfg.clone(),
        sigma2,
        contamination_offset: offset,
        runs,
        statuses,
        location,
        parameter_stability,
        influence_matrix,
    })
}
