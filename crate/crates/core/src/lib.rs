// SPDX-License-Identifier: MIT OR Apache-2.0

#![forbid(unsafe_code)]

pub mod cost;
pub mod detect;
pub mod error;
pub mod influence;
pub mod rng;
pub mod series;
pub mod simulate;
pub mod viz;

pub use cost::{build_cost, point_cost, CostModel, SegmentCost};
pub use detect::{
    default_beta, detect, exhaustive, optimal_partition, pelt, penalized_cost, DetectorConfig,
    Segmentation,
};
pub use error::{Error, Result};
pub use influence::{
    run_influence, Alteration, AlterationRun, InfluenceOptions, InfluenceReport, LabeledSeries,
    Method, StabilityStatus,
};
pub use series::{data_range, estimate_sigma2, load_csv, Column, SeriesStats, TimeSeries};
