// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cpflux_core::Column;

#[derive(Debug, Parser)]
#[command(
    name = "cpflux",
    version,
    about = "Changepoint detection and influence diagnostics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect changes in mean and plot the segmentation.
    Detect(DetectArgs),
    /// Delete or contaminate every point in turn and report changepoint stability.
    Influence(InfluenceArgs),
    /// Run the single-point deletion simulation study.
    Simulate(SimulateArgs),
}

/// A number or `auto`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AutoValue {
    Auto,
    Value(f64),
}

impl FromStr for AutoValue {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(AutoValue::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(AutoValue::Value(v)),
            _ => Err(format!("expected a finite number or 'auto', got {s:?}")),
        }
    }
}

impl fmt::Display for AutoValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AutoValue::Auto => f.write_str("auto"),
            AutoValue::Value(v) => write!(f, "{v}"),
        }
    }
}

/// Worker count: a positive integer or `auto`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parallelism {
    Auto,
    Threads(usize),
}

impl FromStr for Parallelism {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Parallelism::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Parallelism::Threads(n)),
            _ => Err(format!("expected a positive integer or 'auto', got {s:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Delete,
    Contaminate,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Format {
    Svg,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV file with one observation per row.
    #[arg(long)]
    pub input: PathBuf,
    /// Column to read: 1-based position or header name.
    #[arg(long, default_value = "1")]
    pub column: Column,
    /// Penalty per segment, or `auto` for 2 ln n.
    #[arg(long, default_value = "auto")]
    pub beta: AutoValue,
    /// Noise variance, or `auto` for the difference-based MAD estimate.
    #[arg(long, default_value = "auto")]
    pub sigma2: AutoValue,
    /// Shortest allowed segment.
    #[arg(long, default_value_t = 1)]
    pub min_segment_length: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ParallelArgs {
    /// Worker threads, or `auto`. Falls back to CPFLUX_THREADS.
    #[arg(long)]
    pub parallelism: Option<Parallelism>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Artifacts to write.
    #[arg(long, value_delimiter = ',', default_values = ["svg", "json"])]
    pub format: Vec<Format>,
}

#[derive(Debug, Args)]
pub struct InfluenceArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "both")]
    pub method: MethodArg,
    /// Contamination offset as a multiple of the data range.
    #[arg(long, default_value_t = 2.0)]
    pub multiplier: f64,
    /// Artifacts to write.
    #[arg(long, value_delimiter = ',', default_values = ["svg", "json", "csv"])]
    pub format: Vec<Format>,
    #[command(flatten)]
    pub parallel: ParallelArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 2022)]
    pub seed: u64,
    /// Repetitions per (n, shift) cell.
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    /// Series lengths.
    #[arg(long, value_delimiter = ',', default_values = ["100", "200", "300", "400", "500", "1000"])]
    pub sizes: Vec<usize>,
    /// Mean shifts.
    #[arg(long, value_delimiter = ',', default_values = ["1", "2", "3", "4", "5"])]
    pub shifts: Vec<f64>,
    /// Known noise variance of the simulated series.
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Artifacts to write.
    #[arg(long, value_delimiter = ',', default_values = ["svg", "csv"])]
    pub format: Vec<Format>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub parallel: ParallelArgs,
}
