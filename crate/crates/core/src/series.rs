// SPDX-License-Identifier: MIT OR Apache-2.0

//! Observed sequences, CSV ingestion and the dataset-level statistics that
//! parameterize detection (noise variance) and contamination (range).
//!
//! Public indices are 1-based: `t` ranges over `1..=n`.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Consistency constant of the MAD under Gaussian noise.
const MAD_NORMAL_SCALE: f64 = 0.6745;

/// An ordered, fully observed univariate series with at least two values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeSeries {
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::EmptyInput { n: values.len() });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                row: pos + 1,
                column: 1,
                message: format!("non-finite value {}", values[pos]),
            });
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at 1-based position `t`.
    pub fn get(&self, t: usize) -> Result<f64> {
        self.check_index(t)?;
        Ok(self.values[t - 1])
    }

    pub(crate) fn check_index(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.len() {
            return Err(Error::IndexOutOfRange {
                index: t,
                n: self.len(),
            });
        }
        Ok(())
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl TryFrom<Vec<f64>> for TimeSeries {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<TimeSeries> for Vec<f64> {
    fn from(ts: TimeSeries) -> Self {
        ts.values
    }
}

/// Summary statistics shared by the detector and the contamination rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub min: f64,
    pub max: f64,
    pub range: f64,
    pub sigma2: f64,
}

impl SeriesStats {
    /// Computes min/max/range and either validates `sigma2_override` or
    /// estimates the noise variance from the data.
    pub fn compute(ts: &TimeSeries, sigma2_override: Option<f64>) -> Result<Self> {
        let (min, max) = min_max(ts.values());
        let sigma2 = match sigma2_override {
            Some(s) if s.is_finite() && s > 0.0 => s,
            Some(s) => return Err(Error::InvalidSigma(s)),
            None => estimate_sigma2(ts)?,
        };
        Ok(Self {
            min,
            max,
            range: max - min,
            sigma2,
        })
    }
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// `max(values) - min(values)`.
pub fn data_range(ts: &TimeSeries) -> f64 {
    let (min, max) = min_max(ts.values());
    max - min
}

/// Robust difference-based noise variance:
/// `(MAD(diff(y)) / (0.6745 * sqrt(2)))^2`.
///
/// Mean shifts only touch the few differences that straddle a change, so the
/// median absolute deviation of first differences is insensitive to them.
pub fn estimate_sigma2(ts: &TimeSeries) -> Result<f64> {
    let n = ts.len();
    if n < 3 {
        return Err(Error::TooShort { n, min: 3 });
    }
    let diffs: Vec<f64> = ts.values().windows(2).map(|w| w[1] - w[0]).collect();
    let mad = median_absolute_deviation(diffs);
    if mad.is_nan() || mad <= 0.0 {
        return Err(Error::DegenerateSeries);
    }
    let sigma = mad / (MAD_NORMAL_SCALE * std::f64::consts::SQRT_2);
    Ok(sigma * sigma)
}

fn median_absolute_deviation(mut xs: Vec<f64>) -> f64 {
    let center = median_in_place(&mut xs);
    let mut dev: Vec<f64> = xs.iter().map(|x| (x - center).abs()).collect();
    median_in_place(&mut dev)
}

fn median_in_place(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    if k % 2 == 1 {
        xs[k / 2]
    } else {
        0.5 * (xs[k / 2 - 1] + xs[k / 2])
    }
}

/// Which CSV column to read.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Column {
    /// 1-based column position.
    Index(usize),
    /// Header name; requires a header row.
    Name(String),
}

impl Default for Column {
    fn default() -> Self {
        Column::Index(1)
    }
}

impl std::str::FromStr for Column {
    type Err = std::convert::Infallible;

    /// Integers select by 1-based position, anything else by header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.trim().parse::<usize>() {
            Ok(i) => Column::Index(i),
            Err(_) => Column::Name(s.trim().to_string()),
        })
    }
}

fn parse_field(field: &str, row: usize, column: usize) -> Result<f64> {
    if field.is_empty() {
        return Err(Error::Parse {
            row,
            column,
            message: "missing value".into(),
        });
    }
    let v: f64 = field.parse().map_err(|_| Error::Parse {
        row,
        column,
        message: format!("not a number: {field:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row,
            column,
            message: format!("non-finite value {field:?}"),
        });
    }
    Ok(v)
}

/// Reads one numeric column from RFC-4180 CSV.
///
/// A header row is detected when the selected field of the first record does
/// not parse as a number. Row numbers in errors are 1-based file lines.
pub fn load_csv<R: Read>(source: R, column: Option<&Column>) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let default = Column::default();
    let column = column.unwrap_or(&default);
    let mut records = reader.records();
    let mut values = Vec::new();

    let first = match records.next() {
        None => return Err(Error::EmptyInput { n: 0 }),
        Some(r) => r.map_err(csv_error)?,
    };
    let first_row = first.position().map_or(1, |p| p.line() as usize);

    let col_idx = match column {
        Column::Index(0) => return Err(Error::ColumnNotFound("0 (columns are 1-based)".into())),
        Column::Index(i) => {
            let field = first.get(i - 1).ok_or_else(|| {
                Error::ColumnNotFound(format!("{i} (row {first_row} has {} fields)", first.len()))
            })?;
            // A non-numeric first field marks a header row.
            if field.parse::<f64>().is_ok() {
                values.push(parse_field(field, first_row, *i)?);
            }
            i - 1
        }
        Column::Name(name) => first
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::ColumnNotFound(name.clone()))?,
    };

    for record in records {
        let record = record.map_err(csv_error)?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        let field = record.get(col_idx).ok_or_else(|| Error::Parse {
            row,
            column: col_idx + 1,
            message: "missing field".into(),
        })?;
        values.push(parse_field(field, row, col_idx + 1)?);
    }

    if values.len() < 2 {
        return Err(Error::EmptyInput { n: values.len() });
    }
    TimeSeries::new(values)
}

fn csv_error(e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        row,
        column: 0,
        message: e.to_string(),
    }
}
