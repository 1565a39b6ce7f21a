// SPDX-License-Identifier: MIT OR Apache-2.0

//! Machine-readable export of an influence report: one JSON document and a
//! bundle of four CSV tables.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detect::{DetectorConfig, Segmentation};
use crate::error::{Error, Result};
use crate::influence::{
    InfluenceMatrix, InfluenceReport, LocationClass, Method, ParameterStability, StabilityStatus,
};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub beta: f64,
    pub sigma2: f64,
    pub sigma2_estimated: bool,
    pub min_segment_length: usize,
    pub contamination_offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangepointStatus {
    pub changepoint: usize,
    pub status: StabilityStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocationDoc {
    pub delta: Vec<i64>,
    pub class: Vec<LocationClass>,
}

/// Serializable view of an [`InfluenceReport`]. Per-run segmentations are
/// not included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: String,
    pub method: Method,
    pub n: usize,
    pub config: ConfigEcho,
    pub original: Segmentation,
    pub statuses: Vec<ChangepointStatus>,
    pub location_stability: LocationDoc,
    pub parameter_stability: ParameterStability,
    /// Non-zero entries of the influence matrix as `[t, i, d]`.
    pub influence_matrix: Vec<(usize, usize, i32)>,
}

impl ReportDocument {
    pub fn from_report(report: &InfluenceReport) -> Self {
        let DetectorConfig {
            beta,
            sigma2_override,
            min_segment_length,
        } = report.config;
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            method: report.method,
            n: report.n(),
            config: ConfigEcho {
                beta,
                sigma2: report.sigma2,
                sigma2_estimated: sigma2_override.is_none(),
                min_segment_length,
                contamination_offset: report.contamination_offset,
            },
            original: report.original.clone(),
            statuses: report
                .original
                .changepoints
                .iter()
                .zip(&report.statuses)
                .map(|(&changepoint, &status)| ChangepointStatus {
                    changepoint,
                    status,
                })
                .collect(),
            location_stability: LocationDoc {
                delta: report.location.delta.clone(),
                class: report.location.class.clone(),
            },
            parameter_stability: report.parameter_stability.clone(),
            influence_matrix: report.influence_matrix.sparse(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(s)?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported schema version {:?}",
                doc.schema_version
            )));
        }
        Ok(doc)
    }

    /// Dense matrix rebuilt from the sparse entries.
    pub fn influence_matrix(&self) -> Result<InfluenceMatrix> {
        InfluenceMatrix::from_sparse(self.n, &self.influence_matrix)
    }
}

fn class_name(c: &LocationClass) -> &'static str {
    match c {
        LocationClass::Changepoint(st) => st.as_str(),
        LocationClass::Other => "other",
    }
}

fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(io::Error::from)?;
    for row in rows {
        w.write_record(&row).map_err(io::Error::from)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// The four CSV tables as `(file name, contents)`: statuses, location
/// stability, parameter stability and the sparse influence matrix.
pub fn csv_tables(doc: &ReportDocument) -> Result<Vec<(&'static str, String)>> {
    let statuses = table(
        &["changepoint", "status"],
        doc.statuses
            .iter()
            .map(|s| vec![s.changepoint.to_string(), s.status.as_str().to_string()]),
    )?;

    let loc = &doc.location_stability;
    let location = table(
        &["index", "delta", "class"],
        loc.delta
            .iter()
            .zip(&loc.class)
            .enumerate()
            .map(|(j, (d, c))| {
                vec![
                    (j + 1).to_string(),
                    d.to_string(),
                    class_name(c).to_string(),
                ]
            }),
    )?;

    let ps = &doc.parameter_stability;
    let params = table(
        &["index", "mean", "count", "original_mean"],
        ps.values
            .iter()
            .zip(&ps.original_means)
            .enumerate()
            .flat_map(|(j, (vals, orig))| {
                vals.iter().map(move |(m, c)| {
                    vec![
                        (j + 1).to_string(),
                        m.to_string(),
                        c.to_string(),
                        orig.to_string(),
                    ]
                })
            }),
    )?;

    let matrix = table(
        &["t", "i", "d"],
        doc.influence_matrix
            .iter()
            .map(|(t, i, d)| vec![t.to_string(), i.to_string(), d.to_string()]),
    )?;

    Ok(vec![
        ("statuses.csv", statuses),
        ("location_stability.csv", location),
        ("parameter_stability.csv", params),
        ("influence_matrix.csv", matrix),
    ])
}

/// Writes the tables of [`csv_tables`] into `dir`.
pub fn write_csv_bundle(doc: &ReportDocument, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(4);
    for (name, body) in csv_tables(doc)? {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::influence::{run_influence, InfluenceOptions};
    use crate::{DetectorConfig, TimeSeries};

    fn report(values: Vec<f64>, method: Method) -> InfluenceReport {
        let ts = TimeSeries::new(values).unwrap();
        let cfg = DetectorConfig::new(2.0 * (ts.len() as f64).ln())
            .unwrap()
            .with_sigma2(1.0);
        run_influence(&ts, &cfg, &InfluenceOptions::new(method)).unwrap()
    }

    #[test]
    fn zero_matrix_exports_empty_array() {
        let r = report(vec![0.1, -0.2, 0.3, 0.0, -0.1, 0.2], Method::Delete);
        assert_eq!(r.influence_matrix.nonzero_count(), 0);
        let json = ReportDocument::from_report(&r).to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["influence_matrix"], serde_json::json!([]));
        assert_eq!(v["schema_version"], "1");
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let r = report(
            vec![0.0, 0.3, -0.1, 10.2, 20.0, 19.7, 20.4, 0.0, 0.1],
            Method::Contaminate,
        );
        let doc = ReportDocument::from_report(&r);
        let back = ReportDocument::from_json(&doc.to_json().unwrap()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.influence_matrix().unwrap(), r.influence_matrix);
    }

    #[test]
    fn rejects_unknown_schema() {
        let r = report(vec![0.1, -0.2, 0.3, 0.0], Method::Delete);
        let json = ReportDocument::from_report(&r)
            .to_json()
            .unwrap()
            .replace("\"1\"", "\"2\"");
        assert!(ReportDocument::from_json(&json).is_err());
    }

    #[test]
    fn csv_tables_have_headers_and_rows() {
        let r = report(vec![0.0, 0.3, -0.1, 10.2, 10.0, 9.7, 10.4], Method::Delete);
        let tables = csv_tables(&ReportDocument::from_report(&r)).unwrap();
        assert_eq!(tables.len(), 4);
        let loc = &tables[1].1;
        assert!(loc.starts_with("index,delta,class\n"));
        assert_eq!(loc.lines().count(), 8);
        let matrix = &tables[3].1;
        assert_eq!(
            matrix.lines().count(),
            1 + r.influence_matrix.nonzero_count()
        );
    }
}
