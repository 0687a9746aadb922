use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::RunRecord;
use crate::error::{Error, Result};

/// Column names and order of the results table.
pub const CSV_HEADER: [&str; 10] = [
    "space",
    "inv_H",
    "n",
    "coarse_dim",
    "iterations",
    "converged",
    "kappa_est",
    "lambda_min",
    "lambda_max",
    "walltime_s",
];

/// One table row per (point, space). Failed solves leave the numeric
/// columns empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub space: String,
    #[serde(rename = "inv_H")]
    pub inv_h: usize,
    /// Elements per side.
    pub n: usize,
    pub coarse_dim: Option<usize>,
    pub iterations: Option<usize>,
    pub converged: bool,
    pub kappa_est: Option<f64>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub walltime_s: Option<f64>,
}

/// Tabular projection of the records.
pub fn csv_rows(records: &[RunRecord]) -> Vec<CsvRow> {
    records
        .iter()
        .flat_map(|r| {
            r.results.iter().map(move |s| {
                let rep = s.report.as_ref();
                CsvRow {
                    space: s.space.name().to_string(),
                    inv_h: r.inv_h,
                    n: r.elements_per_side,
                    coarse_dim: s.coarse_dim,
                    iterations: rep.map(|x| x.iterations),
                    converged: rep.is_some_and(|x| x.converged),
                    kappa_est: rep.map(|x| x.kappa),
                    lambda_min: rep.map(|x| x.lambda_min),
                    lambda_max: rep.map(|x| x.lambda_max),
                    walltime_s: rep.map(|x| x.walltime_s),
                }
            })
        })
        .collect()
}

/// CSV text with the header row always present.
pub fn rows_to_csv(rows: &[CsvRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn emit_csv(records: &[RunRecord], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, rows_to_csv(&csv_rows(records))?)?;
    Ok(())
}

/// Parses a results table, rejecting any header other than [`CSV_HEADER`].
pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Input(format!(
            "unexpected CSV header `{}`, expected `{}`",
            header.iter().collect::<Vec<_>>().join(","),
            CSV_HEADER.join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<CsvRow>> {
    parse_csv(&std::fs::read_to_string(path)?)
}
