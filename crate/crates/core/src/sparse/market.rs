//! Matrix Market coordinate (matrices) and array (vectors) I/O.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::csr::SparseMatrix;
use crate::error::{Error, Result};

pub fn matrix_to_string(a: &SparseMatrix) -> String {
    let mut out = String::new();
    out.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", a.nrows(), a.ncols(), a.nnz());
    for r in 0..a.nrows() {
        for (c, v) in a.row(r) {
            let _ = writeln!(out, "{} {} {:.17e}", r + 1, c + 1, v);
        }
    }
    out
}

pub fn vector_to_string(x: &[f64]) -> String {
    let mut out = String::new();
    out.push_str("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(out, "{} 1", x.len());
    for v in x {
        let _ = writeln!(out, "{v:.17e}");
    }
    out
}

fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('%'))
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Input(format!("matrix market: bad {what}")))
}

/// Parses a `coordinate real` matrix; `symmetric` files are expanded.
pub fn matrix_from_str(text: &str) -> Result<SparseMatrix> {
    let header = text
        .lines()
        .next()
        .ok_or_else(|| Error::Input("matrix market: empty input".into()))?
        .to_ascii_lowercase();
    if !header.starts_with("%%matrixmarket matrix coordinate") {
        return Err(Error::Input(format!("matrix market: unsupported header `{header}`")));
    }
    if header.contains("complex") || header.contains("pattern") {
        return Err(Error::Input("matrix market: only real matrices supported".into()));
    }
    let symmetric = header.contains("symmetric");
    let mut lines = data_lines(text);
    let size = lines
        .next()
        .ok_or_else(|| Error::Input("matrix market: missing size line".into()))?;
    let mut toks = size.split_whitespace();
    let nrows: usize = parse_num(toks.next(), "row count")?;
    let ncols: usize = parse_num(toks.next(), "column count")?;
    let nnz: usize = parse_num(toks.next(), "entry count")?;
    let mut triplets = Vec::with_capacity(if symmetric { 2 * nnz } else { nnz });
    for line in lines.by_ref().take(nnz) {
        let mut toks = line.split_whitespace();
        let r: usize = parse_num(toks.next(), "row index")?;
        let c: usize = parse_num(toks.next(), "column index")?;
        let v: f64 = parse_num(toks.next(), "value")?;
        if r == 0 || c == 0 {
            return Err(Error::Input("matrix market: indices are 1-based".into()));
        }
        triplets.push((r - 1, c - 1, v));
        if symmetric && r != c {
            triplets.push((c - 1, r - 1, v));
        }
    }
    SparseMatrix::from_triplets(nrows, ncols, &triplets)
}

/// Parses a dense `array real` column vector.
pub fn vector_from_str(text: &str) -> Result<Vec<f64>> {
    let header = text.lines().next().unwrap_or_default().to_ascii_lowercase();
    if !header.starts_with("%%matrixmarket matrix array") {
        return Err(Error::Input(format!("matrix market: unsupported header `{header}`")));
    }
    let mut lines = data_lines(text);
    let size = lines
        .next()
        .ok_or_else(|| Error::Input("matrix market: missing size line".into()))?;
    let mut toks = size.split_whitespace();
    let rows: usize = parse_num(toks.next(), "row count")?;
    let cols: usize = parse_num(toks.next(), "column count")?;
    if cols != 1 {
        return Err(Error::Input("matrix market: vector must have one column".into()));
    }
    let values = lines
        .take(rows)
        .map(|l| parse_num(Some(l), "value"))
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != rows {
        return Err(Error::Input("matrix market: truncated vector".into()));
    }
    Ok(values)
}

pub fn write_matrix(path: impl AsRef<Path>, a: &SparseMatrix) -> Result<()> {
    Ok(fs::write(path, matrix_to_string(a))?)
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    matrix_from_str(&fs::read_to_string(path)?)
}

pub fn write_vector(path: impl AsRef<Path>, x: &[f64]) -> Result<()> {
    Ok(fs::write(path, vector_to_string(x))?)
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    vector_from_str(&fs::read_to_string(path)?)
}
