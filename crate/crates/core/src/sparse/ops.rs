use super::csr::{IndexSet, SparseMatrix};
use crate::error::{Error, Result};

fn check_bound(set: &IndexSet, bound: usize, what: &str) -> Result<()> {
    match set.as_slice().last() {
        Some(&last) if last >= bound => Err(Error::Input(format!(
            "{what} index {last} out of range for dimension {bound}"
        ))),
        _ => Ok(()),
    }
}

/// `A(rows, cols)` with local contiguous indexing.
pub fn extract_submatrix(a: &SparseMatrix, rows: &IndexSet, cols: &IndexSet) -> Result<SparseMatrix> {
    check_bound(rows, a.nrows(), "row")?;
    check_bound(cols, a.ncols(), "column")?;
    let col_map = cols.local_map(a.ncols());
    let mut row_offsets = Vec::with_capacity(rows.len() + 1);
    let mut col_indices = Vec::new();
    let mut values = Vec::new();
    row_offsets.push(0);
    for r in rows.iter() {
        for (c, v) in a.row(r) {
            let local = col_map[c];
            if local != usize::MAX {
                col_indices.push(local);
                values.push(v);
            }
        }
        row_offsets.push(col_indices.len());
    }
    SparseMatrix::try_new(rows.len(), cols.len(), row_offsets, col_indices, values)
}

/// `y = A x`, summing each row left to right.
pub fn spmv(a: &SparseMatrix, x: &[f64]) -> Result<Vec<f64>> {
    let mut y = vec![0.0; a.nrows()];
    spmv_into(a, x, &mut y)?;
    Ok(y)
}

pub fn spmv_into(a: &SparseMatrix, x: &[f64], y: &mut [f64]) -> Result<()> {
    if x.len() != a.ncols() {
        return Err(Error::DimensionMismatch {
            op: "spmv",
            expected: a.ncols(),
            got: x.len(),
        });
    }
    if y.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            op: "spmv output",
            expected: a.nrows(),
            got: y.len(),
        });
    }
    let (offsets, cols, vals) = (a.row_offsets(), a.col_indices(), a.values());
    for (r, out) in y.iter_mut().enumerate() {
        let mut sum = 0.0;
        for k in offsets[r]..offsets[r + 1] {
            sum += vals[k] * x[cols[k]];
        }
        *out = sum;
    }
    Ok(())
}

/// Galerkin product `Pᵀ A P` with `P` stored fine-by-coarse.
///
/// When `A` is exactly symmetric the result is symmetrized by averaging
/// mirrored entries, removing round-off asymmetry.
pub fn triple_product(p: &SparseMatrix, a: &SparseMatrix) -> Result<SparseMatrix> {
    if a.nrows() != a.ncols() {
        return Err(Error::Input("triple_product needs a square operator".into()));
    }
    if p.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            op: "triple_product",
            expected: a.ncols(),
            got: p.nrows(),
        });
    }
    let ap = a.matmul(p)?;
    let coarse = p.transpose().matmul(&ap)?;
    if a.is_symmetric() {
        Ok(coarse.add(&coarse.transpose())?.scale(0.5))
    } else {
        Ok(coarse)
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}
