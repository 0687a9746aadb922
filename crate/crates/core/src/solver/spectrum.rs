use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::schwarz::Preconditioner;
use crate::error::{Error, Result};
use crate::sparse::{factorize, SparseMatrix};

/// Default dof cap for dense spectra.
pub const SPECTRUM_CAP: usize = 5000;

/// Full spectrum of `M⁻¹ A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    pub size: usize,
    /// Eigenvalues that came out non-positive (round-off audit; zero for SPD pencils).
    pub nonpositive: usize,
    /// `max |C - Cᵀ| / max |C|` of the symmetric form before symmetrization.
    pub symmetry_defect: f64,
}

impl SpectrumReport {
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::NAN)
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::NAN)
    }

    pub fn condition(&self) -> f64 {
        self.lambda_max() / self.lambda_min()
    }
}

/// Eigenvalues of `M⁻¹ A` through the similar symmetric matrix `Kᵀ M⁻¹ K`,
/// where `A = K Kᵀ` is the sparse Cholesky factorization of `A`.
pub fn spectrum(a: &SparseMatrix, m: &dyn Preconditioner, cap: usize) -> Result<SpectrumReport> {
    let n = a.nrows();
    if n > cap {
        return Err(Error::SizeCap { size: n, cap });
    }
    if m.dim() != n {
        return Err(Error::DimensionMismatch {
            op: "spectrum",
            expected: n,
            got: m.dim(),
        });
    }
    let k = factorize(a, true)?
        .cholesky_factor()
        .expect("SPD factorization is Cholesky");
    let kt = k.transpose();
    let mut c = DMatrix::<f64>::zeros(n, n);
    let mut column = vec![0.0; n];
    for j in 0..n {
        column.fill(0.0);
        for (r, v) in kt.row(j) {
            column[r] = v;
        }
        let w = m.apply(&column);
        for i in 0..n {
            c[(i, j)] = kt.row(i).map(|(r, v)| v * w[r]).sum();
        }
    }
    let scale = c.amax();
    let mut defect: f64 = 0.0;
    for j in 0..n {
        for i in 0..j {
            let (x, y) = (c[(i, j)], c[(j, i)]);
            defect = defect.max((x - y).abs());
            let avg = 0.5 * (x + y);
            c[(i, j)] = avg;
            c[(j, i)] = avg;
        }
    }
    let mut eigenvalues: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    Ok(SpectrumReport {
        nonpositive: eigenvalues.iter().filter(|&&l| l <= 0.0).count(),
        eigenvalues,
        size: n,
        symmetry_defect: if scale > 0.0 { defect / scale } else { 0.0 },
    })
}
