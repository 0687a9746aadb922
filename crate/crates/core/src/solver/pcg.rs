use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::schwarz::Preconditioner;
use crate::error::{Error, Result};
use crate::sparse::{dot, norm2, spmv_into, SparseMatrix};

/// Outcome of a preconditioned CG run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// `‖r_k‖₂ / ‖r_0‖₂` of the unpreconditioned residual, starting with `k = 0`.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// Extreme Ritz values of the Lanczos matrix built from the CG coefficients.
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
    pub walltime_s: f64,
}

impl SolveReport {
    /// Equality ignoring wall time.
    pub fn same_result(&self, other: &SolveReport) -> bool {
        SolveReport {
            walltime_s: 0.0,
            ..self.clone()
        } == SolveReport {
            walltime_s: 0.0,
            ..other.clone()
        }
    }

    pub fn history_csv(&self) -> String {
        let mut out = String::from("iteration,relative_residual\n");
        for (k, r) in self.residual_history.iter().enumerate() {
            out.push_str(&format!("{k},{r:e}\n"));
        }
        out
    }
}

/// Symmetric tridiagonal matrix (diagonal, off-diagonal).
#[derive(Debug, Clone, Default)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    /// Lanczos matrix of CG: `T_jj = 1/α_j + β_{j-1}/α_{j-1}`,
    /// `T_{j,j+1} = √β_j / α_j`.
    pub fn from_cg(alphas: &[f64], betas: &[f64]) -> Self {
        let k = alphas.len();
        let mut diag = Vec::with_capacity(k);
        let mut off = Vec::with_capacity(k.saturating_sub(1));
        for j in 0..k {
            let mut d = 1.0 / alphas[j];
            if j > 0 {
                d += betas[j - 1] / alphas[j - 1];
            }
            diag.push(d);
            if j + 1 < k {
                off.push(betas[j].sqrt() / alphas[j]);
            }
        }
        Tridiagonal { diag, off }
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence).
    fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for (j, &d) in self.diag.iter().enumerate() {
            q = if j == 0 {
                d - x
            } else {
                let e = self.off[j - 1];
                let prev = if q == 0.0 {
                    f64::EPSILON * e.abs().max(f64::MIN_POSITIVE)
                } else {
                    q
                };
                d - x - e * e / prev
            };
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let k = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..k {
            let radius =
                if j > 0 { self.off[j - 1].abs() } else { 0.0 } + if j + 1 < k { self.off[j].abs() } else { 0.0 };
            lo = lo.min(self.diag[j] - radius);
            hi = hi.max(self.diag[j] + radius);
        }
        (lo, hi)
    }

    /// The `index`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, index: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let pad = f64::EPSILON * lo.abs().max(hi.abs());
        lo -= pad;
        hi += pad;
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn extreme_eigenvalues(&self) -> Option<(f64, f64)> {
        let k = self.diag.len();
        (k > 0).then(|| (self.eigenvalue(0), self.eigenvalue(k - 1)))
    }
}

/// Preconditioned conjugate gradients from a zero initial guess, stopping
/// when `‖r_k‖₂ / ‖b‖₂ < tol`. Hitting `max_iter` is reported through
/// `converged = false`, not as an error.
pub fn pcg(
    a: &SparseMatrix,
    b: &[f64],
    m: &dyn Preconditioner,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    let start = Instant::now();
    let n = b.len();
    if a.nrows() != n || a.ncols() != n || m.dim() != n {
        return Err(Error::DimensionMismatch {
            op: "pcg",
            expected: n,
            got: a.nrows(),
        });
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r0 = norm2(&r);
    let mut history = vec![1.0];
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    let mut converged = r0 == 0.0;
    if r0 == 0.0 {
        history[0] = 0.0;
    }
    let mut z = m.apply(&r);
    let mut rz = dot(&r, &z);
    if !converged && !(rz > 0.0) {
        return Err(Error::Breakdown {
            iteration: 0,
            what: "<r, M r>",
            value: rz,
        });
    }
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    while !converged && alphas.len() < max_iter {
        let k = alphas.len();
        spmv_into(a, &p, &mut q)?;
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::Breakdown {
                iteration: k,
                what: "<p, A p>",
                value: pq,
            });
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        alphas.push(alpha);
        let rel = norm2(&r) / r0;
        history.push(rel);
        if rel < tol {
            converged = true;
            break;
        }
        z = m.apply(&r);
        let rz_new = dot(&r, &z);
        if !(rz_new > 0.0) {
            return Err(Error::Breakdown {
                iteration: k + 1,
                what: "<r, M r>",
                value: rz_new,
            });
        }
        let beta = rz_new / rz;
        betas.push(beta);
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let (lambda_min, lambda_max) = Tridiagonal::from_cg(&alphas, &betas)
        .extreme_eigenvalues()
        .unwrap_or((1.0, 1.0));
    let kappa = if lambda_min > 0.0 {
        (lambda_max / lambda_min).max(1.0)
    } else {
        f64::INFINITY
    };
    Ok((
        x,
        SolveReport {
            iterations: alphas.len(),
            residual_history: history,
            converged,
            lambda_min,
            lambda_max,
            kappa,
            walltime_s: start.elapsed().as_secs_f64(),
        },
    ))
}
