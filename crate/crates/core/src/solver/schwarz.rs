use crate::coarse::Prolongation;
use crate::decomposition::Decomposition;
use crate::error::{Error, Result};
use crate::sparse::{extract_submatrix, factorize, spmv, triple_product, Factorization, IndexSet, SparseMatrix};

/// Action of `M⁻¹` on a vector.
pub trait Preconditioner {
    fn dim(&self) -> usize;
    fn apply(&self, r: &[f64]) -> Vec<f64>;
}

/// `M⁻¹ = I`.
#[derive(Debug, Clone, Copy)]
pub struct IdentityPreconditioner(pub usize);

impl Preconditioner for IdentityPreconditioner {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        r.to_vec()
    }
}

#[derive(Debug, Clone)]
struct LocalSolve {
    dofs: IndexSet,
    factor: Factorization,
}

#[derive(Debug, Clone)]
struct CoarseSolve {
    phi: SparseMatrix,
    phi_t: SparseMatrix,
    factor: Factorization,
}

/// Additive Schwarz preconditioner
/// `M⁻¹ = Φ A₀⁻¹ Φᵀ + Σᵢ Rᵢᵀ Aᵢ⁻¹ Rᵢ` with `Aᵢ = Rᵢ A Rᵢᵀ`, `A₀ = Φᵀ A Φ`.
/// Without a coarse level this is the one-level method.
#[derive(Debug, Clone)]
pub struct SchwarzPreconditioner {
    n: usize,
    locals: Vec<LocalSolve>,
    coarse: Option<CoarseSolve>,
}

/// Factorizes every overlapping subdomain block and, when `phi` has
/// columns, the Galerkin coarse matrix.
pub fn build_preconditioner(
    a: &SparseMatrix,
    dec: &Decomposition,
    phi: Option<&Prolongation>,
) -> Result<SchwarzPreconditioner> {
    let n = a.nrows();
    if dec.n_dofs() != n {
        return Err(Error::DimensionMismatch {
            op: "build_preconditioner",
            expected: n,
            got: dec.n_dofs(),
        });
    }
    let mut covered = vec![false; n];
    let mut locals = Vec::with_capacity(dec.n_subdomains());
    for i in 0..dec.n_subdomains() {
        let dofs = dec.overlapping(i).clone();
        for d in dofs.iter() {
            covered[d] = true;
        }
        let block = extract_submatrix(a, &dofs, &dofs)?;
        let factor = factorize(&block, true).map_err(|e| e.in_block(format!("subdomain {i}")))?;
        locals.push(LocalSolve { dofs, factor });
    }
    if let Some(d) = covered.iter().position(|&c| !c) {
        return Err(Error::Input(format!("dof {d} is not covered by any subdomain")));
    }
    let coarse = match phi {
        Some(p) if p.dim() > 0 => {
            if p.phi.nrows() != n {
                return Err(Error::DimensionMismatch {
                    op: "coarse prolongation",
                    expected: n,
                    got: p.phi.nrows(),
                });
            }
            let a0 = triple_product(&p.phi, a)?;
            let factor = factorize(&a0, true).map_err(|e| e.in_block("coarse matrix"))?;
            Some(CoarseSolve {
                phi: p.phi.clone(),
                phi_t: p.phi.transpose(),
                factor,
            })
        }
        _ => None,
    };
    Ok(SchwarzPreconditioner { n, locals, coarse })
}

impl SchwarzPreconditioner {
    pub fn levels(&self) -> usize {
        if self.coarse.is_some() {
            2
        } else {
            1
        }
    }

    pub fn coarse_dim(&self) -> usize {
        self.coarse.as_ref().map_or(0, |c| c.phi.ncols())
    }
}

impl Preconditioner for SchwarzPreconditioner {
    fn dim(&self) -> usize {
        self.n
    }

    /// Local solves summed in subdomain order, then the coarse correction.
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        assert_eq!(r.len(), self.n, "preconditioner dimension mismatch");
        let mut z = vec![0.0; self.n];
        let mut local = Vec::new();
        for sub in &self.locals {
            local.clear();
            local.extend(sub.dofs.iter().map(|d| r[d]));
            sub.factor.solve_in_place(&mut local);
            for (d, v) in sub.dofs.iter().zip(&local) {
                z[d] += v;
            }
        }
        if let Some(c) = &self.coarse {
            let mut r0 = spmv(&c.phi_t, r).expect("coarse restriction dims");
            c.factor.solve_in_place(&mut r0);
            let correction = spmv(&c.phi, &r0).expect("coarse prolongation dims");
            for (zi, ci) in z.iter_mut().zip(correction) {
                *zi += ci;
            }
        }
        z
    }
}
