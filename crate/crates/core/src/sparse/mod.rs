//! Sparse linear-algebra substrate: CSR matrices, index sets, submatrix
//! extraction, Galerkin products and direct factorizations.

mod csr;
mod factor;
pub mod market;
mod mmatrix;
mod ops;

pub use csr::{IndexSet, SparseMatrix};
pub use factor::{factorize, minimum_degree, Factorization};
pub use mmatrix::{factorize_m_matrix, row_sum_deficits, MMatrixFactorization};
pub use ops::{dot, extract_submatrix, norm2, spmv, spmv_into, triple_product};
