use std::io;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range input to an operation.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        got: usize,
    },

    /// A pivot was not strictly positive during a Cholesky factorization.
    #[error("matrix is not SPD: pivot {value:e} at (permuted) row {row}")]
    NotSpd { row: usize, value: f64 },

    #[error("matrix is singular: {0}")]
    Singular(String),

    /// A factorization failed inside a named block (subdomain, edge class, coarse matrix).
    #[error("factorization of {block} failed: {source}")]
    Block {
        block: String,
        #[source]
        source: Box<Error>,
    },

    /// Preconditioned CG met a non-positive inner product.
    #[error("PCG breakdown at iteration {iteration}: {what} = {value:e}")]
    Breakdown {
        iteration: usize,
        what: &'static str,
        value: f64,
    },

    #[error(
        "problem too large for dense spectrum: {size} dofs exceeds cap {cap}; use fewer subdomains or a smaller H/h"
    )]
    SizeCap { size: usize, cap: usize },

    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn in_block(self, block: impl Into<String>) -> Error {
        Error::Block {
            block: block.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
