//! Two-level overlapping additive Schwarz preconditioners with algebraic
//! energy-minimizing coarse spaces (GDSW, RGDSW, AMS) for heterogeneous
//! scalar diffusion on the unit square.

pub mod error;
pub mod sparse;

pub use error::{Error, Result};
pub mod coarse;
pub mod decomposition;
pub mod harness;
pub mod problem;
pub mod solver;
