//! Schwarz preconditioners, PCG with Lanczos condition estimates, and dense
//! spectra of the preconditioned operator.
mod pcg;
mod schwarz;
mod spectrum;

pub use pcg::{pcg, SolveReport, Tridiagonal};
pub use schwarz::{build_preconditioner, IdentityPreconditioner, Preconditioner, SchwarzPreconditioner};
pub use spectrum::{spectrum, SpectrumReport, SPECTRUM_CAP};
