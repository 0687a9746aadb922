use std::time::{SystemTime, UNIX_EPOCH};

use rand::{rngs::StdRng, Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SpaceChoice};
use crate::coarse::{basis_rasters, build_coarse_space, Prolongation};
use crate::decomposition::{classify_interface, partition_structured, InterfaceClassification};
use crate::error::Result;
use crate::problem::{assemble, CoefficientField, DiscreteProblem};
use crate::solver::{build_preconditioner, pcg, spectrum, SolveReport, SpectrumReport};

/// Outcome for one requested preconditioner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceResult {
    pub space: SpaceChoice,
    /// Zero for the one-level method; absent when the coarse build failed.
    pub coarse_dim: Option<usize>,
    pub report: Option<SolveReport>,
    pub spectrum: Option<SpectrumReport>,
    /// Failure of the build or the solve; the remaining spaces still run.
    pub error: Option<String>,
    pub spectrum_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub inv_h: usize,
    pub elements_per_side: usize,
    pub n_dofs: usize,
    pub results: Vec<SpaceResult>,
    /// Failure of the whole point (invalid config, assembly).
    pub error: Option<String>,
    pub version: String,
    pub timestamp_unix: u64,
}

impl RunRecord {
    fn empty(config: &ExperimentConfig) -> Self {
        RunRecord {
            config: config.clone(),
            inv_h: config.subdomains_per_side,
            elements_per_side: config.elements(),
            n_dofs: 0,
            results: Vec::new(),
            error: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        }
    }

    /// Equality ignoring timestamps and wall times.
    pub fn same_result(&self, other: &RunRecord) -> bool {
        fn strip(r: &RunRecord) -> RunRecord {
            let mut r = r.clone();
            r.timestamp_unix = 0;
            for s in &mut r.results {
                if let Some(rep) = &mut s.report {
                    rep.walltime_s = 0.0;
                }
            }
            r
        }
        strip(self) == strip(other)
    }

    pub fn result(&self, space: SpaceChoice) -> Option<&SpaceResult> {
        self.results.iter().find(|r| r.space == space)
    }
}

/// Problem, coefficient and right-hand side described by `config`.
pub fn build_problem(config: &ExperimentConfig) -> Result<(DiscreteProblem, CoefficientField)> {
    let coeff = CoefficientField::for_layout(config.coefficient, config.layout(), config.geometry, config.contrast)?;
    let mut problem = assemble(config.layout().grid()?, &coeff, 1.0)?;
    if let Some(seed) = config.rhs_seed {
        let mut rng = StdRng::seed_from_u64(seed);
        problem.b = (0..problem.n_dofs()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    }
    Ok((problem, coeff))
}

fn solve_space(
    config: &ExperimentConfig,
    problem: &DiscreteProblem,
    dec: &crate::decomposition::Decomposition,
    cls: Option<&InterfaceClassification>,
    space: SpaceChoice,
    bases: &mut Vec<Prolongation>,
) -> SpaceResult {
    let mut result = SpaceResult {
        space,
        coarse_dim: None,
        report: None,
        spectrum: None,
        error: None,
        spectrum_error: None,
    };
    let phi = match (space.coarse(), cls) {
        (Some(kind), Some(cls)) => match build_coarse_space(kind, &problem.a, cls) {
            Ok(phi) => Some(phi),
            Err(e) => {
                result.error = Some(format!("coarse space: {e}"));
                return result;
            }
        },
        _ => None,
    };
    result.coarse_dim = Some(phi.as_ref().map_or(0, Prolongation::dim));
    let m = match build_preconditioner(&problem.a, dec, phi.as_ref()) {
        Ok(m) => m,
        Err(e) => {
            result.error = Some(format!("preconditioner: {e}"));
            return result;
        }
    };
    match pcg(&problem.a, &problem.b, &m, config.tol, config.max_iter) {
        Ok((_, report)) => result.report = Some(report),
        Err(e) => result.error = Some(format!("pcg: {e}")),
    }
    if config.spectrum {
        match spectrum(&problem.a, &m, config.spectrum_cap) {
            Ok(s) => result.spectrum = Some(s),
            Err(e) => result.spectrum_error = Some(e.to_string()),
        }
    }
    if let Some(phi) = phi {
        bases.push(phi);
    }
    result
}

/// Assembles, decomposes, and solves with every requested preconditioner
/// (`none` is the one-level method). Per-space failures are recorded in the
/// result; an invalid config is an error.
pub fn run_single(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    let mut record = RunRecord::empty(config);
    let (problem, coeff) = build_problem(config)?;
    record.n_dofs = problem.n_dofs();
    if let Some(path) = &config.dump_coeff {
        coeff.write_grid(path)?;
    }
    if config.spaces.is_empty() {
        return Ok(record);
    }
    let dec =
        partition_structured(problem.grid, config.subdomains_per_side)?.grow_overlap(&problem.a, config.overlap)?;
    let cls = if config.spaces.iter().any(|s| s.coarse().is_some()) {
        Some(classify_interface(&dec, &problem.a)?)
    } else {
        None
    };
    let mut bases = Vec::new();
    for &space in &config.spaces {
        let result = solve_space(config, &problem, &dec, cls.as_ref(), space, &mut bases);
        record.results.push(result);
    }
    if let Some(path) = &config.dump_basis {
        let text: String = bases.iter().map(|phi| basis_rasters(&problem, phi)).collect();
        std::fs::write(path, text)?;
    }
    Ok(record)
}

/// Weak scaling: `H/h` fixed, one run per subdomain count. A point whose
/// run fails keeps its record with `error` set.
pub fn run_scaling(config: &ExperimentConfig, subdomain_counts: &[usize]) -> Vec<RunRecord> {
    subdomain_counts
        .iter()
        .map(|&k| {
            let point = ExperimentConfig {
                subdomains_per_side: k,
                elements_per_side: None,
                sweep: Vec::new(),
                ..config.clone()
            };
            run_single(&point).unwrap_or_else(|e| {
                let mut r = RunRecord::empty(&point);
                r.error = Some(e.to_string());
                r
            })
        })
        .collect()
}
