use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coarse::CoarseSpaceKind;
use crate::error::{Error, Result};
use crate::problem::{CoefficientKind, Geometry, SubdomainLayout};

/// A preconditioner variant: one-level (`none`) or two-level with a coarse space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceChoice {
    None,
    Gdsw,
    Rgdsw,
    Ams,
}

impl SpaceChoice {
    pub fn coarse(self) -> Option<CoarseSpaceKind> {
        match self {
            SpaceChoice::None => None,
            SpaceChoice::Gdsw => Some(CoarseSpaceKind::Gdsw),
            SpaceChoice::Rgdsw => Some(CoarseSpaceKind::Rgdsw),
            SpaceChoice::Ams => Some(CoarseSpaceKind::Ams),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SpaceChoice::None => "none",
            SpaceChoice::Gdsw => "gdsw",
            SpaceChoice::Rgdsw => "rgdsw",
            SpaceChoice::Ams => "ams",
        }
    }
}

impl fmt::Display for SpaceChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpaceChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "oas1" | "oas-1" => Ok(SpaceChoice::None),
            "gdsw" => Ok(SpaceChoice::Gdsw),
            "rgdsw" => Ok(SpaceChoice::Rgdsw),
            "ams" => Ok(SpaceChoice::Ams),
            other => Err(Error::Config {
                field: "spaces",
                reason: format!("unknown space `{other}` (expected none, gdsw, rgdsw or ams)"),
            }),
        }
    }
}

/// Parses a comma-separated space list; an empty string gives an empty list.
pub fn parse_spaces(list: &str) -> Result<Vec<SpaceChoice>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

/// Parses a comma-separated list of subdomain counts.
pub fn parse_counts(list: &str) -> Result<Vec<usize>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim().parse().map_err(|_| Error::Config {
                field: "sweep",
                reason: format!("`{s}` is not a subdomain count"),
            })
        })
        .collect()
}

fn default_subdomains() -> usize {
    4
}
fn default_hh() -> usize {
    8
}
fn default_overlap() -> usize {
    2
}
fn default_contrast() -> f64 {
    1e8
}
fn default_spaces() -> Vec<SpaceChoice> {
    vec![SpaceChoice::Gdsw, SpaceChoice::Rgdsw, SpaceChoice::Ams]
}
fn default_tol() -> f64 {
    1e-8
}
fn default_max_iter() -> usize {
    10_000
}
fn default_cap() -> usize {
    crate::solver::SPECTRUM_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_subdomains", alias = "subdomains")]
    pub subdomains_per_side: usize,
    /// `H/h`.
    #[serde(default = "default_hh", alias = "hh")]
    pub elements_per_subdomain: usize,
    /// Optional cross-check; must equal `subdomains_per_side * elements_per_subdomain`.
    #[serde(default)]
    pub elements_per_side: Option<usize>,
    #[serde(default = "default_overlap")]
    pub overlap: usize,
    #[serde(default, alias = "coeff")]
    pub coefficient: CoefficientKind,
    /// Geometry override; the kind's default when absent.
    #[serde(default)]
    pub geometry: Option<Geometry>,
    #[serde(default = "default_contrast")]
    pub contrast: f64,
    #[serde(default = "default_spaces")]
    pub spaces: Vec<SpaceChoice>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub spectrum: bool,
    #[serde(default = "default_cap")]
    pub spectrum_cap: usize,
    /// Uniform random right-hand side in `[-1, 1]` from this seed instead of the load vector.
    #[serde(default)]
    pub rhs_seed: Option<u64>,
    /// Subdomain counts of a weak-scaling sweep; empty for a single run.
    #[serde(default)]
    pub sweep: Vec<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub dump_coeff: Option<PathBuf>,
    #[serde(default)]
    pub dump_basis: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn layout(&self) -> SubdomainLayout {
        SubdomainLayout {
            subdomains_per_side: self.subdomains_per_side,
            elements_per_subdomain: self.elements_per_subdomain,
        }
    }

    pub fn elements(&self) -> usize {
        self.subdomains_per_side * self.elements_per_subdomain
    }

    /// Usage errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &'static str, reason: String| Err(Error::Config { field, reason });
        if self.subdomains_per_side == 0 {
            return bad("subdomains_per_side", "must be at least 1".into());
        }
        if self.elements_per_subdomain == 0 {
            return bad("elements_per_subdomain", "must be at least 1".into());
        }
        if self.elements() < 2 {
            return bad(
                "elements_per_subdomain",
                "the grid needs at least 2 elements per side".into(),
            );
        }
        if let Some(n) = self.elements_per_side {
            if n != self.elements() {
                return bad(
                    "elements_per_side",
                    format!(
                        "{n} != subdomains_per_side ({}) x elements_per_subdomain ({})",
                        self.subdomains_per_side, self.elements_per_subdomain
                    ),
                );
            }
        }
        if self.spaces.iter().any(|s| s.coarse().is_some()) && self.elements_per_subdomain < 4 {
            return bad(
                "elements_per_subdomain",
                format!(
                    "H/h = {} < 4 with a coarse space requested",
                    self.elements_per_subdomain
                ),
            );
        }
        if !(self.contrast > 0.0 && self.contrast.is_finite()) {
            return bad("contrast", format!("{} is not a positive finite number", self.contrast));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad("tol", format!("{} is not in (0, 1)", self.tol));
        }
        if self.max_iter == 0 {
            return bad("max_iter", "must be at least 1".into());
        }
        if self.sweep.contains(&0) {
            return bad("sweep", "subdomain counts must be positive".into());
        }
        let mut seen = Vec::new();
        for s in &self.spaces {
            if seen.contains(s) {
                return bad("spaces", format!("`{s}` listed twice"));
            }
            seen.push(*s);
        }
        Ok(())
    }
}
