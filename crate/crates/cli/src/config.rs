//! Settings file and flag resolution.
//!
//! The config file is TOML with flat `key = value` pairs:
//!
//! ```toml
//! seed = 7
//! tol = 1e-10
//! restarts = 32
//! max_iters = 200000
//! budget = 100000000
//! method = "both"          # gradient_ascent | fixed_point | both
//! initial_step = 0.1
//! backtrack = 0.5
//! cache = "runs.jsonl"
//! ```
//!
//! Every key is optional. Command-line flags win over the file, and the file
//! wins over built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ellipsephic::{Method, OptimizerConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub restarts: Option<usize>,
    pub max_iters: Option<u64>,
    pub budget: Option<u64>,
    pub method: Option<String>,
    pub initial_step: Option<f64>,
    pub backtrack: Option<f64>,
    pub cache: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Flag values as given on the command line; `None` means "not given".
#[derive(Debug, Clone, Default)]
pub struct FlagOverrides {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub restarts: Option<usize>,
    pub max_iters: Option<u64>,
    pub budget: Option<u64>,
    pub method: Option<Method>,
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub optimizer: OptimizerConfig,
    /// Enumeration budget for counting and energy computations.
    pub budget: u64,
    pub format: Format,
    #[serde(skip)]
    pub cache: Option<PathBuf>,
}

pub const DEFAULT_BUDGET: u64 = 100_000_000;

impl Settings {
    pub fn resolve(file: &FileConfig, flags: &FlagOverrides, format: Format) -> Result<Self> {
        let defaults = OptimizerConfig::default();
        let method = match (&flags.method, &file.method) {
            (Some(m), _) => *m,
            (None, Some(text)) => text.parse().with_context(|| format!("config key method = {text:?}"))?,
            (None, None) => defaults.method,
        };
        let optimizer = OptimizerConfig {
            method,
            tolerance: flags.tol.or(file.tol).unwrap_or(defaults.tolerance),
            max_iterations: flags.max_iters.or(file.max_iters).unwrap_or(defaults.max_iterations),
            restarts: flags.restarts.or(file.restarts).unwrap_or(defaults.restarts),
            rng_seed: flags.seed.or(file.seed).unwrap_or(defaults.rng_seed),
            initial_step: file.initial_step.unwrap_or(defaults.initial_step),
            backtrack: file.backtrack.unwrap_or(defaults.backtrack),
        };
        optimizer.validate()?;
        Ok(Self {
            optimizer,
            budget: flags.budget.or(file.budget).unwrap_or(DEFAULT_BUDGET),
            format,
            cache: flags.cache.clone().or_else(|| file.cache.clone()),
        })
    }
}
