use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ellipsephic::{DigitSet, Method};
use serde::{Serialize, Serializer};

#[derive(Debug, Parser)]
#[command(name = "ellipsephic", version, about = "Restriction constants and decoupling exponents of ellipsephic sets")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    pub json: bool,
    /// CSV output.
    #[arg(long, global = true, conflicts_with = "json")]
    pub csv: bool,
    /// JSON-lines cache file; repeated requests are answered from it.
    #[arg(long, global = true, env = "ELLIPSEPHIC_CACHE")]
    pub cache: Option<PathBuf>,
    /// Ignore any configured cache.
    #[arg(long, global = true)]
    pub no_cache: bool,
    /// TOML settings file.
    #[arg(long, global = true, env = "ELLIPSEPHIC_CONFIG")]
    pub config: Option<PathBuf>,
    /// Seed for the random restarts.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Optimizer stopping tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Starts per optimization method.
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    /// Iteration cap per start.
    #[arg(long, global = true)]
    pub max_iters: Option<u64>,
    /// Enumeration budget for exact counting.
    #[arg(long, global = true)]
    pub budget: Option<u64>,
    /// gradient_ascent, fixed_point or both.
    #[arg(long, global = true)]
    pub method: Option<Method>,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// List the elements of level j.
    Level {
        spec: DigitSet,
        #[arg(long)]
        j: u32,
    },
    /// Maximize ‖w^{*n}‖² over level j.
    Optimize {
        spec: DigitSet,
        #[arg(long)]
        j: u32,
        #[arg(long)]
        n: u32,
    },
    /// Decoupling exponent: exact when carry-free, banded at level t otherwise.
    Exponent {
        spec: DigitSet,
        #[arg(long)]
        n: u32,
        /// Level for a banded estimate.
        #[arg(long, conflicts_with = "sweep")]
        t: Option<u32>,
        /// Banded estimates for every level in `a..b` (inclusive).
        #[arg(long)]
        sweep: Option<LevelRange>,
        /// Largest level support optimized over.
        #[arg(long, default_value_t = 4096)]
        support_cap: u64,
        /// Attach the product extremizer on this level (carry-free only).
        #[arg(long)]
        extremizer_level: Option<u32>,
    },
    /// Count solutions of Σ x_i^e = Σ y_i^e, e = 1..degree, over level j.
    Count {
        spec: DigitSet,
        #[arg(long)]
        j: u32,
        #[arg(long)]
        s: u32,
        #[arg(long, default_value_t = 1)]
        degree: u32,
    },
    /// Run a built-in check suite.
    Verify { suite: Suite },
    /// Exponent summary table for one or more digit sets.
    Report {
        #[arg(required = true)]
        specs: Vec<DigitSet>,
        #[arg(long)]
        n: u32,
        /// Level for banded rows (default: chosen per set).
        #[arg(long)]
        t: Option<u32>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Level { .. } => "level",
            Command::Optimize { .. } => "optimize",
            Command::Exponent { .. } => "exponent",
            Command::Count { .. } => "count",
            Command::Verify { .. } => "verify",
            Command::Report { .. } => "report",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    KnownAnswers,
    PowerLaw,
    Freiman,
    Bands,
    Cap,
    Maximal,
    Counting,
    Oracles,
    Squares,
    All,
}

/// Inclusive level range written `a..b` or `a..=b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelRange {
    pub start: u32,
    pub end: u32,
}

impl FromStr for LevelRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once("..").ok_or_else(|| format!("expected a..b, got {s:?}"))?;
        let b = b.strip_prefix('=').unwrap_or(b);
        let start: u32 = a.trim().parse().map_err(|e| format!("bad range start {a:?}: {e}"))?;
        let end: u32 = b.trim().parse().map_err(|e| format!("bad range end {b:?}: {e}"))?;
        if start == 0 || start > end {
            return Err(format!("need 1 <= a <= b, got {start}..{end}"));
        }
        Ok(Self { start, end })
    }
}

impl fmt::Display for LevelRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

impl Serialize for LevelRange {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!("1..5".parse::<LevelRange>().unwrap(), LevelRange { start: 1, end: 5 });
        assert_eq!("2..=3".parse::<LevelRange>().unwrap(), LevelRange { start: 2, end: 3 });
        assert!("5..1".parse::<LevelRange>().is_err());
        assert!("0..1".parse::<LevelRange>().is_err());
        assert!("3".parse::<LevelRange>().is_err());
    }

    #[test]
    fn parses_commands() {
        let cli = Cli::try_parse_from(["ellipsephic", "exponent", "3:1,2", "--n", "2", "--sweep", "1..5", "--json"]).unwrap();
        assert!(cli.global.json);
        assert!(matches!(cli.command, Command::Exponent { n: 2, sweep: Some(LevelRange { start: 1, end: 5 }), .. }));
        assert!(Cli::try_parse_from(["ellipsephic", "exponent", "3:1,2", "--n", "2", "--t", "1", "--sweep", "1..2"]).is_err());
        let cli = Cli::try_parse_from(["ellipsephic", "--seed", "4", "level", "9:1,2^2", "--j", "1"]).unwrap();
        assert_eq!(cli.global.seed, Some(4));
    }
}
