//! Decoupling exponents from restriction constants.
//!
//! For a digit set with `k` digits the exponent at level `t` is
//! `α = ln A_{2n,1}([E]_t) / (t · ln k)`. Without carryover the constant is
//! multiplicative across levels, so level 1 gives `α` exactly (modulo the
//! optimizer finding the global maximum). With carryover only a band of
//! half-width `ln(2n+1) / (2n · t · ln k)` around the level-`t` value is
//! certified.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cantor::{enumerate_level, has_carryover, hausdorff_dimension, normalize_digits, DigitSet, MAX_LEVEL_ELEMENTS};
use crate::error::{Error, Result};
use crate::json::serialize_real;
use crate::optimizer::{estimate_restriction, OptimizerConfig, RestrictionEstimate, SetDescriptor};
use crate::restriction::{objective, WeightVector};

/// Largest level support `k^t` that [`exponent_banded`] will optimize over
/// unless told otherwise.
pub const DEFAULT_SUPPORT_CAP: u128 = 4096;

/// Slack allowed above the trivial cap before a run is rejected.
pub const CAP_SLACK: f64 = 1e-9;

const EXACT_CAVEAT: &str =
    "exact only if the level-1 optimizer found the global maximum; the value is a lower bound otherwise";
const BANDED_CAVEAT: &str =
    "band is rigorous around the true level-t constant; alpha_point is a lower estimate of that constant";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub generator: DigitSet,
    pub n: u32,
    pub t_used: u32,
    #[serde(serialize_with = "serialize_real")]
    pub alpha_point: f64,
    #[serde(serialize_with = "serialize_real")]
    pub alpha_lower: f64,
    #[serde(serialize_with = "serialize_real")]
    pub alpha_upper: f64,
    pub exact: bool,
    /// Whether the digits were divided by their gcd before computing.
    pub normalized: bool,
    /// `alpha_point` written as `(1/(2n t)) · log_k(A^{2n})`.
    pub base_k_form: String,
    pub caveat: String,
    pub optimizer_certificate: RestrictionEstimate,
    /// Product-form extremizer on a higher level, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product_extremizer: Option<WeightVector>,
}

impl ExponentEstimate {
    pub fn half_width(&self) -> f64 {
        self.alpha_upper - self.alpha_point
    }
}

/// `1/2 − 1/(2n)`, the largest exponent any set can have.
pub fn trivial_cap(n: u32) -> f64 {
    0.5 - 0.5 / f64::from(n)
}

/// Half-width `ln(2n+1) / (2n · t · ln k)` of the carryover band.
pub fn band_half_width(n: u32, t: u32, k: usize) -> f64 {
    if k <= 1 {
        return 0.0;
    }
    let two_n = 2.0 * f64::from(n);
    (two_n + 1.0).ln() / (two_n * f64::from(t) * (k as f64).ln())
}

/// `ln A / (t ln k)` from `value_2n = A^{2n}`.
fn alpha_from_value(value_2n: f64, n: u32, t: u32, k: usize) -> f64 {
    // A single digit gives A ≡ 1, and for n = 1 the objective is ‖w‖² = 1.
    if k <= 1 || n == 1 {
        return 0.0;
    }
    value_2n.ln() / (2.0 * f64::from(n) * f64::from(t) * (k as f64).ln())
}

fn base_k_form(value_2n: f64, n: u32, t: u32, k: usize) -> String {
    format!("(1/{})·log_{}({:.12})", 2 * n * t, k, value_2n)
}

fn check_cap(alpha: f64, n: u32) -> Result<()> {
    if alpha > trivial_cap(n) + CAP_SLACK {
        return Err(Error::CheckFailed(format!(
            "alpha {alpha} exceeds the trivial cap {} for n = {n}",
            trivial_cap(n)
        )));
    }
    if alpha < 0.0 {
        return Err(Error::CheckFailed(format!("alpha {alpha} is negative")));
    }
    Ok(())
}

/// Exact exponent of a carry-free digit set from its level-1 constant.
/// The generator is normalized first; the result records whether that
/// changed anything.
pub fn exponent_no_carryover(generator: &DigitSet, n: u32, cfg: &OptimizerConfig) -> Result<ExponentEstimate> {
    let norm = normalize_digits(generator);
    if has_carryover(&norm, n) {
        return Err(Error::CarryoverPresent { generator: generator.to_string(), n });
    }
    let level = enumerate_level(&norm, 1)?;
    let est = estimate_restriction(level.elements(), n, cfg)?
        .describe(SetDescriptor::Ellipsephic { generator: norm.clone(), level: 1 });
    let k = norm.len();
    let alpha = alpha_from_value(est.value_2n, n, 1, k);
    check_cap(alpha, n)?;
    Ok(ExponentEstimate {
        generator: generator.clone(),
        n,
        t_used: 1,
        alpha_point: alpha,
        alpha_lower: alpha,
        alpha_upper: alpha,
        exact: true,
        normalized: &norm != generator,
        base_k_form: base_k_form(est.value_2n, n, 1, k),
        caveat: EXACT_CAVEAT.into(),
        optimizer_certificate: est,
        product_extremizer: None,
    })
}

/// The level-`j` weight `f_j(x) = Π_i f(digit_i(x))` built from a weight `f`
/// on the digits. It is unit norm whenever `f` is.
pub fn product_extremizer(generator: &DigitSet, digit_weights: &WeightVector, j: u32) -> Result<WeightVector> {
    let level = enumerate_level(generator, j)?;
    let values = level
        .values()
        .iter()
        .map(|&x| level.digits_of(x).iter().map(|&d| digit_weights.weight_at(&[d as i64])).product())
        .collect();
    WeightVector::new(level.into_elements(), values)
}

impl ExponentEstimate {
    /// Attaches the product extremizer on level `j` (carry-free estimates only).
    pub fn with_product_extremizer(mut self, j: u32) -> Result<Self> {
        if !self.exact {
            return Err(Error::InvalidParameter("product extremizers exist only for carry-free sets".into()));
        }
        let generator = normalize_digits(&self.generator);
        self.product_extremizer = Some(product_extremizer(&generator, &self.optimizer_certificate.extremizer, j)?);
        Ok(self)
    }
}

/// Level-`t` point estimate with its carryover band.
pub fn exponent_banded(
    generator: &DigitSet,
    n: u32,
    t: u32,
    cfg: &OptimizerConfig,
    support_cap: u128,
) -> Result<ExponentEstimate> {
    if t == 0 {
        return Err(Error::InvalidParameter("level t must be at least 1".into()));
    }
    let qt = (generator.base() as u128).checked_pow(t).unwrap_or(u128::MAX);
    if qt <= u128::from(n) {
        return Err(Error::LevelTooSmall { qt, n });
    }
    let size = (generator.len() as u128).checked_pow(t).unwrap_or(u128::MAX);
    if size > support_cap {
        return Err(Error::BudgetExceeded { required: size, budget: support_cap });
    }
    let level = enumerate_level(generator, t)?;
    let est = estimate_restriction(level.elements(), n, cfg)?
        .describe(SetDescriptor::Ellipsephic { generator: generator.clone(), level: t });
    let k = generator.len();
    let alpha = alpha_from_value(est.value_2n, n, t, k);
    check_cap(alpha, n)?;
    let half = band_half_width(n, t, k);
    Ok(ExponentEstimate {
        generator: generator.clone(),
        n,
        t_used: t,
        alpha_point: alpha,
        alpha_lower: alpha - half,
        alpha_upper: alpha + half,
        exact: false,
        normalized: false,
        base_k_form: base_k_form(est.value_2n, n, t, k),
        caveat: BANDED_CAVEAT.into(),
        optimizer_certificate: est,
        product_extremizer: None,
    })
}

/// [`exponent_banded`] for every `t` in `ts` with `q^t > n`, computed in
/// parallel and returned in increasing `t`. Levels below the band
/// hypothesis are listed in `skipped` instead of failing the sweep.
pub fn sweep_banded(
    generator: &DigitSet,
    n: u32,
    ts: RangeInclusive<u32>,
    cfg: &OptimizerConfig,
    support_cap: u128,
) -> Result<Sweep> {
    let q = generator.base() as u128;
    let (valid, skipped): (Vec<u32>, Vec<u32>) =
        ts.partition(|&t| q.checked_pow(t).is_none_or(|qt| qt > u128::from(n)));
    let estimates = valid
        .par_iter()
        .map(|&t| exponent_banded(generator, n, t, cfg, support_cap))
        .collect::<Result<Vec<_>>>()?;
    Ok(Sweep { estimates, skipped })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub estimates: Vec<ExponentEstimate>,
    /// Requested levels with `q^t <= n`.
    pub skipped: Vec<u32>,
}

/// Pairs of estimates (by position) whose bands fail to intersect. An
/// empty result is expected; anything else means an optimizer miss.
pub fn band_violations(estimates: &[ExponentEstimate]) -> Vec<(usize, usize)> {
    let mut bad = Vec::new();
    for (i, a) in estimates.iter().enumerate() {
        for (j, b) in estimates.iter().enumerate().skip(i + 1) {
            let gap = (a.alpha_point - b.alpha_point).abs();
            if gap > a.half_width() + b.half_width() + CAP_SLACK {
                bad.push((i, j));
            }
        }
    }
    bad
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawRow {
    pub level: u32,
    /// Directly optimized `A` on this level.
    #[serde(serialize_with = "serialize_real")]
    pub direct: f64,
    /// `A(level 1)^level`.
    #[serde(serialize_with = "serialize_real")]
    pub predicted: f64,
    #[serde(serialize_with = "serialize_real")]
    pub relative_error: f64,
    /// Objective `‖f_j^{*n}‖²` of the product extremizer.
    #[serde(serialize_with = "serialize_real")]
    pub product_value_2n: f64,
    /// `|product_value_2n − direct^{2n}|`.
    #[serde(serialize_with = "serialize_real")]
    pub product_gap: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawReport {
    pub generator: DigitSet,
    pub n: u32,
    pub rows: Vec<PowerLawRow>,
    pub passed: bool,
}

pub const POWER_LAW_RELATIVE_TOLERANCE: f64 = 1e-6;
pub const PRODUCT_TOLERANCE: f64 = 1e-7;

/// Checks `A(level j) = A(level 1)^j` for `j = 1..=j_max` by direct
/// optimization on each level, and that the product extremizer reaches the
/// same objective.
pub fn verify_power_law(
    generator: &DigitSet,
    n: u32,
    j_max: u32,
    cfg: &OptimizerConfig,
    support_cap: u128,
) -> Result<PowerLawReport> {
    if has_carryover(&normalize_digits(generator), n) {
        return Err(Error::CarryoverPresent { generator: generator.to_string(), n });
    }
    let size = (generator.len() as u128).checked_pow(j_max).unwrap_or(u128::MAX);
    if size > support_cap.min(MAX_LEVEL_ELEMENTS) {
        return Err(Error::BudgetExceeded { required: size, budget: support_cap });
    }
    let base = estimate_restriction(enumerate_level(generator, 1)?.elements(), n, cfg)?;
    let two_n = 2.0 * f64::from(n);
    let a1 = base.value_2n.powf(1.0 / two_n);
    let mut rows = Vec::new();
    for j in 1..=j_max {
        let level = enumerate_level(generator, j)?;
        let est = estimate_restriction(level.elements(), n, cfg)?;
        let predicted = a1.powi(j as i32);
        let relative_error = (est.value - predicted).abs() / predicted;
        let product = product_extremizer(generator, &base.extremizer, j)?;
        let product_value_2n = objective(&product, n)?;
        let product_gap = (product_value_2n - est.value_2n).abs();
        rows.push(PowerLawRow {
            level: j,
            direct: est.value,
            predicted,
            relative_error,
            product_value_2n,
            product_gap,
            passed: relative_error <= POWER_LAW_RELATIVE_TOLERANCE && product_gap <= PRODUCT_TOLERANCE,
        });
    }
    let passed = rows.iter().all(|r| r.passed);
    Ok(PowerLawReport { generator: generator.clone(), n, rows, passed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalCantor {
    /// Power used for both the digit count and the base.
    pub power: u32,
    pub generator: DigitSet,
}

/// Digits `{1, …, r^T}` in base `s^T` for the least `T` with `n r^T < s^T`.
/// The set is carry-free with dimension `ln r / ln s`.
pub fn construct_maximal_cantor(r: u64, s: u64, n: u32) -> Result<MaximalCantor> {
    if !(1 < r && r < s) {
        return Err(Error::InvalidParameter(format!("need 1 < r < s, got r = {r}, s = {s}")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("order n must be at least 1".into()));
    }
    let overflow = |t: u32| Error::OverflowRisk(format!("{s}^{t}"));
    let mut t = 1u32;
    loop {
        let rt = r.checked_pow(t).ok_or_else(|| overflow(t))?;
        let st = s.checked_pow(t).ok_or_else(|| overflow(t))?;
        if u128::from(n) * u128::from(rt) < u128::from(st) {
            if u128::from(rt) > MAX_LEVEL_ELEMENTS {
                return Err(Error::BudgetExceeded { required: rt.into(), budget: MAX_LEVEL_ELEMENTS });
            }
            let generator = DigitSet::new(st, (1..=rt).collect())?;
            return Ok(MaximalCantor { power: t, generator });
        }
        t += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecouplingReport {
    pub generator: DigitSet,
    pub n: u32,
    #[serde(serialize_with = "serialize_real")]
    pub dimension: f64,
    /// Interval length at level 1, `1/q`; level `i` has `δ(1)^i`.
    #[serde(serialize_with = "serialize_real")]
    pub delta_1: f64,
    /// Number of intervals at level 1, `k`; level `i` has `N(1)^i`.
    pub count_1: u64,
    pub carryover: bool,
    pub kappa: ExponentEstimate,
    #[serde(serialize_with = "serialize_real")]
    pub trivial_cap: f64,
    /// `p = 6n` in `D_p(δ(i)) ≲ N(i)^{κ+ε}`.
    pub parabola_exponent_p: u32,
    /// Parabola exponent in powers of `N(i)`.
    #[serde(serialize_with = "serialize_real")]
    pub parabola_exponent: f64,
    /// The sharp full-interval exponent `1/2 − 3/p` in `δ^{-1}`, rewritten in
    /// powers of `N(i)`.
    #[serde(serialize_with = "serialize_real")]
    pub comparison_exponent: f64,
}

/// Level used by [`decoupling_report`] when the generator carries over: the
/// least valid level, raised while the support stays at most 64 points.
pub fn default_band_level(generator: &DigitSet, n: u32) -> u32 {
    let q = generator.base() as u128;
    let k = generator.len() as u128;
    let mut t = 1;
    while q.checked_pow(t).is_some_and(|qt| qt <= u128::from(n)) {
        t += 1;
    }
    while k.checked_pow(t + 1).is_some_and(|size| size <= 64) && k > 1 {
        t += 1;
    }
    t
}

/// Exponent summary for the Cantor set of `generator`: exact when carry-free,
/// otherwise banded at `band_level` (or [`default_band_level`]).
pub fn decoupling_report(
    generator: &DigitSet,
    n: u32,
    cfg: &OptimizerConfig,
    band_level: Option<u32>,
) -> Result<DecouplingReport> {
    let carryover = has_carryover(&normalize_digits(generator), n);
    let kappa = if carryover {
        let t = band_level.unwrap_or_else(|| default_band_level(generator, n));
        exponent_banded(generator, n, t, cfg, DEFAULT_SUPPORT_CAP)?
    } else {
        exponent_no_carryover(generator, n, cfg)?
    };
    let dimension = hausdorff_dimension(generator);
    let cap = trivial_cap(n);
    Ok(DecouplingReport {
        generator: generator.clone(),
        n,
        dimension,
        delta_1: 1.0 / generator.base() as f64,
        count_1: generator.len() as u64,
        carryover,
        parabola_exponent_p: 6 * n,
        parabola_exponent: kappa.alpha_point,
        kappa,
        trivial_cap: cap,
        comparison_exponent: if dimension > 0.0 { cap / dimension } else { f64::INFINITY },
    })
}

/// Aligned plain-text table, one row per report.
pub fn render_table(reports: &[DecouplingReport]) -> String {
    let header = ["set", "delta(i)", "N(i)", "p", "kappa", "band", "exact", "cap", "comparison"];
    let rows: Vec<[String; 9]> = reports
        .iter()
        .map(|r| {
            [
                format!("E_{}^{{{}}}", r.generator.base(), digits_text(&r.generator)),
                format!("{}^-i", r.generator.base()),
                format!("{}^i", r.count_1),
                r.parabola_exponent_p.to_string(),
                format!("{:.6}", r.kappa.alpha_point),
                format!("[{:.6}, {:.6}]", r.kappa.alpha_lower, r.kappa.alpha_upper),
                r.kappa.exact.to_string(),
                format!("{:.6}", r.trivial_cap),
                format!("{:.6}", r.comparison_exponent),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(&header.map(String::from));
    out.push('\n');
    for row in &rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

fn digits_text(generator: &DigitSet) -> String {
    generator.digits().iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}
