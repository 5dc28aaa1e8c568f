//! Exact solution counts for `Σ x_i^e = Σ y_i^e` (`e` over a list of
//! moments) with all variables in a finite set of integers.
//!
//! Every ordered `s`-tuple is enumerated once and binned by its vector of
//! power sums; the number of solutions is the sum of squared bin sizes.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cantor::{enumerate_level, DigitSet};
use crate::error::{Error, Result};
use crate::json::serialize_real;
use crate::lattice::LatticeSet;
use crate::optimizer::{estimate_restriction, OptimizerConfig, SetDescriptor};
use crate::restriction::{additive_energy, DEFAULT_ENUMERATION_BUDGET};

pub const DEFAULT_COUNT_BUDGET: u128 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub variables_per_side: u32,
    pub moments: Vec<u32>,
}

impl SystemSpec {
    pub fn new(variables_per_side: u32, moments: Vec<u32>) -> Result<Self> {
        if variables_per_side == 0 {
            return Err(Error::InvalidParameter("at least one variable per side is required".into()));
        }
        if moments.is_empty() {
            return Err(Error::InvalidParameter("at least one moment is required".into()));
        }
        if moments[0] == 0 || moments.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "moments must be strictly increasing positive integers, got {moments:?}"
            )));
        }
        Ok(Self { variables_per_side, moments })
    }

    pub fn linear(s: u32) -> Result<Self> {
        Self::new(s, vec![1])
    }

    /// Moments `1, …, degree`.
    pub fn vinogradov(s: u32, degree: u32) -> Result<Self> {
        Self::new(s, (1..=degree).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    pub set: SetDescriptor,
    pub spec: SystemSpec,
    pub count: u64,
    /// Ordered pairs `(x, y)` with `y` a rearrangement of `x`.
    pub diagonal_count: u64,
    pub tuples_enumerated: u64,
}

fn overflow(what: &str) -> Error {
    Error::OverflowRisk(what.into())
}

/// `Σ_M (s! / Π m_i!)²` over multisets `M` of size `s` drawn from `k`
/// distinct values.
pub fn diagonal_count(k: usize, s: u32) -> Result<u64> {
    let s = s as usize;
    let mut binom = vec![vec![0u128; s + 1]; s + 1];
    for a in 0..=s {
        binom[a][0] = 1;
        for b in 1..=a {
            binom[a][b] = binom[a - 1][b - 1] + if b < a { binom[a - 1][b] } else { 0 };
        }
    }
    let mut ways = vec![0u128; s + 1];
    ways[0] = 1;
    for _ in 0..k {
        let mut next = ways.clone();
        for r in 0..=s {
            if ways[r] == 0 {
                continue;
            }
            for m in 1..=s - r {
                let c = binom[r + m][m];
                let add = ways[r]
                    .checked_mul(c)
                    .and_then(|v| v.checked_mul(c))
                    .ok_or_else(|| overflow("diagonal count"))?;
                next[r + m] = next[r + m].checked_add(add).ok_or_else(|| overflow("diagonal count"))?;
            }
        }
        ways = next;
    }
    u64::try_from(ways[s]).map_err(|_| overflow("diagonal count"))
}

fn power_table(values: &[i64], spec: &SystemSpec) -> Result<Vec<Vec<i64>>> {
    let s = i128::from(spec.variables_per_side);
    values
        .iter()
        .map(|&x| {
            spec.moments
                .iter()
                .map(|&e| {
                    let p = i128::from(x).checked_pow(e).filter(|p| p.abs().checked_mul(s).is_some_and(|b| b <= i64::MAX as i128));
                    p.map(|p| p as i64).ok_or_else(|| overflow(&format!("{s} · {x}^{e}")))
                })
                .collect()
        })
        .collect()
}

fn bin_tuples(powers: &[Vec<i64>], s: u32, first: usize) -> HashMap<Vec<i64>, u64> {
    let width = powers[0].len();
    let mut bins = HashMap::new();
    let mut idx = vec![0usize; s as usize];
    idx[0] = first;
    // sums[d] holds the power sums of idx[0..d].
    let mut sums = vec![vec![0i64; width]; s as usize + 1];
    let mut depth = 0;
    loop {
        if depth == s as usize {
            *bins.entry(sums[depth].clone()).or_insert(0) += 1;
            // Advance the odometer, never touching position 0.
            loop {
                depth -= 1;
                if depth == 0 {
                    return bins;
                }
                idx[depth] += 1;
                if idx[depth] < powers.len() {
                    break;
                }
                idx[depth] = 0;
            }
        }
        let (lo, hi) = sums.split_at_mut(depth + 1);
        for ((out, &a), &b) in hi[0].iter_mut().zip(&lo[depth]).zip(&powers[idx[depth]]) {
            *out = a + b;
        }
        depth += 1;
        if depth < s as usize {
            idx[depth] = 0;
        }
    }
}

/// Counts solutions of the system over a one-dimensional set.
pub fn count_solutions(support: &LatticeSet, spec: &SystemSpec, budget: u128) -> Result<CountResult> {
    if support.dimension() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: support.dimension() });
    }
    if support.is_empty() {
        return Err(Error::ZeroVector);
    }
    let s = spec.variables_per_side;
    let tuples = (support.len() as u128).checked_pow(s).unwrap_or(u128::MAX);
    if tuples > budget {
        return Err(Error::BudgetExceeded { required: tuples, budget });
    }
    let powers = power_table(&support.scalars()?, spec)?;

    let bins = (0..powers.len())
        .into_par_iter()
        .map(|first| bin_tuples(&powers, s, first))
        .reduce(HashMap::new, |mut a, b| {
            let (mut big, small) = if a.len() >= b.len() { (std::mem::take(&mut a), b) } else { (b, a) };
            for (key, c) in small {
                *big.entry(key).or_insert(0) += c;
            }
            big
        });
    let count = bins.values().try_fold(0u64, |acc, &c| {
        c.checked_mul(c).and_then(|sq| acc.checked_add(sq)).ok_or_else(|| overflow("solution count"))
    })?;

    Ok(CountResult {
        set: SetDescriptor::of_lattice(support),
        spec: spec.clone(),
        count,
        diagonal_count: diagonal_count(support.len(), s)?,
        tuples_enumerated: tuples as u64,
    })
}

/// [`count_solutions`] for the degree-`degree` Vinogradov system on level
/// `j` of an ellipsephic set.
pub fn count_vinogradov_ellipsephic(
    generator: &DigitSet,
    j: u32,
    s: u32,
    degree: u32,
    budget: u128,
) -> Result<CountResult> {
    let spec = SystemSpec::vinogradov(s, degree)?;
    let level = enumerate_level(generator, j)?;
    let mut result = count_solutions(level.elements(), &spec, budget)?;
    result.set = SetDescriptor::Ellipsephic { generator: generator.clone(), level: j };
    Ok(result)
}

/// Cauchy–Schwarz floor `(k^j)^{2s} / ((2s q^j + 1)(2s q^{2j} + 1))` for the
/// quadratic system: the `k^{js}` tuples per side fall into at most that
/// many `(Σx, Σx²)` bins.
pub fn offdiagonal_lower_bound(generator: &DigitSet, j: u32, s: u32, degree: u32) -> Result<f64> {
    if degree != 2 {
        return Err(Error::InvalidParameter(format!("the floor is stated for degree 2, got {degree}")));
    }
    let k = generator.len() as f64;
    let qj = (generator.base() as f64).powi(j as i32);
    let two_s = 2.0 * f64::from(s);
    let tuples = k.powi(j as i32).powi(2 * s as i32);
    Ok(tuples / ((two_s * qj + 1.0) * (two_s * qj * qj + 1.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub set: SetDescriptor,
    pub n: u32,
    pub energy: u64,
    /// `energy / |S|^n`, the objective at the constant weight.
    #[serde(serialize_with = "serialize_real")]
    pub uniform_value_2n: f64,
    #[serde(serialize_with = "serialize_real")]
    pub optimized_value_2n: f64,
    /// Whether the constant weight is known to be extremal for this set.
    pub uniform_extremal: bool,
    pub passed: bool,
}

pub const ENERGY_EQUALITY_TOLERANCE: f64 = 1e-9;

/// `S` translated to start at 0 and divided by the gcd of its elements, or
/// its reflection, whichever is lexicographically smaller.
fn affine_normal_form(values: &[i64]) -> Vec<i64> {
    let min = values.iter().copied().min().unwrap_or(0);
    let shifted: Vec<i64> = values.iter().map(|&x| x - min).collect();
    let g = shifted.iter().fold(0i64, |a, &b| gcd(a, b)).max(1);
    let mut forward: Vec<i64> = shifted.iter().map(|&x| x / g).collect();
    forward.sort_unstable();
    let top = forward.last().copied().unwrap_or(0);
    let mut reflected: Vec<i64> = forward.iter().map(|&x| top - x).collect();
    reflected.sort_unstable();
    forward.min(reflected)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Compares the constant-weight objective (an exact energy ratio) with the
/// optimizer's maximum. The first can never exceed the second; for affine
/// images of `{0,1}` and `{0,1,3}` with `n = 2` they must agree.
pub fn energy_vs_restriction(support: &LatticeSet, n: u32, cfg: &OptimizerConfig) -> Result<EnergyReport> {
    let energy = additive_energy(support, n, DEFAULT_ENUMERATION_BUDGET)?;
    let uniform = energy as f64 / (support.len() as f64).powi(n as i32);
    let est = estimate_restriction(support, n, cfg)?;
    let uniform_extremal = n == 2
        && support.dimension() == 1
        && matches!(affine_normal_form(&support.scalars()?).as_slice(), [0, 1] | [0, 1, 3]);
    let below = uniform <= est.value_2n * (1.0 + 1e-12);
    let equal = (uniform - est.value_2n).abs() <= ENERGY_EQUALITY_TOLERANCE;
    Ok(EnergyReport {
        set: SetDescriptor::of_lattice(support),
        n,
        energy,
        uniform_value_2n: uniform,
        optimized_value_2n: est.value_2n,
        uniform_extremal,
        passed: below && (!uniform_extremal || equal),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(s: &str) -> DigitSet {
        s.parse().unwrap()
    }

    fn naive(values: &[i64], spec: &SystemSpec) -> u64 {
        let s = spec.variables_per_side as usize;
        let k = values.len();
        let total = k.pow(2 * s as u32);
        let mut count = 0;
        for code in 0..total {
            let mut c = code;
            let mut tuple = Vec::with_capacity(2 * s);
            for _ in 0..2 * s {
                tuple.push(values[c % k]);
                c /= k;
            }
            let (x, y) = tuple.split_at(s);
            if spec.moments.iter().all(|&e| {
                x.iter().map(|v| v.pow(e)).sum::<i64>() == y.iter().map(|v| v.pow(e)).sum::<i64>()
            }) {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn linear_counts_are_six_to_the_j() {
        for j in 1..=3 {
            let level = enumerate_level(&ds("3:0,1"), j).unwrap();
            let r = count_solutions(level.elements(), &SystemSpec::linear(2).unwrap(), DEFAULT_COUNT_BUDGET).unwrap();
            assert_eq!(r.count, 6u64.pow(j));
        }
    }

    #[test]
    fn single_variable_forces_equality() {
        let s = LatticeSet::from_integers([3, -7, 11, 20]);
        let r = count_solutions(&s, &SystemSpec::linear(1).unwrap(), DEFAULT_COUNT_BUDGET).unwrap();
        assert_eq!(r.count, 4);
        assert_eq!(r.diagonal_count, 4);
    }

    #[test]
    fn vinogradov_small_levels() {
        let r = count_vinogradov_ellipsephic(&ds("3:0,1"), 1, 6, 2, DEFAULT_COUNT_BUDGET).unwrap();
        assert!(r.count >= 64);
        assert_eq!(r.count, naive(&[0, 1], &SystemSpec::vinogradov(6, 2).unwrap()));
        let r2 = count_vinogradov_ellipsephic(&ds("3:0,1"), 2, 6, 2, DEFAULT_COUNT_BUDGET).unwrap();
        assert!(r2.count >= 4096);
        let one = count_vinogradov_ellipsephic(&ds("5:2"), 2, 4, 3, DEFAULT_COUNT_BUDGET).unwrap();
        assert_eq!(one.count, 1);
    }

    #[test]
    fn matches_naive_on_small_systems() {
        let values = [0, 2, 3, 7];
        for spec in [SystemSpec::linear(2).unwrap(), SystemSpec::vinogradov(3, 2).unwrap(), SystemSpec::new(2, vec![1, 3]).unwrap()] {
            let r = count_solutions(&LatticeSet::from_integers(values), &spec, DEFAULT_COUNT_BUDGET).unwrap();
            assert_eq!(r.count, naive(&values, &spec), "{spec:?}");
        }
    }

    #[test]
    fn diagonal_counts() {
        // Two values, s = 2: (aa,aa), (bb,bb), and the 4 pairs among ab/ba.
        assert_eq!(diagonal_count(2, 2).unwrap(), 6);
        assert_eq!(diagonal_count(1, 6).unwrap(), 1);
        assert_eq!(diagonal_count(5, 1).unwrap(), 5);
        // {0,1}, s = 6: Σ_m C(6,m)² = C(12,6).
        assert_eq!(diagonal_count(2, 6).unwrap(), 924);
    }

    #[test]
    fn offdiagonal_floor_example() {
        let v = offdiagonal_lower_bound(&ds("3:0,1"), 1, 6, 2).unwrap();
        assert!((v - 4096.0 / (37.0 * 109.0)).abs() < 1e-12);
        assert!(offdiagonal_lower_bound(&ds("3:0,1"), 1, 6, 3).is_err());
    }

    #[test]
    fn budget_and_overflow_checks() {
        let s = LatticeSet::from_integers(0..100);
        let err = count_solutions(&s, &SystemSpec::linear(5).unwrap(), 1000).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
        let s = LatticeSet::from_integers([0, 1 << 40]);
        let err = count_solutions(&s, &SystemSpec::vinogradov(2, 2).unwrap(), DEFAULT_COUNT_BUDGET).unwrap_err();
        assert!(matches!(err, Error::OverflowRisk(_)));
    }

    #[test]
    fn spec_validation() {
        assert!(SystemSpec::new(0, vec![1]).is_err());
        assert!(SystemSpec::new(2, vec![]).is_err());
        assert!(SystemSpec::new(2, vec![2, 1]).is_err());
        assert!(SystemSpec::new(2, vec![0, 1]).is_err());
    }

    #[test]
    fn energy_examples() {
        let cfg = OptimizerConfig::default();
        let r = energy_vs_restriction(&LatticeSet::from_integers([0, 1]), 2, &cfg).unwrap();
        assert!(r.uniform_extremal && r.passed);
        assert!((r.uniform_value_2n - 1.5).abs() < 1e-15);
        let r = energy_vs_restriction(&LatticeSet::from_integers([0, 1, 3]), 2, &cfg).unwrap();
        assert_eq!(r.energy, 15);
        assert!(r.uniform_extremal && r.passed);
        let r = energy_vs_restriction(&LatticeSet::from_integers([0, 1, 2]), 2, &cfg).unwrap();
        assert!(!r.uniform_extremal && r.passed);
        assert!((r.uniform_value_2n - 19.0 / 9.0).abs() < 1e-15);
        assert!(r.optimized_value_2n > r.uniform_value_2n + 1e-3);
        // Reflection and dilation of {0,1,3}.
        let r = energy_vs_restriction(&LatticeSet::from_integers([10, 14, 16]), 2, &cfg).unwrap();
        assert!(r.uniform_extremal && r.passed);
    }
}
