//! Digit sets, ellipsephic levels and Freiman-map utilities.
//!
//! A [`DigitSet`] `q:{d_1 < ... < d_k}` generates the ellipsephic set of
//! integers whose base-`q` digits all lie in `{d_i}`. Its level `j` is the
//! finite set of such integers below `q^j`; scaled by `q^-j` and thickened
//! by `[0, 1]` it is level `j` of the arithmetic Cantor set with the same
//! digits, so only the integer side is represented here.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lattice::{LatticeSet, Point};

/// Largest number of elements a level may have before enumeration is refused.
pub const MAX_LEVEL_ELEMENTS: u128 = 1 << 26;

/// Default cap on `|S|^{2n}` for [`freiman_defect`].
pub const DEFAULT_TUPLE_BUDGET: u128 = 100_000_000;

/// Base `q >= 2` together with a strictly increasing list of digits in `[0, q)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DigitSet {
    base: u64,
    digits: Vec<u64>,
}

impl DigitSet {
    pub fn new(base: u64, digits: Vec<u64>) -> Result<Self> {
        if base < 2 {
            return Err(Error::InvalidDigitSet(format!("base must be at least 2, got {base}")));
        }
        if base > i64::MAX as u64 {
            return Err(Error::OverflowRisk(format!("base {base}")));
        }
        if digits.is_empty() {
            return Err(Error::InvalidDigitSet("digit list is empty".into()));
        }
        if let Some(w) = digits.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDigitSet(format!(
                "digits must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        if let Some(&d) = digits.iter().find(|&&d| d >= base) {
            return Err(Error::InvalidDigitSet(format!("digit {d} is not below base {base}")));
        }
        Ok(Self { base, digits })
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    /// Number of digits `k`.
    pub fn len(&self) -> usize {
        self.digits.len()
    }

    /// Always false; a digit set has at least one digit.
    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn largest_digit(&self) -> u64 {
        *self.digits.last().expect("digit sets are nonempty")
    }

    /// Whether the set is `{0, 1, ..., q - 1}`.
    pub fn is_full(&self) -> bool {
        self.digits.len() as u64 == self.base
    }

    /// The generator with base `q^t` whose digits are the elements of level `t`.
    /// Its level `j` coincides with level `j·t` of `self`.
    pub fn power(&self, t: u32) -> Result<Self> {
        if t == 0 {
            return Err(Error::InvalidParameter("digit-set power must be at least 1".into()));
        }
        let level = enumerate_level(self, t)?;
        let base = checked_pow(self.base, t)?;
        let digits = level.values().iter().map(|&v| v as u64).collect();
        DigitSet::new(base, digits)
    }
}

impl fmt::Display for DigitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.base)?;
        for (i, d) in self.digits.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Parses `q:d1,d2,...,dk`, optionally followed by `^T` to select
/// [`DigitSet::power`]`(T)`.
impl FromStr for DigitSet {
    type Err = Error;

    fn from_str(input: &str) -> Result<Self> {
        let parse_err = |reason: &str| Error::Parse { input: input.to_string(), reason: reason.to_string() };
        let trimmed = input.trim();
        let (body, power) = match trimmed.split_once('^') {
            Some((body, exp)) => {
                let t: u32 = exp.trim().parse().map_err(|_| parse_err("power suffix must be a positive integer"))?;
                (body, Some(t))
            }
            None => (trimmed, None),
        };
        let (base, digits) = body.split_once(':').ok_or_else(|| parse_err("expected `base:digits`"))?;
        let base: u64 = base.trim().parse().map_err(|_| parse_err("base is not a nonnegative integer"))?;
        let digits = digits
            .split(',')
            .map(|d| d.trim().parse::<u64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| parse_err("digits must be nonnegative integers"))?;
        let set = DigitSet::new(base, digits)?;
        match power {
            Some(t) => set.power(t),
            None => Ok(set),
        }
    }
}

impl Serialize for DigitSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DigitSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Level `j` of the ellipsephic set generated by a [`DigitSet`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EllipsephicLevel {
    generator: DigitSet,
    level: u32,
    elements: LatticeSet,
}

impl EllipsephicLevel {
    pub fn generator(&self) -> &DigitSet {
        &self.generator
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn elements(&self) -> &LatticeSet {
        &self.elements
    }

    pub fn into_elements(self) -> LatticeSet {
        self.elements
    }

    /// Elements as plain integers in increasing order.
    pub fn values(&self) -> Vec<i64> {
        self.elements.points().iter().map(|p| p[0]).collect()
    }

    /// The `level` base-`q` digits of `x`, least significant first.
    pub fn digits_of(&self, x: i64) -> Vec<u64> {
        let q = self.generator.base;
        let mut rest = x as u64;
        (0..self.level)
            .map(|_| {
                let d = rest % q;
                rest /= q;
                d
            })
            .collect()
    }
}

fn checked_pow(base: u64, exp: u32) -> Result<u64> {
    base.checked_pow(exp)
        .filter(|&v| v <= i64::MAX as u64)
        .ok_or_else(|| Error::OverflowRisk(format!("{base}^{exp}")))
}

/// All `k^j` integers `Σ_{s<j} a_s q^s` with every `a_s` a digit of `generator`.
pub fn enumerate_level(generator: &DigitSet, j: u32) -> Result<EllipsephicLevel> {
    checked_pow(generator.base, j)?;
    let count = (generator.len() as u128).checked_pow(j).unwrap_or(u128::MAX);
    if count > MAX_LEVEL_ELEMENTS {
        return Err(Error::BudgetExceeded { required: count, budget: MAX_LEVEL_ELEMENTS });
    }
    let mut values: Vec<i64> = vec![0];
    let mut place: i64 = 1;
    for s in 0..j {
        let mut next = Vec::with_capacity(values.len() * generator.len());
        for &d in &generator.digits {
            let shift = d as i64 * place;
            next.extend(values.iter().map(|&v| v + shift));
        }
        values = next;
        if s + 1 < j {
            place *= generator.base as i64;
        }
    }
    Ok(EllipsephicLevel {
        generator: generator.clone(),
        level: j,
        elements: LatticeSet::from_integers(values),
    })
}

/// True iff `n · d_k >= q`, i.e. adding `n` digits can carry.
pub fn has_carryover(generator: &DigitSet, n: u32) -> bool {
    (n as u128) * (generator.largest_digit() as u128) >= generator.base as u128
}

/// `log k / log q`.
pub fn hausdorff_dimension(generator: &DigitSet) -> f64 {
    (generator.len() as f64).ln() / (generator.base as f64).ln()
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Greatest common divisor of the digits, or 1 when all digits are 0.
pub fn digit_gcd(generator: &DigitSet) -> u64 {
    match generator.digits.iter().fold(0, |g, &d| gcd(g, d)) {
        0 => 1,
        g => g,
    }
}

/// Divides every digit by their gcd. `x ↦ x / g` is a Freiman isomorphism
/// of every order between corresponding levels.
pub fn normalize_digits(generator: &DigitSet) -> DigitSet {
    let g = digit_gcd(generator);
    DigitSet {
        base: generator.base,
        digits: generator.digits.iter().map(|d| d / g).collect(),
    }
}

/// Cartesian product `S × S'` in `Z^{m+m'}`.
pub fn tensor(left: &LatticeSet, right: &LatticeSet) -> LatticeSet {
    let mut points = Vec::with_capacity(left.len() * right.len());
    for a in left.iter() {
        for b in right.iter() {
            let mut p = a.clone();
            p.extend_from_slice(b);
            points.push(p);
        }
    }
    LatticeSet::new(left.dimension() + right.dimension(), points)
        .expect("product of well-formed sets is well-formed")
}

/// Maps each element of level `j·t` to its `j` base-`q^t` digits
/// `(a_0, ..., a_{j-1})`; every digit is an element of level `t`.
pub fn regroup_base(level: &EllipsephicLevel, t: u32) -> Result<LatticeSet> {
    if t == 0 || level.level == 0 || !level.level.is_multiple_of(t) {
        return Err(Error::LevelNotDivisible { level: level.level, t });
    }
    let blocks = (level.level / t) as usize;
    let block_base = checked_pow(level.generator.base, t)? as i64;
    let points = level
        .elements
        .iter()
        .map(|p| {
            let mut rest = p[0];
            (0..blocks)
                .map(|_| {
                    let d = rest % block_base;
                    rest /= block_base;
                    d
                })
                .collect()
        })
        .collect();
    LatticeSet::new(blocks, points)
}

/// Inverse of [`regroup_base`]: `(a_0, ..., a_{j-1}) ↦ Σ a_s (q^t)^s`.
pub fn ungroup_base(point: &[i64], block_base: i64) -> i64 {
    point.iter().rev().fold(0, |acc, &a| acc * block_base + a)
}

/// Pairs every point of `domain` with `f(point)`.
pub fn pairing_from_fn<F>(domain: &LatticeSet, f: F) -> Vec<(Point, Point)>
where
    F: Fn(&[i64]) -> Point,
{
    domain.iter().map(|p| (p.clone(), f(p))).collect()
}

/// The set `D` of discrepancies `Σ φ(x_i) − Σ φ(y_i)` over all `2n`-tuples of
/// the domain with `Σ x_i = Σ y_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FreimanDefect {
    pub defect_points: LatticeSet,
    pub size: usize,
}

/// Enumerates the Freiman defect of the bijection `pairing: domain → codomain`
/// of order `n`. Rejects instances with `|S|^{2n} > budget`.
pub fn freiman_defect(
    domain: &LatticeSet,
    codomain: &LatticeSet,
    pairing: &[(Point, Point)],
    n: u32,
    budget: u128,
) -> Result<FreimanDefect> {
    if n == 0 {
        return Err(Error::InvalidParameter("order n must be at least 1".into()));
    }
    if domain.len() != codomain.len() || pairing.len() != domain.len() {
        return Err(Error::NotABijection(format!(
            "|S| = {}, |S'| = {}, pairs = {}",
            domain.len(),
            codomain.len(),
            pairing.len()
        )));
    }
    let required = (domain.len() as u128).checked_pow(2 * n).unwrap_or(u128::MAX);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let limit = i64::MAX as u128 / n as u128;
    if domain.max_abs_coordinate() as u128 > limit || codomain.max_abs_coordinate() as u128 > limit {
        return Err(Error::OverflowRisk(format!("{n}-fold sums of the given sets")));
    }

    let mut image: Vec<Option<&Point>> = vec![None; domain.len()];
    let mut hit = vec![false; codomain.len()];
    for (x, y) in pairing {
        let i = domain
            .index_of(x)
            .ok_or_else(|| Error::NotABijection(format!("{x:?} is not in the domain")))?;
        let k = codomain
            .index_of(y)
            .ok_or_else(|| Error::NotABijection(format!("{y:?} is not in the codomain")))?;
        if image[i].is_some() || hit[k] {
            return Err(Error::NotABijection(format!("{x:?} ↦ {y:?} repeats a point")));
        }
        image[i] = Some(y);
        hit[k] = true;
    }
    let image: Vec<&Point> = image.into_iter().map(|p| p.expect("every point paired")).collect();

    // Sums are symmetric in the tuple order, so multisets of indices suffice.
    let m = domain.dimension();
    let m2 = codomain.dimension();
    let mut bins: HashMap<Point, HashSet<Point>> = HashMap::new();
    let mut idx = vec![0usize; n as usize];
    if !domain.is_empty() {
        loop {
            let mut sum = vec![0i64; m];
            let mut image_sum = vec![0i64; m2];
            for &i in &idx {
                for (s, c) in sum.iter_mut().zip(&domain.points()[i]) {
                    *s += c;
                }
                for (s, c) in image_sum.iter_mut().zip(image[i]) {
                    *s += c;
                }
            }
            bins.entry(sum).or_default().insert(image_sum);
            if !advance_multiset(&mut idx, domain.len()) {
                break;
            }
        }
    }

    let mut defect: HashSet<Point> = HashSet::new();
    for images in bins.values() {
        for a in images {
            for b in images {
                defect.insert(a.iter().zip(b).map(|(x, y)| x - y).collect());
            }
        }
    }
    let defect_points = LatticeSet::new(m2, defect.into_iter().collect())?;
    Ok(FreimanDefect { size: defect_points.len(), defect_points })
}

/// Steps a nondecreasing index tuple to its successor; false after the last.
pub(crate) fn advance_multiset(idx: &mut [usize], size: usize) -> bool {
    let mut pos = idx.len();
    while pos > 0 {
        pos -= 1;
        if idx[pos] + 1 < size {
            let v = idx[pos] + 1;
            for slot in &mut idx[pos..] {
                *slot = v;
            }
            return true;
        }
    }
    false
}
