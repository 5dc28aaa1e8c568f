//! The discrete restriction objective `Σ_t (Σ_{ℓ_1+…+ℓ_n=t} Π a(ℓ_i))²`.
//!
//! For nonnegative weights `a` on a finite `S ⊂ Z^m`, the `2n`-th power of the
//! restriction constant `A_{2n,m}(S)` is the maximum of this quantity over
//! unit-norm `a`. The inner sum is the `n`-fold self-convolution `a^{*n}`, so
//! the objective is `‖a^{*n}‖²` and its gradient is a correlation of
//! `a^{*n}` with `a^{*(n-1)}`.
//!
//! Two evaluation paths exist. [`convolve_power`] works directly on lattice
//! points with hash-keyed accumulation. [`Evaluator`] packs the support into
//! scalar codes first and is what the optimizer calls in its inner loop.

use std::collections::{BTreeMap, HashMap};

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::json::serialize_reals;
use crate::lattice::{LatticeSet, Point};

/// Default cap on `|S|^n` for [`additive_energy`] and friends.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 100_000_000;

/// Packed convolution buffers larger than this fall back to hashing.
const DENSE_LIMIT: usize = 1 << 24;

/// Nonnegative weights aligned index-for-index with a support set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeights")]
pub struct WeightVector {
    support: LatticeSet,
    #[serde(serialize_with = "serialize_reals")]
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawWeights {
    support: LatticeSet,
    values: Vec<f64>,
}

impl TryFrom<RawWeights> for WeightVector {
    type Error = Error;

    fn try_from(raw: RawWeights) -> Result<Self> {
        WeightVector::new(raw.support, raw.values)
    }
}

impl WeightVector {
    pub fn new(support: LatticeSet, values: Vec<f64>) -> Result<Self> {
        if values.len() != support.len() {
            return Err(Error::DimensionMismatch { expected: support.len(), found: values.len() });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidWeights(format!("weight {v} is negative or not finite")));
        }
        Ok(Self { support, values })
    }

    /// The constant unit-norm weight `|S|^{-1/2}`.
    pub fn uniform(support: LatticeSet) -> Self {
        let c = 1.0 / (support.len() as f64).sqrt();
        let values = vec![c; support.len()];
        Self { support, values }
    }

    /// All mass on the point with index `index`.
    pub fn single_mass(support: LatticeSet, index: usize) -> Self {
        let mut values = vec![0.0; support.len()];
        values[index] = 1.0;
        Self { support, values }
    }

    pub fn support(&self) -> &LatticeSet {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.values)
    }

    /// Returns the unit-norm rescaling and the factor that was divided out.
    pub fn normalized(&self) -> Result<(WeightVector, f64)> {
        let scale = self.norm();
        if scale == 0.0 {
            return Err(Error::ZeroVector);
        }
        let values = self.values.iter().map(|v| v / scale).collect();
        Ok((Self { support: self.support.clone(), values }, scale))
    }

    /// Weight at `point`, zero off the support.
    pub fn weight_at(&self, point: &[i64]) -> f64 {
        self.support.index_of(point).map_or(0.0, |i| self.values[i])
    }
}

pub(crate) fn l2_norm(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// A finitely supported real function on `Z^m` with no stored zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal {
    dimension: usize,
    entries: HashMap<Point, f64>,
}

impl SparseSignal {
    /// Unit mass at the origin of `Z^m`.
    pub fn delta(dimension: usize) -> Self {
        let mut entries = HashMap::new();
        entries.insert(vec![0; dimension], 1.0);
        Self { dimension, entries }
    }

    pub fn from_weights(w: &WeightVector) -> Self {
        let entries = w
            .support
            .iter()
            .zip(&w.values)
            .filter(|(_, &v)| v != 0.0)
            .map(|(p, &v)| (p.clone(), v))
            .collect();
        Self { dimension: w.support.dimension(), entries }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, t: &[i64]) -> f64 {
        self.entries.get(t).copied().unwrap_or(0.0)
    }

    /// Entries in lexicographic order of `t`.
    pub fn sorted_entries(&self) -> Vec<(&Point, f64)> {
        let ordered: BTreeMap<&Point, f64> = self.entries.iter().map(|(k, &v)| (k, v)).collect();
        ordered.into_iter().collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.sorted_entries().iter().map(|(_, v)| v).sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.sorted_entries().iter().map(|(_, v)| v * v).sum()
    }

    /// `self * w` by accumulating every pairwise product under its key.
    pub fn convolve(&self, w: &WeightVector) -> SparseSignal {
        let mut entries: HashMap<Point, f64> = HashMap::with_capacity(self.entries.len() * w.support.len());
        for (t, a) in self.sorted_entries() {
            for (l, &b) in w.support.iter().zip(&w.values) {
                let key: Point = t.iter().zip(l).map(|(x, y)| x + y).collect();
                *entries.entry(key).or_insert(0.0) += a * b;
            }
        }
        entries.retain(|_, v| *v != 0.0);
        SparseSignal { dimension: self.dimension, entries }
    }
}

impl Serialize for SparseSignal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let sorted = self.sorted_entries();
        let mut map = s.serialize_map(Some(sorted.len()))?;
        for (t, v) in sorted {
            let key: Vec<String> = t.iter().map(i64::to_string).collect();
            map.serialize_entry(&key.join(","), &crate::json::real_value(v))?;
        }
        map.end()
    }
}

fn check_sum_range(support: &LatticeSet, n: u32) -> Result<()> {
    let bound = support.max_abs_coordinate() as u128 * n as u128;
    if bound > i64::MAX as u128 {
        return Err(Error::OverflowRisk(format!("{n}-fold sums of points up to {}", support.max_abs_coordinate())));
    }
    Ok(())
}

/// The `n`-fold self-convolution `w^{*n}` over `Z^m`, computed as
/// `((w * w) * w) * …` with hash-keyed accumulation.
pub fn convolve_power(w: &WeightVector, n: u32) -> Result<SparseSignal> {
    if n == 0 {
        return Err(Error::InvalidParameter("convolution power must be at least 1".into()));
    }
    check_sum_range(&w.support, n)?;
    let mut acc = SparseSignal::from_weights(w);
    for _ in 1..n {
        acc = acc.convolve(w);
    }
    Ok(acc)
}

/// `‖w^{*n}‖²` for `w / ‖w‖`; a lower bound on `A_{2n,m}(S)^{2n}`.
pub fn objective(w: &WeightVector, n: u32) -> Result<f64> {
    let (unit, _) = w.normalized()?;
    let eval = Evaluator::new(&unit.support, n)?;
    Ok(eval.value(&unit.values))
}

/// Exact gradient of the unnormalized `‖w^{*n}‖²` with respect to `w`:
/// `2n Σ_t w^{*n}(t) w^{*(n-1)}(t - ℓ)`.
pub fn gradient(w: &WeightVector, n: u32) -> Result<Vec<f64>> {
    let eval = Evaluator::new(&w.support, n)?;
    let mut grad = vec![0.0; w.values.len()];
    eval.value_and_gradient(&w.values, &mut grad);
    Ok(grad)
}

/// Integer representation counts `r_n(t) = #{(x_1..x_n) ∈ S^n : Σ x_i = t}`.
pub fn representation_counts(support: &LatticeSet, n: u32, budget: u128) -> Result<HashMap<Point, u64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("order n must be at least 1".into()));
    }
    let required = (support.len() as u128).checked_pow(n).unwrap_or(u128::MAX);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    check_sum_range(support, n)?;
    let mut counts: HashMap<Point, u64> = HashMap::new();
    counts.insert(vec![0; support.dimension()], 1);
    for _ in 0..n {
        let mut next: HashMap<Point, u64> = HashMap::with_capacity(counts.len() * support.len());
        for (t, &c) in &counts {
            for l in support.iter() {
                let key: Point = t.iter().zip(l).map(|(x, y)| x + y).collect();
                *next.entry(key).or_insert(0) += c;
            }
        }
        counts = next;
    }
    Ok(counts)
}

/// Number of `2n`-tuples of `S` with equal `n`-fold sums, `Σ_t r_n(t)²`.
pub fn additive_energy(support: &LatticeSet, n: u32, budget: u128) -> Result<u64> {
    let counts = representation_counts(support, n, budget)?;
    counts.values().try_fold(0u64, |acc, &c| {
        c.checked_mul(c)
            .and_then(|sq| acc.checked_add(sq))
            .ok_or_else(|| Error::OverflowRisk("additive energy".into()))
    })
}

/// The objective at the constant unit-norm weight, `E_n(S) / |S|^n`.
pub fn uniform_objective(support: &LatticeSet, n: u32, budget: u128) -> Result<f64> {
    if support.is_empty() {
        return Err(Error::ZeroVector);
    }
    let energy = additive_energy(support, n, budget)?;
    Ok(energy as f64 / (support.len() as f64).powi(n as i32))
}

enum Accumulator {
    Dense(Vec<f64>),
    Sparse(HashMap<i64, f64>),
}

impl Accumulator {
    fn add(&mut self, code: i64, v: f64) {
        match self {
            Accumulator::Dense(buf) => buf[code as usize] += v,
            Accumulator::Sparse(map) => *map.entry(code).or_insert(0.0) += v,
        }
    }

    fn get(&self, code: i64) -> f64 {
        match self {
            Accumulator::Dense(buf) => buf.get(code as usize).copied().unwrap_or(0.0),
            Accumulator::Sparse(map) => map.get(&code).copied().unwrap_or(0.0),
        }
    }

    fn nonzero_sorted(&self) -> Vec<(i64, f64)> {
        match self {
            Accumulator::Dense(buf) => buf
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, &v)| (i as i64, v))
                .collect(),
            Accumulator::Sparse(map) => {
                let mut out: Vec<(i64, f64)> = map.iter().filter(|(_, &v)| v != 0.0).map(|(&k, &v)| (k, v)).collect();
                out.sort_unstable_by_key(|e| e.0);
                out
            }
        }
    }

    fn sum_of_squares(&self) -> f64 {
        match self {
            Accumulator::Dense(buf) => buf.iter().map(|v| v * v).sum(),
            Accumulator::Sparse(_) => self.nonzero_sorted().iter().map(|(_, v)| v * v).sum(),
        }
    }
}

/// Objective and gradient evaluator for a fixed support and order `n`.
///
/// Points are packed into integer codes by a mixed-radix map whose radix in
/// each coordinate is `n·span + 1`, so distinct `r`-fold sums (`r ≤ n`) get
/// distinct codes and code arithmetic agrees with lattice arithmetic. The map
/// is therefore a Freiman isomorphism of order `n` and leaves the objective
/// unchanged.
pub struct Evaluator {
    n: u32,
    codes: Vec<i64>,
    dense_len: Option<usize>,
}

impl Evaluator {
    pub fn new(support: &LatticeSet, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("order n must be at least 1".into()));
        }
        check_sum_range(support, n)?;
        let Some(bounds) = support.bounding_box() else {
            return Ok(Self { n, codes: Vec::new(), dense_len: Some(1) });
        };
        let overflow = || Error::OverflowRisk(format!("packing {n}-fold sums of a {}-point set", support.len()));
        let m = support.dimension();
        let mut strides = vec![0i64; m];
        let mut stride: i64 = 1;
        let mut max_code: i64 = 0;
        for axis in (0..m).rev() {
            let span = bounds[axis].1.checked_sub(bounds[axis].0).ok_or_else(overflow)?;
            strides[axis] = stride;
            max_code = span.checked_mul(stride).and_then(|s| s.checked_add(max_code)).ok_or_else(overflow)?;
            let radix = span.checked_mul(n as i64).and_then(|r| r.checked_add(1)).ok_or_else(overflow)?;
            stride = stride.checked_mul(radix).ok_or_else(overflow)?;
        }
        let top = max_code.checked_mul(n as i64).ok_or_else(overflow)?;
        let codes = support
            .iter()
            .map(|p| (0..m).map(|a| (p[a] - bounds[a].0) * strides[a]).sum())
            .collect();
        let dense_len = usize::try_from(top).ok().map(|t| t + 1).filter(|&len| len <= DENSE_LIMIT);
        Ok(Self { n, codes, dense_len })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn support_len(&self) -> usize {
        self.codes.len()
    }

    fn accumulator(&self) -> Accumulator {
        match self.dense_len {
            Some(len) => Accumulator::Dense(vec![0.0; len]),
            None => Accumulator::Sparse(HashMap::new()),
        }
    }

    fn step(&self, prev: &[(i64, f64)], values: &[f64]) -> Accumulator {
        let mut acc = self.accumulator();
        for &(u, a) in prev {
            for (&c, &b) in self.codes.iter().zip(values) {
                acc.add(u + c, a * b);
            }
        }
        acc
    }

    /// Returns `(w^{*(n-1)}` as sorted sparse entries, `w^{*n})`.
    fn powers(&self, values: &[f64]) -> (Vec<(i64, f64)>, Accumulator) {
        let mut prev: Vec<(i64, f64)> = vec![(0, 1.0)];
        for _ in 1..self.n {
            prev = self.step(&prev, values).nonzero_sorted();
        }
        let top = self.step(&prev, values);
        (prev, top)
    }

    /// Unnormalized `‖w^{*n}‖²`.
    pub fn value(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.codes.len());
        self.powers(values).1.sum_of_squares()
    }

    /// Unnormalized `‖w^{*n}‖²`, writing its gradient into `grad`.
    pub fn value_and_gradient(&self, values: &[f64], grad: &mut [f64]) -> f64 {
        debug_assert_eq!(values.len(), self.codes.len());
        let (prev, top) = self.powers(values);
        let scale = 2.0 * self.n as f64;
        for (g, &c) in grad.iter_mut().zip(&self.codes) {
            let corr: f64 = prev.iter().map(|&(u, a)| a * top.get(u + c)).sum();
            *g = scale * corr;
        }
        top.sum_of_squares()
    }
}
