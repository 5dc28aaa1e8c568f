//! Maximizing `‖w^{*n}‖²` over nonnegative unit vectors.
//!
//! Two local methods are provided: projected gradient ascent with a
//! backtracking step, and the Lagrange fixed-point iteration
//! `w ← ∇/‖∇‖`. [`estimate_restriction`] runs both from a deterministic set of
//! starts and keeps the best value. Nothing here certifies global
//! optimality, so every estimate is a lower bound on `A_{2n,m}(S)^{2n}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cantor::DigitSet;
use crate::error::{Error, Result};
use crate::json::serialize_real;
use crate::lattice::LatticeSet;
use crate::restriction::{l2_norm, Evaluator, WeightVector};
use crate::rng::SplitMix64;

/// Ties between restarts closer than this go to the lower restart index.
pub const TIE_TOLERANCE: f64 = 1e-12;

const MIN_STEP: f64 = 1e-30;
const MAX_STEP: f64 = 1e12;
/// Consecutive accepted steps without strict increase before ascent gives up.
const STALL_LIMIT: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GradientAscent,
    FixedPoint,
    Both,
}

impl Method {
    fn enabled(self) -> &'static [Method] {
        match self {
            Method::GradientAscent => &[Method::GradientAscent],
            Method::FixedPoint => &[Method::FixedPoint],
            Method::Both => &[Method::GradientAscent, Method::FixedPoint],
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gradient_ascent" | "gradient-ascent" | "ga" => Ok(Method::GradientAscent),
            "fixed_point" | "fixed-point" | "fp" => Ok(Method::FixedPoint),
            "both" => Ok(Method::Both),
            other => Err(Error::InvalidParameter(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: Method,
    /// Stopping threshold: Riemannian norm of the gradient of `ln A` for ascent, step length
    /// for the fixed-point iteration.
    pub tolerance: f64,
    pub max_iterations: u64,
    /// Number of starts per enabled method.
    pub restarts: usize,
    pub rng_seed: u64,
    pub initial_step: f64,
    /// Step multiplier on a rejected ascent step; its inverse grows the step
    /// after an accepted one.
    pub backtrack: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: Method::Both,
            tolerance: 1e-8,
            max_iterations: 100_000,
            restarts: 16,
            rng_seed: 0,
            initial_step: 0.1,
            backtrack: 0.5,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("restarts must be at least 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(Error::InvalidParameter("initial step must be positive".into()));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidParameter("backtracking factor must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// What set an estimate refers to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetDescriptor {
    Ellipsephic { generator: DigitSet, level: u32 },
    Lattice { dimension: usize, size: usize, sha256: String },
}

impl SetDescriptor {
    pub fn of_lattice(set: &LatticeSet) -> Self {
        SetDescriptor::Lattice { dimension: set.dimension(), size: set.len(), sha256: set.content_hash() }
    }
}

/// Best value of `‖w^{*n}‖²` found, with its witness and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictionEstimate {
    pub set: SetDescriptor,
    pub n: u32,
    /// Estimate of `A_{2n,m}(S)^{2n}`.
    #[serde(serialize_with = "serialize_real")]
    pub value_2n: f64,
    /// Estimate of `A_{2n,m}(S)`.
    #[serde(serialize_with = "serialize_real")]
    pub value: f64,
    pub extremizer: WeightVector,
    #[serde(serialize_with = "serialize_real")]
    pub stationarity_residual: f64,
    pub iterations_used: u64,
    pub converged: bool,
    pub method_used: Method,
    pub restart_index: usize,
    pub bound: String,
}

impl RestrictionEstimate {
    pub fn describe(mut self, set: SetDescriptor) -> Self {
        self.set = set;
        self
    }
}

const BOUND_LABEL: &str = "lower bound, conjectured tight";

/// Per-iterate diagnostics recorded by the `*_traced` variants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub objective: f64,
    pub norm: f64,
    pub min_component: f64,
}

fn record(trace: &mut Option<&mut Vec<TraceEntry>>, objective: f64, w: &[f64]) {
    if let Some(t) = trace {
        t.push(TraceEntry {
            objective,
            norm: l2_norm(w),
            min_component: w.iter().copied().fold(f64::INFINITY, f64::min),
        });
    }
}

fn check_start(support: &LatticeSet, n: u32, cfg: &OptimizerConfig, w0: &WeightVector) -> Result<Vec<f64>> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("order n must be at least 1".into()));
    }
    if w0.support() != support {
        return Err(Error::InvalidWeights("starting vector is not supported on the given set".into()));
    }
    let (unit, _) = w0.normalized()?;
    Ok(unit.values().to_vec())
}

/// Tangential part of `g` at the unit vector `w`, with components that would
/// push a zero coordinate negative removed.
fn riemannian_norm(w: &[f64], g: &[f64]) -> f64 {
    let radial: f64 = w.iter().zip(g).map(|(a, b)| a * b).sum();
    w.iter()
        .zip(g)
        .map(|(&wi, &gi)| {
            let r = gi - radial * wi;
            if wi == 0.0 && r <= 0.0 {
                0.0
            } else {
                r * r
            }
        })
        .sum::<f64>()
        .sqrt()
}

/// Clamps negatives to zero and rescales to the unit sphere.
fn project(v: &mut [f64]) -> bool {
    for x in v.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let norm = l2_norm(v);
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    for x in v.iter_mut() {
        *x /= norm;
    }
    true
}

fn kkt_from_gradient(w: &[f64], g: &[f64]) -> Result<f64> {
    let active: Vec<f64> = w.iter().zip(g).map(|(&wi, &gi)| if wi == 0.0 && gi <= 0.0 { 0.0 } else { gi }).collect();
    let gn = l2_norm(&active);
    if gn == 0.0 {
        return Err(Error::ZeroVector);
    }
    let wn = l2_norm(w);
    Ok(w.iter().zip(&active).map(|(a, b)| (a / wn - b / gn).powi(2)).sum::<f64>().sqrt())
}

/// `‖w − g/‖g‖‖` with `g` the objective gradient restricted to the active
/// set; zero exactly at a Lagrange stationary point.
pub fn kkt_residual(w: &WeightVector, n: u32) -> Result<f64> {
    let eval = Evaluator::new(w.support(), n)?;
    let mut g = vec![0.0; w.values().len()];
    eval.value_and_gradient(w.values(), &mut g);
    kkt_from_gradient(w.values(), &g)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    support: &LatticeSet,
    eval: &Evaluator,
    n: u32,
    w: Vec<f64>,
    value_2n: f64,
    iterations_used: u64,
    converged: bool,
    method_used: Method,
) -> Result<RestrictionEstimate> {
    let mut g = vec![0.0; w.len()];
    eval.value_and_gradient(&w, &mut g);
    let stationarity_residual = kkt_from_gradient(&w, &g)?;
    Ok(RestrictionEstimate {
        set: SetDescriptor::of_lattice(support),
        n,
        value_2n,
        value: value_2n.powf(1.0 / (2.0 * n as f64)),
        extremizer: WeightVector::new(support.clone(), w)?,
        stationarity_residual,
        iterations_used,
        converged,
        method_used,
        restart_index: 0,
        bound: BOUND_LABEL.to_string(),
    })
}

/// Projected gradient ascent with a backtracking step.
pub fn gradient_ascent(
    support: &LatticeSet,
    n: u32,
    cfg: &OptimizerConfig,
    w0: &WeightVector,
) -> Result<RestrictionEstimate> {
    gradient_ascent_traced(support, n, cfg, w0, None)
}

pub fn gradient_ascent_traced(
    support: &LatticeSet,
    n: u32,
    cfg: &OptimizerConfig,
    w0: &WeightVector,
    mut trace: Option<&mut Vec<TraceEntry>>,
) -> Result<RestrictionEstimate> {
    let mut w = check_start(support, n, cfg, w0)?;
    let eval = Evaluator::new(support, n)?;
    let mut g = vec![0.0; w.len()];
    let mut value = eval.value_and_gradient(&w, &mut g);
    if !value.is_finite() {
        return Err(Error::NonFinite);
    }
    record(&mut trace, value, &w);

    let mut step = cfg.initial_step;
    let mut iterations = 0;
    let mut converged = false;
    let mut candidate = vec![0.0; w.len()];
    let mut candidate_grad = vec![0.0; w.len()];
    let mut flat = 0;
    loop {
        // Stationarity is measured on the gradient of ln A, i.e. g / (2n F),
        // so the threshold does not scale with the size of the objective.
        if riemannian_norm(&w, &g) <= cfg.tolerance * 2.0 * f64::from(n) * value {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iterations {
            break;
        }
        iterations += 1;

        let mut accepted = false;
        while step >= MIN_STEP {
            for ((c, &wi), &gi) in candidate.iter_mut().zip(&w).zip(&g) {
                *c = wi + step * gi;
            }
            if project(&mut candidate) {
                let cand_value = eval.value_and_gradient(&candidate, &mut candidate_grad);
                if !cand_value.is_finite() {
                    return Err(Error::NonFinite);
                }
                if cand_value >= value {
                    accepted = true;
                    flat = if cand_value > value { 0 } else { flat + 1 };
                    value = cand_value;
                    step = (step / cfg.backtrack).min(MAX_STEP);
                    break;
                }
            }
            step *= cfg.backtrack;
        }
        if !accepted || candidate == w || flat > STALL_LIMIT {
            // No representable ascent step remains.
            break;
        }
        std::mem::swap(&mut w, &mut candidate);
        std::mem::swap(&mut g, &mut candidate_grad);
        record(&mut trace, value, &w);
    }
    finish(support, &eval, n, w, value, iterations, converged, Method::GradientAscent)
}

/// The Lagrange fixed-point iteration `w ← Φ(w)/‖Φ(w)‖` with `Φ` the
/// gradient. Convergence is not guaranteed; `converged` reports whether the
/// step length dropped below tolerance.
pub fn fixed_point(support: &LatticeSet, n: u32, cfg: &OptimizerConfig, w0: &WeightVector) -> Result<RestrictionEstimate> {
    fixed_point_traced(support, n, cfg, w0, None)
}

pub fn fixed_point_traced(
    support: &LatticeSet,
    n: u32,
    cfg: &OptimizerConfig,
    w0: &WeightVector,
    mut trace: Option<&mut Vec<TraceEntry>>,
) -> Result<RestrictionEstimate> {
    if w0.values().iter().any(|&v| v <= 0.0) {
        return Err(Error::NotStrictlyPositive);
    }
    let mut w = check_start(support, n, cfg, w0)?;
    let eval = Evaluator::new(support, n)?;
    let mut g = vec![0.0; w.len()];
    let mut value = eval.value_and_gradient(&w, &mut g);
    record(&mut trace, value, &w);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        let gn = l2_norm(&g);
        if gn == 0.0 {
            return Err(Error::ZeroVector);
        }
        if !gn.is_finite() {
            return Err(Error::NonFinite);
        }
        let next: Vec<f64> = g.iter().map(|gi| gi / gn).collect();
        let moved = next.iter().zip(&w).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        w = next;
        value = eval.value_and_gradient(&w, &mut g);
        iterations += 1;
        record(&mut trace, value, &w);
        if moved <= cfg.tolerance {
            converged = true;
            break;
        }
    }
    finish(support, &eval, n, w, value, iterations, converged, Method::FixedPoint)
}

/// The deterministic list of starting vectors used by [`estimate_restriction`]:
/// uniform, all mass on the first point, then seeded uniform `(0, 1)` draws.
pub fn starting_points(support: &LatticeSet, cfg: &OptimizerConfig) -> Vec<WeightVector> {
    let mut rng = SplitMix64::new(cfg.rng_seed);
    (0..cfg.restarts)
        .map(|r| match r {
            0 => WeightVector::uniform(support.clone()),
            1 => WeightVector::single_mass(support.clone(), 0),
            _ => {
                let values: Vec<f64> = (0..support.len()).map(|_| rng.next_open01()).collect();
                let norm = l2_norm(&values);
                let values = values.iter().map(|v| v / norm).collect();
                WeightVector::new(support.clone(), values).expect("draws are positive and finite")
            }
        })
        .collect()
}

/// Multi-start driver. Restarts run in parallel; the reduction keeps the
/// largest `value_2n`, preferring the earlier restart (ascent before
/// fixed point) on ties within [`TIE_TOLERANCE`].
pub fn estimate_restriction(support: &LatticeSet, n: u32, cfg: &OptimizerConfig) -> Result<RestrictionEstimate> {
    cfg.validate()?;
    if support.is_empty() {
        return Err(Error::ZeroVector);
    }
    Evaluator::new(support, n)?;
    let starts = starting_points(support, cfg);
    let runs: Vec<Vec<Result<RestrictionEstimate>>> = starts
        .par_iter()
        .enumerate()
        .map(|(index, w0)| {
            cfg.method
                .enabled()
                .iter()
                .map(|method| {
                    let run = match method {
                        Method::FixedPoint => fixed_point(support, n, cfg, w0),
                        _ => gradient_ascent(support, n, cfg, w0),
                    };
                    run.map(|mut est| {
                        est.restart_index = index;
                        est
                    })
                })
                .collect()
        })
        .collect();

    let mut best: Option<RestrictionEstimate> = None;
    let mut first_error = None;
    for run in runs.into_iter().flatten() {
        match run {
            Ok(est) => {
                if best.as_ref().is_none_or(|b| est.value_2n > b.value_2n + TIE_TOLERANCE) {
                    best = Some(est);
                }
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_error.unwrap_or(Error::ZeroVector))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(points: &[i64]) -> LatticeSet {
        LatticeSet::from_integers(points.iter().copied())
    }

    fn cfg() -> OptimizerConfig {
        OptimizerConfig::default()
    }

    #[test]
    fn ascent_examples() {
        let s = set(&[0, 1]);
        let est = gradient_ascent(&s, 2, &cfg(), &WeightVector::uniform(s.clone())).unwrap();
        assert!((est.value_2n - 1.5).abs() < 1e-9);
        let s = set(&[0, 1, 3]);
        let est = gradient_ascent(&s, 2, &cfg(), &WeightVector::uniform(s.clone())).unwrap();
        assert!((est.value_2n - 5.0 / 3.0).abs() < 1e-9);
        for &v in est.extremizer.values() {
            assert!((v - 3f64.sqrt().recip()).abs() < 1e-6);
        }
        let s = set(&[5]);
        let est = gradient_ascent(&s, 3, &cfg(), &WeightVector::uniform(s.clone())).unwrap();
        assert_eq!(est.value_2n, 1.0);
        assert!(est.converged && est.iterations_used <= 1);
    }

    #[test]
    fn fixed_point_examples() {
        let s = set(&[0, 1]);
        let w0 = WeightVector::new(s.clone(), vec![0.9, 0.436]).unwrap();
        let est = fixed_point(&s, 2, &cfg(), &w0).unwrap();
        assert!(est.converged);
        assert!((est.value_2n - 1.5).abs() < 1e-9);
        for &v in est.extremizer.values() {
            assert!((v - 0.5f64.sqrt()).abs() < 1e-6);
        }
        let s = set(&[0, 1, 2]);
        let est = fixed_point(&s, 2, &cfg(), &WeightVector::uniform(s.clone())).unwrap();
        assert!((est.value_2n - 15.0 / 7.0).abs() < 1e-9);
        let x = est.extremizer.values();
        assert!((x[0] - (2.0f64 / 7.0).sqrt()).abs() < 1e-6);
        assert!((x[1] - (3.0f64 / 7.0).sqrt()).abs() < 1e-6);
        let s = set(&[-4]);
        let est = fixed_point(&s, 2, &cfg(), &WeightVector::uniform(s.clone())).unwrap();
        assert_eq!(est.value_2n, 1.0);
        assert!(est.converged && est.iterations_used == 1);
    }

    #[test]
    fn fixed_point_needs_positive_start() {
        let s = set(&[0, 1]);
        let w0 = WeightVector::single_mass(s.clone(), 0);
        assert_eq!(fixed_point(&s, 2, &cfg(), &w0).unwrap_err(), Error::NotStrictlyPositive);
    }

    #[test]
    fn ascent_rejects_zero_start() {
        let s = set(&[0, 1]);
        let w0 = WeightVector::new(s.clone(), vec![0.0, 0.0]).unwrap();
        assert_eq!(gradient_ascent(&s, 2, &cfg(), &w0).unwrap_err(), Error::ZeroVector);
    }

    #[test]
    fn driver_examples() {
        let est = estimate_restriction(&set(&[0, 2]), 2, &cfg()).unwrap();
        assert!((est.value_2n - 1.5).abs() < 1e-9);
        let est = estimate_restriction(&set(&[0, 1, 2]), 2, &cfg()).unwrap();
        assert!((est.value_2n - 15.0 / 7.0).abs() < 1e-9);
        let est = estimate_restriction(&set(&[1, 2]), 1, &cfg()).unwrap();
        assert!((est.value_2n - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kkt_examples() {
        let s = set(&[0, 1]);
        let h = 0.5f64.sqrt();
        let at = |v: Vec<f64>| kkt_residual(&WeightVector::new(s.clone(), v).unwrap(), 2).unwrap();
        assert!(at(vec![h, h]) < 1e-12);
        assert!(at(vec![1.0, 0.0]) < 1e-12);
        assert!(at(vec![0.6, 0.8]) > 1e-3);
    }

    #[test]
    fn starts_are_deterministic_and_feasible() {
        let s = set(&[0, 1, 3, 4]);
        let a = starting_points(&s, &cfg());
        let b = starting_points(&s, &cfg());
        assert_eq!(a, b);
        assert_eq!(a.len(), 16);
        for w in &a {
            assert!((w.norm() - 1.0).abs() < 1e-12);
        }
        assert_eq!(a[1].values(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn config_validation() {
        let mut c = cfg();
        c.tolerance = 0.0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.restarts = 0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.backtrack = 1.0;
        assert!(c.validate().is_err());
    }
}
