//! Discrete restriction constants of ellipsephic sets and the decoupling
//! exponents of the arithmetic Cantor sets they approximate.
//!
//! The pipeline is:
//!
//! * [`cantor`] builds levels `[E_q^D]_j` of an ellipsephic set and the
//!   Freiman maps relating them (digit normalization, base regrouping,
//!   tensor products, defect sets);
//! * [`restriction`] evaluates `‖a^{*n}‖²`, whose maximum over unit-norm
//!   nonnegative `a` is `A_{2n,m}(S)^{2n}`, together with its gradient and
//!   integer additive-energy oracles;
//! * [`optimizer`] maximizes that objective on the sphere;
//! * [`exponents`] turns the maxima into decoupling exponents, exact in the
//!   carry-free case and with rigorous error bands otherwise;
//! * [`counting`] counts solutions of digit-restricted linear and
//!   Vinogradov systems exactly.

pub mod cantor;
pub mod counting;
pub mod error;
pub mod exponents;
pub mod json;
pub mod lattice;
pub mod optimizer;
pub mod restriction;
pub mod rng;

pub use cantor::{
    enumerate_level, freiman_defect, has_carryover, hausdorff_dimension, normalize_digits, regroup_base, tensor,
    DigitSet, EllipsephicLevel, FreimanDefect,
};
pub use counting::{
    count_solutions, count_vinogradov_ellipsephic, energy_vs_restriction, offdiagonal_lower_bound, CountResult,
    SystemSpec,
};
pub use error::{Error, Result};
pub use exponents::{
    construct_maximal_cantor, decoupling_report, exponent_banded, exponent_no_carryover, verify_power_law,
    DecouplingReport, ExponentEstimate,
};
pub use lattice::{LatticeSet, Point};
pub use optimizer::{
    estimate_restriction, fixed_point, gradient_ascent, kkt_residual, Method, OptimizerConfig, RestrictionEstimate,
    SetDescriptor,
};
pub use restriction::{
    additive_energy, convolve_power, gradient, objective, uniform_objective, SparseSignal, WeightVector,
};
