//! Numerical laboratory for random weighted partitions of integers.
//!
//! The model: balls are dropped into boxes `U_1, U_2, ...`, where box `U_j`
//! costs energy `j` per ball and is subdivided into `q_j` compartments (the
//! *multiplicity* of level `j`, any positive real). An occupancy sequence
//! `{N_j}` with total energy at most `M` receives the weight
//! `prod_j C(N_j + q_j - 1, N_j)` built from generalized binomial
//! coefficients, and normalizing those weights defines a probability measure
//! on the finite set of admissible sequences. A companion two-constraint
//! family additionally fixes the total number of balls and adds a zero-energy
//! ground box `U_0` with multiplicity `q_0`.
//!
//! The crate provides, over both families:
//!
//! - [`multiplicity`]: multiplicity rules (power law, oscillator, tabled
//!   prefixes) and their growth-envelope checks;
//! - [`equilibrium`]: the equilibrium parameter `b` solving the mean-energy
//!   equation, Bose-Einstein occupation profiles, condensation thresholds and
//!   regime classification, the grand-canonical `(beta, mu)` system, and
//!   deviation radii for concentration experiments;
//! - [`sums`]: gamma/zeta evaluation, Euler-Maclaurin sums with remainder
//!   bounds, Bose integrals, and the curvature sums controlling the
//!   saddle-point expansion;
//! - [`exact`]: exact weight counting via suffix dynamic programming (exact
//!   big-integer or log-scale arithmetic), generating-function coefficients,
//!   exhaustive enumeration, and exact distributions of linear statistics;
//! - [`sampler`]: exact sequential sampling driven by the DP tables, a
//!   Boltzmann importance sampler for scales beyond the DP budget, and
//!   empirical tail estimation;
//! - [`saddle`]: the entropy/action of a weight, the contour-integral
//!   evaluation of exact-energy weights, and numerical checks of the
//!   inequalities underlying the concentration bounds.
//!
//! The crate is `no_std`-compatible (with `alloc`); the default `std` feature
//! only switches float intrinsics and error-trait plumbing.

#![cfg_attr(not(any(feature = "std", test)), no_std)]
// Validations are written `!(x > 0.0)` so that NaN fails them; the
// suggested `x <= 0.0` would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod equilibrium;
pub mod error;
pub mod exact;
mod math;
pub mod multiplicity;
pub mod saddle;
pub mod sampler;
pub mod statistic;
pub mod sums;

pub use error::{Error, Result};
pub use multiplicity::MultiplicitySpec;

/// Default tolerance for solvers and series evaluation.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Series over levels are summed until `j * b` exceeds this and the remainder
/// is bounded by a comparison integral. `exp(-50)` is far below double
/// precision for every quantity the crate reports.
pub(crate) const SERIES_CUTOFF: f64 = 50.0;

/// Default cap on the total energy for exhaustive enumeration.
pub const DEFAULT_ENUM_CAP: u64 = 25;
