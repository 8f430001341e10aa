//! Numerical laboratory for α-stability of generalized entropy functionals.
//!
//! A functional `C` is α-stable when for every `ε > 0` there is a `δ > 0`,
//! independent of the dimension `N`, such that `d_α(p, p') < δ` implies
//! `|C(p) − C(p')| / C_{N,max} < ε`. Lesche stability is the case `α = 1`.
//!
//! The crate evaluates the Tsallis, incomplete, Rényi, κ-, quantum-group
//! entropies and the incomplete q-expectation ([`functionals`]), issues
//! explicit `δ(ε)` certificates ([`certificates`]), and searches for
//! violations and instability witnesses ([`adversary`]).

#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversary;
pub mod certificates;
pub mod cli;
mod error;
pub mod functionals;
pub mod io;
pub mod metric;
pub mod numeric;
pub mod simplex;

pub use error::{Error, Result};
pub use functionals::{Family, Functional};
pub use metric::AlphaParam;
pub use simplex::{CompleteDistribution, Distribution, DistributionKind, IncompleteDistribution, Seed};
