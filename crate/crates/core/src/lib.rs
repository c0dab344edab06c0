//! Certified spectral-gap bounds for birth-death chains and compact manifolds.
//!
//! The crate is `no_std` (with `alloc`); all transcendental math goes through
//! `libm`. Every bound produced here is validated in the test suites against
//! the exact tridiagonal eigensolver in [`exact`].

#![cfg_attr(not(test), no_std)]
// `!(x > y)` is the NaN-rejecting form of a domain check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod chain;
pub mod cheeger;
pub mod classify;
pub mod dualgap;
pub mod enclosure;
pub mod error;
pub mod exact;
pub mod expr;
pub mod geometry;
pub mod growth;
pub mod quad;

pub use chain::{ChainSpec, FiniteChain, MuWeights, Rates, StateBound};
pub use enclosure::Enclosure;
pub use error::Error;
pub use expr::RateExpr;

pub type Result<T> = core::result::Result<T, Error>;
