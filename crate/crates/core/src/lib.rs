//! Long-memory orthogonal approximate message passing (LM-OAMP).
//!
//! The crate reconstructs a sparse signal `x` from compressed measurements
//! `y = A x + w` with an orthogonally invariant sensing operator, and predicts
//! the per-iteration error of the reconstruction with deterministic state
//! evolution recursions.
//!
//! Layout:
//!
//! * [`problem`]: geometric singular-value profiles, the row-permuted
//!   Hadamard sensing operator and seeded problem instances.
//! * [`prior`]: the Bernoulli-Gaussian prior, its Bayes-optimal scalar
//!   denoiser and the scalar/bivariate error expectations.
//! * [`gaussian_stat`]: covariance algebra for correlated Gaussian messages
//!   (sufficient statistics, PSD guarding, damping).
//! * [`lmoamp`]: the iterative solver with full-memory, conventional and
//!   damped message-passing policies.
//! * [`state_evolution`]: η-transforms and the state evolution predictors.
//!
//! The crate is `no_std` (it needs `alloc`). IO, configuration and the
//! Monte Carlo harness live in the companion `lmoamp-harness` crate.
#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` rejects NaN along with non-positive values, and the numeric
// loops index several parallel arrays at once.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod fwht;
pub mod gaussian_stat;
pub mod linalg;
pub mod lmoamp;
pub mod prior;
pub mod problem;
pub mod quadrature;
pub mod state_evolution;

pub use error::{Error, Result};
