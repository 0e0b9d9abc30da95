//! Numerical Malliavin calculus on a finite-dimensional Gaussian space.
//!
//! The crate realizes the isonormal process as `N` independent standard
//! Gaussian coordinates and provides:
//!
//! - [`hermite`]: probabilists' and generalized Hermite polynomials, normal
//!   density derivatives.
//! - [`engine`]: truncated multivariate Taylor jets, symbolic functionals,
//!   Malliavin derivative, divergence, the `G_k` / `T_k` sequences, chaos
//!   decompositions with the generator `L` and its pseudo-inverse, and
//!   kernel contractions.
//! - [`chaos2`]: second-chaos variables `F = Σ λᵢ(Xᵢ² − 1)` with closed-form
//!   Malliavin weights, exact moments, negative moments and bound
//!   certificates.
//! - [`stein`]: the one-dimensional Stein equation and its growth envelopes.
//! - [`density`]: indicator-weight density estimators, distances and
//!   fourth-moment reports.
//! - [`ou`]: Ornstein-Uhlenbeck simulation, least-squares drift estimation and
//!   the spectrum of the covariance kernel.
//!
//! Everything here is deterministic and allocation-only (`no_std` + `alloc`).
//! Parallel Monte Carlo drivers, file formats and the command line live in the
//! `chaoslab` crate; they build on the chunk-level samplers exported here and
//! on [`rng::substream`].

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod chaos2;
pub mod density;
pub mod engine;
mod error;
pub mod hermite;
pub mod linalg;
pub mod ou;
pub mod quad;
pub mod report;
pub mod rng;
pub mod root;
pub mod special;
pub mod stats;
pub mod stein;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
