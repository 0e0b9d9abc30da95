//! Runners, file formats and the `chaoslab` command line on top of
//! `chaoslab-core`.
//!
//! Monte Carlo work is split into fixed-size chunks, each with its own random
//! substream, and reduced in chunk order; see [`parallel`]. Every run writes
//! its artifacts atomically into the output directory together with a
//! `manifest.json` listing their SHA-256 hashes.

pub mod artifacts;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod parallel;
pub mod svg;

pub use error::{LabError, LabResult};
