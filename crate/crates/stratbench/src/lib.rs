//! Benchmark harness for black-box maximization.
//!
//! The crate runs baseline and model-based optimizers (random search, grid
//! search, particle swarm, GP expected improvement) on a registry of
//! closed-form test functions, scores each run with best-found / area-under-
//! curve metrics, and turns the per-function results into partial rankings
//! that are aggregated into Borda / Firsts / Top-Three tables, optionally
//! stratified by dimension bucket or function attribute.
//!
//! A `validity` module carries the supporting statistics: order-statistic
//! sampling for the outcome of random search, Berry-Esseen moments of that
//! distribution, and a seeded Kolmogorov-Smirnov normality experiment.

pub mod error;
pub mod harness;
pub mod metrics;
pub mod optimizers;
pub mod ranking;
mod rngutil;
pub mod stattests;
pub mod testfns;
pub mod validity;

pub use error::{Error, Result};
