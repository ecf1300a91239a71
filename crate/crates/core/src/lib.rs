//! Ensemble Langevin sampling on products of intervals and circles.
//!
//! The crate is organised bottom-up:
//!
//! - [`space`]: interval/circle product spaces and modular arithmetic.
//! - [`reparam`]: quantile-function maps from bounded intervals onto the real
//!   line, with the pushforward potential and its gradient.
//! - [`targets`]: the [`targets::Potential`] interface and bundled benchmarks.
//! - [`langevin`]: Euler–Maruyama steps, the ensemble Fisher preconditioner
//!   and annealing schedules.
//! - [`birth_death`]: kernel-smoothed birth-death rates and the decoupled jump
//!   resolution built on [`birth_death::ParticleTracker`].
//! - [`diagnostics`]: the energy two-sample statistic and run traces.
//! - [`sampler`]: the orchestrated run driven by a [`sampler::RunConfig`].
//! - [`experiments`]: preset configurations for the benchmark runs.

pub mod birth_death;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod langevin;
pub mod noise;
pub mod reparam;
pub mod sampler;
pub mod space;
pub mod targets;

pub use error::{Error, Result};
