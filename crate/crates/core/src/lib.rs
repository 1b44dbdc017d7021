//! Reproducible continual reinforcement-learning experiments.
//!
//! A [`curriculum::Curriculum`] describes blocks of learning and evaluation
//! over gridworld task variants. The [`runner`] walks a curriculum against an
//! [`agent::Agent`], writing per-lifetime logs through [`eventlog`], and
//! [`metrics`] turns those logs into lifelong-learning scores.

pub mod agent;
pub mod curriculum;
pub mod eventlog;
pub mod gridworld;
pub mod metrics;
pub mod prng;
pub mod protocol;
pub mod runner;

/// Version string written into run and lifetime metadata.
pub const HARNESS_VERSION: &str = env!("CARGO_PKG_VERSION");
