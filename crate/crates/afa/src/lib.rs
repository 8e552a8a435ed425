//! Cost-aware sequential view acquisition.
//!
//! This crate trains a mask-robust study classifier and a reinforcement
//! learning agent that decides, one view at a time, which feature slots of a
//! study to acquire before committing to a diagnosis. It ships a synthetic
//! study generator with a closed-form reference predictor, a small
//! hand-written neural network substrate, evaluation and cost-sweep tooling,
//! and a command-line front end.

pub mod agent;
pub mod classifier;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod env;
pub mod error;
pub mod metrics;
pub mod neural;
pub mod pathway;
pub mod sweep;
pub mod study;
pub mod synth;
pub mod util;

pub use error::{Error, Result};
