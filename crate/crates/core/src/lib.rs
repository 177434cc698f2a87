//! Dose-finding designs built on the Thompson Sampling principle.
//!
//! The crate is `no_std` (with `alloc`) and covers the numerical kernel
//! (binary KL divergence, MTD/MED identification, Sequential Halving
//! complexity), posterior machinery for the logistic toxicity model and the
//! plateau efficacy model, every sequential design as a state machine, and a
//! trial engine that drives a design against simulated or recorded outcomes.
//!
//! Dose indices are zero-based everywhere in this crate. Reports and wire
//! formats built on top of it are one-based.
//!
//! IO, parallel batches, scenario files and the service live in the
//! `dosefind` companion crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bayes;
pub mod designs;
mod error;
pub mod math;
pub mod metrics;
pub mod rng;
pub mod scenario;
pub mod stats;
pub mod trial;

pub use error::{Error, Result};
pub use rng::RngSeed;
pub use stats::{Threshold, ToxicityVector};
