//! Simulation harness, scenario files, reports and the trial-conduct
//! service built on `dosefind-core`.
//!
//! Everything user-facing here numbers doses from 1; the core crate
//! numbers them from 0.

pub mod batch;
pub mod report;
pub mod scenarios;
pub mod service;
pub mod theory;

pub use dosefind_core as core;
