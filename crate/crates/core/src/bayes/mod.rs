//! Posterior machinery: conjugate Beta updates, adaptive Metropolis-Hastings
//! for the logistic toxicity model, the breakpoint-marginalized plateau
//! efficacy model, and posterior-probability-of-optimality estimators.

mod beta;
mod eff;
mod estimators;
mod mcmc;
mod skeleton;
mod tox;

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use beta::BetaPosterior;
pub(crate) use eff::sample_categorical;
pub use eff::{breakpoint_posterior, breakpoint_weights, log_likelihood_eff, mcmc_sample_eff};
pub use estimators::{
    breakpoint_mode, mean_eff_parameters, mean_tox_parameters, posterior_med_probs,
    posterior_mtd_probs, posterior_tox_means, posterior_eff_means, MedProbabilities,
};
pub use skeleton::{calibrate_eff_skeleton, calibrate_tox_skeleton, LogisticPrior, LogisticToxSkeleton, PlateauEffSkeleton};
pub use tox::{log_likelihood_tox, log_posterior_tox, mcmc_sample_tox};

/// Per-dose counts of treated patients and toxic responses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToxObservations {
    pub patients: Vec<u32>,
    pub toxicities: Vec<u32>,
}

impl ToxObservations {
    pub fn new(doses: usize) -> Self {
        Self {
            patients: vec![0; doses],
            toxicities: vec![0; doses],
        }
    }

    pub fn from_counts(patients: Vec<u32>, toxicities: Vec<u32>) -> Result<Self> {
        check_counts(&patients, &toxicities)?;
        Ok(Self { patients, toxicities })
    }

    pub fn record(&mut self, dose: usize, toxic: bool) {
        self.patients[dose] += 1;
        self.toxicities[dose] += u32::from(toxic);
    }

    pub fn doses(&self) -> usize {
        self.patients.len()
    }

    pub fn total(&self) -> u32 {
        self.patients.iter().sum()
    }
}

/// Per-dose counts of patients assessed for efficacy and efficacious responses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EffObservations {
    pub patients: Vec<u32>,
    pub responses: Vec<u32>,
}

impl EffObservations {
    pub fn new(doses: usize) -> Self {
        Self {
            patients: vec![0; doses],
            responses: vec![0; doses],
        }
    }

    pub fn from_counts(patients: Vec<u32>, responses: Vec<u32>) -> Result<Self> {
        check_counts(&patients, &responses)?;
        Ok(Self { patients, responses })
    }

    pub fn record(&mut self, dose: usize, efficacious: bool) {
        self.patients[dose] += 1;
        self.responses[dose] += u32::from(efficacious);
    }

    pub fn doses(&self) -> usize {
        self.patients.len()
    }
}

fn check_counts(n: &[u32], s: &[u32]) -> Result<()> {
    if n.len() != s.len() {
        return Err(Error::LengthMismatch {
            expected: n.len(),
            actual: s.len(),
        });
    }
    if n.iter().zip(s).any(|(n, s)| s > n) {
        return Err(Error::InvalidParameter("more responses than patients".into()));
    }
    Ok(())
}

/// Metropolis-Hastings run settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainConfig {
    /// Total iterations, burn-in included.
    pub length: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Acceptance rate targeted by the burn-in adaptation.
    pub target_acceptance: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            length: 4000,
            burn_in: 1000,
            thin: 1,
            target_acceptance: 0.3,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.length <= self.burn_in {
            return Err(Error::InvalidChain("chain length must exceed burn-in"));
        }
        if self.thin == 0 {
            return Err(Error::InvalidChain("thinning must be at least 1"));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::InvalidChain("target acceptance must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Toxicity model parameters `(β0, β1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToxDraw {
    pub beta0: f64,
    pub beta1: f64,
}

/// Efficacy model parameters `(γ0, γ1, τ)`; `tau` is a zero-based dose index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffDraw {
    pub gamma0: f64,
    pub gamma1: f64,
    pub tau: usize,
}

/// Acceptance below this after burn-in flags the chain as poorly mixed.
pub const MIN_ACCEPTANCE: f64 = 0.05;

/// Draws from one MCMC run along with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSampleSet<D> {
    pub draws: Vec<D>,
    pub acceptance_rate: f64,
    pub chain_length: usize,
    pub burn_in: usize,
}

impl<D> PosteriorSampleSet<D> {
    /// Wraps hand-built draws, e.g. for replaying a stored posterior.
    pub fn from_draws(draws: Vec<D>) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::EmptySamples);
        }
        let n = draws.len();
        Ok(Self {
            draws,
            acceptance_rate: 1.0,
            chain_length: n,
            burn_in: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn low_acceptance(&self) -> bool {
        self.acceptance_rate < MIN_ACCEPTANCE
    }
}

pub(crate) fn log_normal_density(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    -0.5 * d * d / variance - 0.5 * crate::math::ln(2.0 * core::f64::consts::PI * variance)
}

pub(crate) fn log_exponential_density(x: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        f64::NEG_INFINITY
    } else {
        crate::math::ln(rate) - rate * x
    }
}
