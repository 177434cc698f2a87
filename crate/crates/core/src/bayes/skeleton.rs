use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{self, expit, logit};
use crate::{Error, Result};

/// Independent `Normal(mean, variance)` intercept and `Exp(rate)` slope prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticPrior {
    pub intercept_mean: f64,
    pub intercept_variance: f64,
    pub slope_rate: f64,
}

impl Default for LogisticPrior {
    fn default() -> Self {
        Self {
            intercept_mean: 0.0,
            intercept_variance: 100.0,
            slope_rate: 1.0,
        }
    }
}

impl LogisticPrior {
    pub fn slope_mean(&self) -> f64 {
        1.0 / self.slope_rate
    }

    pub fn log_density(&self, intercept: f64, slope: f64) -> f64 {
        super::log_normal_density(intercept, self.intercept_mean, self.intercept_variance)
            + super::log_exponential_density(slope, self.slope_rate)
    }

    fn validate(&self) -> Result<()> {
        if self.intercept_variance > 0.0 && self.slope_rate > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter("prior variance and rate must be positive".into()))
        }
    }

    /// Inverts the logistic link at the prior means.
    fn effective_levels(&self, prior_probs: &[f64]) -> Vec<f64> {
        prior_probs
            .iter()
            .map(|&p| (logit(p) - self.intercept_mean) / self.slope_mean())
            .collect()
    }
}

fn check_increasing_interior(ps: &[f64]) -> Result<()> {
    let interior = ps.iter().all(|&p| p > 0.0 && p < 1.0);
    let increasing = ps.windows(2).all(|w| w[0] < w[1]);
    if ps.is_empty() || !interior || !increasing {
        return Err(Error::InvalidSkeleton);
    }
    Ok(())
}

/// Logistic dose-toxicity model `ψ(k, β0, β1) = expit(β0 + β1 u_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticToxSkeleton {
    pub effective_doses: Vec<f64>,
    pub prior_tox: Vec<f64>,
    pub prior: LogisticPrior,
}

pub fn calibrate_tox_skeleton(prior_tox: &[f64], prior: LogisticPrior) -> Result<LogisticToxSkeleton> {
    check_increasing_interior(prior_tox)?;
    prior.validate()?;
    Ok(LogisticToxSkeleton {
        effective_doses: prior.effective_levels(prior_tox),
        prior_tox: prior_tox.to_vec(),
        prior,
    })
}

impl LogisticToxSkeleton {
    pub fn doses(&self) -> usize {
        self.effective_doses.len()
    }

    #[inline]
    pub fn psi(&self, k: usize, beta0: f64, beta1: f64) -> f64 {
        expit(beta0 + beta1 * self.effective_doses[k])
    }

    pub fn curve_into(&self, beta0: f64, beta1: f64, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.effective_doses.iter().map(|&u| expit(beta0 + beta1 * u)));
    }

    pub fn curve(&self, beta0: f64, beta1: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.doses());
        self.curve_into(beta0, beta1, &mut out);
        out
    }
}

/// Plateau efficacy model: `φ(k, γ0, γ1, τ) = expit(γ0 + γ1 v_{min(k, τ)})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauEffSkeleton {
    pub effective_efficacies: Vec<f64>,
    pub prior_eff: Vec<f64>,
    /// Prior probabilities of the breakpoint `τ` over the doses.
    pub tau_prior: Vec<f64>,
    pub prior: LogisticPrior,
}

/// Calibrates the effective efficacies; a missing `tau_prior` is uniform.
pub fn calibrate_eff_skeleton(
    prior_eff: &[f64],
    tau_prior: Option<&[f64]>,
    prior: LogisticPrior,
) -> Result<PlateauEffSkeleton> {
    check_increasing_interior(prior_eff)?;
    prior.validate()?;
    let k = prior_eff.len();
    let tau_prior = match tau_prior {
        Some(t) => {
            let sum: f64 = t.iter().sum();
            if t.len() != k || t.iter().any(|&x| !(0.0..=1.0).contains(&x)) || math::abs(sum - 1.0) > 1e-9 {
                return Err(Error::InvalidBreakpointPrior);
            }
            t.to_vec()
        }
        None => vec![1.0 / k as f64; k],
    };
    Ok(PlateauEffSkeleton {
        effective_efficacies: prior.effective_levels(prior_eff),
        prior_eff: prior_eff.to_vec(),
        tau_prior,
        prior,
    })
}

impl PlateauEffSkeleton {
    pub fn doses(&self) -> usize {
        self.effective_efficacies.len()
    }

    #[inline]
    pub fn phi(&self, k: usize, gamma0: f64, gamma1: f64, tau: usize) -> f64 {
        expit(gamma0 + gamma1 * self.effective_efficacies[k.min(tau)])
    }

    pub fn curve_into(&self, gamma0: f64, gamma1: f64, tau: usize, out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..self.doses()).map(|k| self.phi(k, gamma0, gamma1, tau)));
    }

    pub fn curve(&self, gamma0: f64, gamma1: f64, tau: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.doses());
        self.curve_into(gamma0, gamma1, tau, &mut out);
        out
    }
}
