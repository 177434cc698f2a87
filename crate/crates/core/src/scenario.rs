//! Simulation scenarios: ground truth plus the trial's planning parameters.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::stats::check_probabilities;
use crate::trial::{GroundTruth, TrialSetup};
use crate::{Error, Result};

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub label: String,
    pub theta: f64,
    pub n: usize,
    pub cohort: usize,
    pub true_tox: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_eff: Option<Vec<f64>>,
    pub prior_tox: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_eff: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_prior: Option<Vec<f64>>,
    #[serde(default = "yes")]
    pub startup: bool,
}

impl ScenarioSpec {
    pub fn doses(&self) -> usize {
        self.true_tox.len()
    }

    pub fn validate(&self) -> Result<()> {
        check_probabilities(&self.true_tox)?;
        let k = self.doses();
        if k < 2 {
            return Err(Error::TooFewDoses(k));
        }
        let same = |v: &[f64]| {
            if v.len() == k {
                Ok(())
            } else {
                Err(Error::LengthMismatch {
                    expected: k,
                    actual: v.len(),
                })
            }
        };
        same(&self.prior_tox)?;
        if let Some(e) = &self.true_eff {
            check_probabilities(e)?;
            same(e)?;
        }
        if let Some(e) = &self.prior_eff {
            same(e)?;
        }
        if let Some(t) = &self.tau_prior {
            same(t)?;
        }
        if self.true_eff.is_some() != self.prior_eff.is_some() {
            return Err(Error::MissingEfficacyModel);
        }
        self.setup().map(|_| ())
    }

    /// Planning parameters with default priors and chain settings.
    pub fn setup(&self) -> Result<TrialSetup> {
        let mut s = TrialSetup::new(
            self.theta,
            self.n,
            self.cohort,
            &self.prior_tox,
            self.prior_eff.as_deref(),
            self.tau_prior.as_deref(),
        )?;
        s.startup = self.startup;
        Ok(s)
    }

    pub fn truth(&self) -> GroundTruth {
        GroundTruth {
            tox: self.true_tox.clone(),
            eff: self.true_eff.clone(),
        }
    }
}
