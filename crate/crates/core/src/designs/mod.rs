//! Sequential designs as selection and recommendation rules over a
//! [`TrialState`], plus Sequential Halving as a fixed schedule.

mod escalation;
mod halving;
mod med;
mod tox;

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bayes::{EffObservations, ToxObservations};
use crate::{Error, Result, Threshold};

pub use escalation::{startup_select, EscalationStep, three_plus_three_recommend, three_plus_three_step};
pub use halving::{halving_schedule, sequential_halving_run, HalvingOutcome, HalvingStep, SequentialHalving};
pub use med::{admissible_set_med, med_ts_a_select, med_ts_select, mta_ra_select, recommend_med, slack};
pub use tox::{
    admissible_set_tox, crm_select, independent_ts_select, recommend_empirical_mean, recommend_most_allocated, recommend_tox, ts_a_select,
    ts_eps_select, ts_select,
};

/// Names accepted by [`DesignConfig::from_name`], in display order.
pub const REGISTRY: [&str; 10] = ["3+3", "crm", "ind-ts", "ts", "ts-eps", "ts-a", "med-ts", "med-ts-a", "mta-ra", "sh"];

fn default_epsilon() -> f64 {
    0.05
}
fn default_max_rejections() -> usize {
    50
}
fn default_tox_c1() -> f64 {
    0.8
}
fn default_slack() -> f64 {
    0.2
}

/// Thresholds of the toxicity/efficacy admissible set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MedCriteria {
    /// Upper bound on `P(ψ_k > θ)`.
    pub c1: f64,
    /// Lower bound on `P(φ_k > ξ)`, applied once a dose has more than 3 patients.
    pub c2: f64,
    pub xi: f64,
}

impl Default for MedCriteria {
    fn default() -> Self {
        Self { c1: 0.9, c2: 0.4, xi: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name")]
pub enum DesignConfig {
    #[serde(rename = "3+3")]
    ThreePlusThree,
    #[serde(rename = "crm")]
    Crm,
    #[serde(rename = "ind-ts")]
    IndependentTs,
    #[serde(rename = "ts")]
    Ts,
    #[serde(rename = "ts-eps")]
    TsEps {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default = "default_max_rejections")]
        max_rejections: usize,
    },
    #[serde(rename = "ts-a")]
    TsA {
        #[serde(default = "default_tox_c1")]
        c1: f64,
    },
    #[serde(rename = "med-ts")]
    MedTs,
    #[serde(rename = "med-ts-a")]
    MedTsA {
        #[serde(flatten, default)]
        criteria: MedCriteria,
    },
    #[serde(rename = "mta-ra")]
    MtaRa {
        #[serde(flatten, default)]
        criteria: MedCriteria,
        /// Initial breakpoint slack `s1`, decreased linearly to 0 over the budget.
        #[serde(default = "default_slack")]
        slack: f64,
    },
    #[serde(rename = "sh")]
    SequentialHalving,
}

impl DesignConfig {
    /// Registry lookup with default tuning.
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "3+3" => Self::ThreePlusThree,
            "crm" => Self::Crm,
            "ind-ts" => Self::IndependentTs,
            "ts" => Self::Ts,
            "ts-eps" => Self::TsEps {
                epsilon: default_epsilon(),
                max_rejections: default_max_rejections(),
            },
            "ts-a" => Self::TsA { c1: default_tox_c1() },
            "med-ts" => Self::MedTs,
            "med-ts-a" => Self::MedTsA {
                criteria: MedCriteria::default(),
            },
            "mta-ra" => Self::MtaRa {
                criteria: MedCriteria::default(),
                slack: default_slack(),
            },
            "sh" => Self::SequentialHalving,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::ThreePlusThree => "3+3",
            Self::Crm => "crm",
            Self::IndependentTs => "ind-ts",
            Self::Ts => "ts",
            Self::TsEps { .. } => "ts-eps",
            Self::TsA { .. } => "ts-a",
            Self::MedTs => "med-ts",
            Self::MedTsA { .. } => "med-ts-a",
            Self::MtaRa { .. } => "mta-ra",
            Self::SequentialHalving => "sh",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidParameter(alloc::format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        match *self {
            Self::TsEps { epsilon, max_rejections } => {
                if !(epsilon > 0.0 && epsilon <= 1.0) {
                    return Err(Error::InvalidParameter(alloc::format!("epsilon must lie in (0, 1], got {epsilon}")));
                }
                if max_rejections == 0 {
                    return Err(Error::InvalidParameter("max_rejections must be at least 1".into()));
                }
            }
            Self::TsA { c1 } => unit("c1", c1)?,
            Self::MedTsA { criteria } => criteria.validate()?,
            Self::MtaRa { criteria, slack } => {
                criteria.validate()?;
                unit("slack", slack)?;
            }
            _ => {}
        }
        Ok(())
    }

    /// Whether the design models efficacy and needs efficacy outcomes.
    pub fn needs_efficacy(&self) -> bool {
        matches!(self, Self::MedTs | Self::MedTsA { .. } | Self::MtaRa { .. })
    }

    /// Whether the design fits the logistic toxicity model.
    pub fn uses_tox_model(&self) -> bool {
        matches!(
            self,
            Self::Crm | Self::Ts | Self::TsEps { .. } | Self::TsA { .. } | Self::MedTs | Self::MedTsA { .. } | Self::MtaRa { .. }
        )
    }

    /// 3+3 and Sequential Halving run their own schedules.
    /// Independent TS ignores dose ordering, so it does not escalate first.
    pub fn uses_startup(&self) -> bool {
        !matches!(self, Self::ThreePlusThree | Self::SequentialHalving | Self::IndependentTs)
    }
}

impl MedCriteria {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c1", self.c1), ("c2", self.c2), ("xi", self.xi)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(alloc::format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    Normal,
    EarlyStopToxicity,
    AllInadmissible,
    /// The final estimate has no dose with toxicity at most θ.
    NoSafeDose,
    /// Nothing has been observed that a recommendation could rest on.
    NoData,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recommendation {
    pub dose: Option<usize>,
    pub reason: Reason,
}

impl Recommendation {
    pub fn dose(dose: usize) -> Self {
        Self {
            dose: Some(dose),
            reason: Reason::Normal,
        }
    }

    pub fn none(reason: Reason) -> Self {
        debug_assert!(reason != Reason::Normal);
        Self { dose: None, reason }
    }

    /// Stopped before the budget with no dose deemed acceptable.
    pub fn is_early_stop(&self) -> bool {
        matches!(self.reason, Reason::EarlyStopToxicity | Reason::AllInadmissible)
    }
}

/// Doses a constrained design may select, in increasing order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AdmissibleSet {
    pub doses: Vec<usize>,
}

impl AdmissibleSet {
    pub fn contains(&self, dose: usize) -> bool {
        self.doses.binary_search(&dose).is_ok()
    }

    pub fn is_empty(&self) -> bool {
        self.doses.is_empty()
    }
}

/// Tested doses plus the smallest untested one.
pub(crate) fn eligible(tox: &ToxObservations) -> impl Iterator<Item = usize> + '_ {
    let next = tox.patients.iter().position(|&n| n == 0);
    (0..tox.doses()).filter(move |&k| tox.patients[k] > 0 || Some(k) == next)
}

/// Samples an index of `weights` restricted to `allowed`; `None` when the
/// restricted mass is zero.
pub(crate) fn sample_restricted<R: Rng + ?Sized>(weights: &[f64], allowed: &AdmissibleSet, rng: &mut R) -> Option<usize> {
    let total: f64 = allowed.doses.iter().map(|&k| weights[k]).sum();
    if total <= 0.0 {
        return None;
    }
    let mut u = rng.random::<f64>() * total;
    let mut last = None;
    for &k in &allowed.doses {
        let w = weights[k];
        if w <= 0.0 {
            continue;
        }
        last = Some(k);
        if u < w {
            return Some(k);
        }
        u -= w;
    }
    last
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Startup,
    Adaptive,
    Stopped,
}

/// One patient's outcomes; `eff` is present for efficacy designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub tox: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eff: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub dose: usize,
    pub tox: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eff: Option<bool>,
}

/// Everything observed so far in one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialState {
    pub theta: Threshold,
    pub budget: usize,
    pub tox: ToxObservations,
    pub eff: Option<EffObservations>,
    pub log: Vec<PatientRecord>,
    pub phase: Phase,
}

impl TrialState {
    pub fn new(doses: usize, theta: Threshold, budget: usize, efficacy: bool, startup: bool) -> Self {
        Self {
            theta,
            budget,
            tox: ToxObservations::new(doses),
            eff: efficacy.then(|| EffObservations::new(doses)),
            log: Vec::new(),
            phase: if startup { Phase::Startup } else { Phase::Adaptive },
        }
    }

    pub fn doses(&self) -> usize {
        self.tox.doses()
    }

    pub fn patients_used(&self) -> usize {
        self.log.len()
    }

    pub fn remaining(&self) -> usize {
        self.budget - self.log.len()
    }

    /// Smallest dose nobody has received.
    pub fn next_untested(&self) -> Option<usize> {
        self.tox.patients.iter().position(|&n| n == 0)
    }

    pub fn allocations(&self) -> Vec<u32> {
        self.tox.patients.clone()
    }

    /// Records a cohort treated at `dose` and advances the start-up phase.
    pub fn apply_cohort(&mut self, dose: usize, outcomes: &[Outcome]) -> Result<()> {
        if self.phase == Phase::Stopped {
            return Err(Error::Stopped);
        }
        if dose >= self.doses() {
            return Err(Error::DoseOutOfRange(dose));
        }
        if outcomes.len() > self.remaining() {
            return Err(Error::OutcomeCount {
                expected: self.remaining(),
                actual: outcomes.len(),
            });
        }
        if outcomes.iter().any(|o| o.eff.is_some() != self.eff.is_some()) {
            return Err(Error::EfficacyMismatch);
        }
        for o in outcomes {
            self.tox.record(dose, o.tox);
            if let (Some(eff), Some(e)) = (self.eff.as_mut(), o.eff) {
                eff.record(dose, e);
            }
            self.log.push(PatientRecord {
                dose,
                tox: o.tox,
                eff: o.eff,
            });
        }
        if self.phase == Phase::Startup && (outcomes.iter().any(|o| o.tox) || dose + 1 == self.doses()) {
            self.phase = Phase::Adaptive;
        }
        Ok(())
    }
}
