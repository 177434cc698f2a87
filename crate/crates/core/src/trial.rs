//! Trial engine: drives a design cohort by cohort, either against simulated
//! outcomes or outcomes recorded one cohort at a time.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bayes::{
    breakpoint_posterior, calibrate_eff_skeleton, calibrate_tox_skeleton, mcmc_sample_eff, mcmc_sample_tox,
    posterior_eff_means, posterior_med_probs, posterior_mtd_probs, posterior_tox_means, BetaPosterior, ChainConfig,
    EffDraw, LogisticPrior, LogisticToxSkeleton, MedProbabilities, PlateauEffSkeleton, PosteriorSampleSet, ToxDraw,
};
use crate::designs::{
    self, admissible_set_med, admissible_set_tox, crm_select, independent_ts_select, med_ts_a_select, med_ts_select,
    mta_ra_select, recommend_empirical_mean, recommend_med, recommend_most_allocated, recommend_tox, startup_select, three_plus_three_recommend,
    three_plus_three_step, ts_a_select, ts_eps_select, ts_select, AdmissibleSet, DesignConfig, EscalationStep,
    HalvingStep, Outcome, Phase, Reason, Recommendation, SequentialHalving, TrialState,
};
use crate::metrics::TrialResult;
use crate::rng::{RngSeed, DESIGN_STREAM, OUTCOME_STREAM};
use crate::{Error, Result, Threshold};

fn yes() -> bool {
    true
}

/// Everything a trial needs except the ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSetup {
    pub theta: Threshold,
    pub budget: usize,
    pub cohort: usize,
    pub tox_skeleton: LogisticToxSkeleton,
    #[serde(default)]
    pub eff_skeleton: Option<PlateauEffSkeleton>,
    #[serde(default)]
    pub chain: ChainConfig,
    #[serde(default = "yes")]
    pub startup: bool,
}

impl TrialSetup {
    /// Calibrates both skeletons under the default priors.
    pub fn new(
        theta: f64,
        budget: usize,
        cohort: usize,
        prior_tox: &[f64],
        prior_eff: Option<&[f64]>,
        tau_prior: Option<&[f64]>,
    ) -> Result<Self> {
        let prior = LogisticPrior::default();
        let eff_skeleton = match prior_eff {
            Some(e) => Some(calibrate_eff_skeleton(e, tau_prior, prior)?),
            None if tau_prior.is_some() => return Err(Error::InvalidBreakpointPrior),
            None => None,
        };
        let setup = Self {
            theta: Threshold::new(theta)?,
            budget,
            cohort,
            tox_skeleton: calibrate_tox_skeleton(prior_tox, prior)?,
            eff_skeleton,
            chain: ChainConfig::default(),
            startup: true,
        };
        setup.validate()?;
        Ok(setup)
    }

    pub fn doses(&self) -> usize {
        self.tox_skeleton.doses()
    }

    pub fn validate(&self) -> Result<()> {
        if self.doses() < 2 {
            return Err(Error::TooFewDoses(self.doses()));
        }
        if self.cohort == 0 {
            return Err(Error::InvalidParameter("cohort size must be at least 1".into()));
        }
        if let Some(e) = &self.eff_skeleton {
            if e.doses() != self.doses() {
                return Err(Error::LengthMismatch {
                    expected: self.doses(),
                    actual: e.doses(),
                });
            }
        }
        self.chain.validate()
    }

    /// Checks that `design` can run under this setup.
    pub fn check(&self, design: &DesignConfig) -> Result<()> {
        self.validate()?;
        design.validate()?;
        if design.needs_efficacy() && self.eff_skeleton.is_none() {
            return Err(Error::MissingEfficacyModel);
        }
        if matches!(design, DesignConfig::SequentialHalving) {
            designs::halving_schedule(self.doses(), self.budget)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decision {
    Treat { dose: usize, patients: usize },
    Stop { recommendation: Recommendation },
}

/// Posterior summary behind a decision, and what would be recommended if
/// the trial ended now.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interim {
    pub recommendation: Recommendation,
    /// Posterior probability of each dose being the MTD.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mtd_probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub med_probs: Option<MedProbabilities>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admissible: Option<AdmissibleSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakpoint: Option<Vec<f64>>,
    pub tox_means: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eff_means: Option<Vec<f64>>,
    pub low_acceptance: bool,
}

#[derive(Default)]
struct Fit {
    tox: Option<PosteriorSampleSet<ToxDraw>>,
    eff: Option<PosteriorSampleSet<EffDraw>>,
    t_hat: Option<Vec<f64>>,
    /// Uniform draw that settles ties in the most-allocated rule.
    tie_break: f64,
}

impl Fit {
    fn low_acceptance(&self) -> bool {
        self.tox.as_ref().is_some_and(|s| s.low_acceptance()) || self.eff.as_ref().is_some_and(|s| s.low_acceptance())
    }
}

/// One trial in progress.
#[derive(Debug, Clone)]
pub struct Trial {
    design: DesignConfig,
    setup: TrialSetup,
    state: TrialState,
    rng: ChaCha8Rng,
    halving: Option<SequentialHalving>,
    pending: Option<Decision>,
    interim: Option<Interim>,
    low_acceptance_fits: u32,
}

impl Trial {
    pub fn new(design: DesignConfig, setup: TrialSetup, seed: RngSeed) -> Result<Self> {
        setup.check(&design)?;
        let halving = match design {
            DesignConfig::SequentialHalving => Some(SequentialHalving::new(setup.doses(), setup.theta, setup.budget)?),
            _ => None,
        };
        let state = TrialState::new(
            setup.doses(),
            setup.theta,
            setup.budget,
            design.needs_efficacy(),
            setup.startup && design.uses_startup(),
        );
        Ok(Self {
            design,
            setup,
            state,
            rng: seed.stream(DESIGN_STREAM),
            halving,
            pending: None,
            interim: None,
            low_acceptance_fits: 0,
        })
    }

    pub fn design(&self) -> &DesignConfig {
        &self.design
    }

    pub fn setup(&self) -> &TrialSetup {
        &self.setup
    }

    pub fn state(&self) -> &TrialState {
        &self.state
    }

    /// Summary computed with the latest decision, when that decision
    /// involved one.
    pub fn interim(&self) -> Option<&Interim> {
        self.interim.as_ref()
    }

    pub fn is_stopped(&self) -> bool {
        self.state.phase == Phase::Stopped
    }

    /// The next action; computed once and cached until outcomes arrive.
    pub fn decide(&mut self) -> Result<Decision> {
        if let Some(d) = &self.pending {
            return Ok(d.clone());
        }
        let d = self.next_decision()?;
        if matches!(d, Decision::Stop { .. }) {
            self.state.phase = Phase::Stopped;
        }
        self.pending = Some(d.clone());
        Ok(d)
    }

    /// Records the outcomes of the pending allocation and returns the next
    /// decision.
    pub fn record(&mut self, outcomes: &[Outcome]) -> Result<Decision> {
        let Decision::Treat { dose, patients } = self.decide()? else {
            return Err(Error::Stopped);
        };
        if outcomes.len() != patients {
            return Err(Error::OutcomeCount {
                expected: patients,
                actual: outcomes.len(),
            });
        }
        self.state.apply_cohort(dose, outcomes)?;
        if let Some(sh) = self.halving.as_mut() {
            sh.observe(dose, outcomes.iter().filter(|o| o.tox).count() as u32)?;
        }
        self.pending = None;
        self.interim = None;
        self.decide()
    }

    /// Fresh posterior summary of the current data drawn from `rng`, leaving
    /// the trial untouched.
    pub fn analyze<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Interim> {
        let fit = self.fit(rng)?;
        self.summarize(&fit)
    }

    pub fn result(&self) -> TrialResult {
        let recommendation = match &self.pending {
            Some(Decision::Stop { recommendation }) => *recommendation,
            _ => self
                .interim
                .as_ref()
                .map_or(Recommendation::none(Reason::NoData), |i| i.recommendation),
        };
        TrialResult {
            recommendation,
            allocations: self.state.allocations(),
            patients_used: self.state.patients_used(),
            early_stop: recommendation.is_early_stop(),
            low_acceptance_fits: self.low_acceptance_fits,
        }
    }

    fn next_decision(&mut self) -> Result<Decision> {
        let remaining = self.state.remaining();
        match self.design {
            DesignConfig::ThreePlusThree => {
                let fit = Fit::default();
                self.interim = Some(self.summarize(&fit)?);
                if remaining == 0 {
                    return Ok(stop(three_plus_three_recommend(&self.state)));
                }
                return Ok(match three_plus_three_step(&self.state) {
                    EscalationStep::Treat(dose) => Decision::Treat {
                        dose,
                        patients: remaining.min(3),
                    },
                    EscalationStep::Stop(r) => stop(r),
                });
            }
            DesignConfig::SequentialHalving => {
                self.interim = Some(self.summarize(&Fit::default())?);
                let sh = self.halving.as_ref().expect("halving state");
                return Ok(match sh.next() {
                    HalvingStep::Treat { dose, patients } => Decision::Treat { dose, patients },
                    HalvingStep::Done(dose) => stop(Recommendation::dose(dose)),
                });
            }
            _ => {}
        }
        if remaining == 0 {
            if self.state.patients_used() == 0 {
                return Ok(stop(Recommendation::none(Reason::NoData)));
            }
            let mut rng = self.rng.clone();
            let fit = self.fit(&mut rng)?;
            self.rng = rng;
            let interim = self.summarize(&fit)?;
            let r = interim.recommendation;
            self.interim = Some(interim);
            return Ok(stop(r));
        }
        if self.state.phase == Phase::Startup {
            return Ok(Decision::Treat {
                dose: startup_select(&self.state),
                patients: remaining.min(self.setup.cohort),
            });
        }

        let mut rng = self.rng.clone();
        let fit = self.fit(&mut rng)?;
        let interim = self.summarize(&fit)?;
        let pick = self.select(&fit, &interim, &mut rng)?;
        self.rng = rng;
        self.interim = Some(interim);
        Ok(match pick {
            Ok(dose) => Decision::Treat {
                dose,
                patients: remaining.min(self.setup.cohort),
            },
            Err(reason) => stop(Recommendation::none(reason)),
        })
    }

    fn fit<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Fit> {
        let mut fit = Fit::default();
        if matches!(self.design, DesignConfig::IndependentTs) {
            fit.tie_break = rng.random();
        }
        if !self.design.uses_tox_model() {
            return Ok(fit);
        }
        let setup = &self.setup;
        fit.tox = Some(mcmc_sample_tox(&setup.tox_skeleton, &self.state.tox, &setup.chain, rng)?);
        if let (Some(es), Some(obs)) = (&setup.eff_skeleton, &self.state.eff) {
            let eff = mcmc_sample_eff(es, obs, &setup.chain, rng)?;
            fit.t_hat = Some(breakpoint_posterior(&eff, es, obs)?);
            fit.eff = Some(eff);
        }
        Ok(fit)
    }

    fn summarize(&self, fit: &Fit) -> Result<Interim> {
        let setup = &self.setup;
        let theta = setup.theta;
        let state = &self.state;
        let mut interim = Interim {
            recommendation: Recommendation::none(Reason::NoData),
            mtd_probs: None,
            med_probs: None,
            admissible: None,
            breakpoint: fit.t_hat.clone(),
            tox_means: state
                .tox
                .patients
                .iter()
                .zip(&state.tox.toxicities)
                .map(|(&n, &s)| BetaPosterior::from_counts(n, s).mean())
                .collect(),
            eff_means: None,
            low_acceptance: fit.low_acceptance(),
        };
        match (&fit.tox, &fit.eff) {
            (Some(tox), None) => {
                interim.mtd_probs = Some(posterior_mtd_probs(tox, &setup.tox_skeleton, theta)?);
                interim.tox_means = posterior_tox_means(tox, &setup.tox_skeleton);
                interim.recommendation = recommend_tox(tox, &setup.tox_skeleton, theta)?;
                if let DesignConfig::TsA { c1 } = self.design {
                    interim.admissible = Some(admissible_set_tox(&state.tox, tox, &setup.tox_skeleton, theta, c1)?);
                }
            }
            (Some(tox), Some(eff)) => {
                let es = setup.eff_skeleton.as_ref().expect("efficacy skeleton");
                let t_hat = fit.t_hat.as_deref().expect("breakpoint posterior");
                interim.med_probs = Some(posterior_med_probs(tox, eff, &setup.tox_skeleton, es, theta)?);
                interim.tox_means = posterior_tox_means(tox, &setup.tox_skeleton);
                interim.eff_means = Some(posterior_eff_means(eff, es));
                interim.recommendation = recommend_med(tox, eff, t_hat, &setup.tox_skeleton, es, theta)?;
                if let DesignConfig::MedTsA { criteria } | DesignConfig::MtaRa { criteria, .. } = self.design {
                    interim.admissible =
                        Some(admissible_set_med(&state.tox, tox, eff, &setup.tox_skeleton, es, theta, criteria)?);
                }
            }
            _ => {
                interim.recommendation = match self.design {
                    DesignConfig::ThreePlusThree => three_plus_three_recommend(state),
                    DesignConfig::SequentialHalving => self.halving_recommendation(),
                    _ => recommend_most_allocated(&state.tox, fit.tie_break),
                };
            }
        }
        if state.patients_used() == 0 {
            interim.recommendation = Recommendation::none(Reason::NoData);
        }
        Ok(interim)
    }

    fn halving_recommendation(&self) -> Recommendation {
        let sh = self.halving.as_ref().expect("halving state");
        if let HalvingStep::Done(d) = sh.next() {
            return Recommendation::dose(d);
        }
        // empirical-mean rule over the doses still in play
        let mut tox = self.state.tox.clone();
        for k in 0..tox.doses() {
            if !sh.survivors().contains(&k) {
                tox.patients[k] = 0;
                tox.toxicities[k] = 0;
            }
        }
        recommend_empirical_mean(&tox, self.setup.theta)
    }

    /// The design's selection; `Err` carries the stopping reason.
    fn select<R: Rng + ?Sized>(
        &mut self,
        fit: &Fit,
        interim: &Interim,
        rng: &mut R,
    ) -> Result<core::result::Result<usize, Reason>> {
        if fit.low_acceptance() {
            self.low_acceptance_fits += 1;
        }
        let setup = &self.setup;
        let theta = setup.theta;
        let tox = || fit.tox.as_ref().expect("toxicity fit");
        let admissible = || interim.admissible.as_ref().expect("admissible set");
        let med = || interim.med_probs.as_ref().expect("MED probabilities");
        let pick = match self.design {
            DesignConfig::IndependentTs => Some(independent_ts_select(&self.state.tox, theta, rng)),
            DesignConfig::Crm => Some(crm_select(tox(), &setup.tox_skeleton, theta)?),
            DesignConfig::Ts => Some(ts_select(tox(), &setup.tox_skeleton, theta, rng)?),
            DesignConfig::TsEps { epsilon, max_rejections } => Some(ts_eps_select(
                tox(),
                &setup.tox_skeleton,
                theta,
                epsilon,
                max_rejections,
                rng,
            )?),
            DesignConfig::TsA { .. } => {
                let q = interim.mtd_probs.as_deref().expect("MTD probabilities");
                return Ok(ts_a_select(q, admissible(), rng).ok_or(Reason::AllInadmissible));
            }
            DesignConfig::MedTs => return Ok(med_ts_select(med(), rng).ok_or(Reason::EarlyStopToxicity)),
            DesignConfig::MedTsA { .. } => {
                return Ok(med_ts_a_select(med(), admissible(), rng));
            }
            DesignConfig::MtaRa { slack, .. } => {
                let s1 = designs::slack(slack, self.state.patients_used(), setup.budget);
                let pick = mta_ra_select(
                    fit.t_hat.as_deref().expect("breakpoint posterior"),
                    s1,
                    fit.eff.as_ref().expect("efficacy fit"),
                    setup.eff_skeleton.as_ref().expect("efficacy skeleton"),
                    self.state.eff.as_ref().expect("efficacy data"),
                    admissible(),
                    rng,
                )?;
                return Ok(pick.ok_or(Reason::AllInadmissible));
            }
            DesignConfig::ThreePlusThree | DesignConfig::SequentialHalving => unreachable!("scheduled designs"),
        };
        Ok(pick.ok_or(Reason::NoData))
    }
}

fn stop(recommendation: Recommendation) -> Decision {
    Decision::Stop { recommendation }
}

/// Supplies the outcomes of each allocation.
pub trait OutcomeSource {
    fn outcomes(&mut self, dose: usize, patients: usize, efficacy: bool) -> Result<Vec<Outcome>>;
}

/// True per-dose probabilities of a simulated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub tox: Vec<f64>,
    #[serde(default)]
    pub eff: Option<Vec<f64>>,
}

/// Independent Bernoulli toxicity and efficacy draws.
pub struct BernoulliOutcomes<'a> {
    truth: &'a GroundTruth,
    rng: ChaCha8Rng,
}

impl<'a> BernoulliOutcomes<'a> {
    pub fn new(truth: &'a GroundTruth, seed: RngSeed) -> Self {
        Self {
            truth,
            rng: seed.stream(OUTCOME_STREAM),
        }
    }
}

impl OutcomeSource for BernoulliOutcomes<'_> {
    fn outcomes(&mut self, dose: usize, patients: usize, efficacy: bool) -> Result<Vec<Outcome>> {
        let p = *self.truth.tox.get(dose).ok_or(Error::DoseOutOfRange(dose))?;
        let e = if efficacy {
            let eff = self.truth.eff.as_ref().ok_or(Error::MissingEfficacyModel)?;
            Some(*eff.get(dose).ok_or(Error::DoseOutOfRange(dose))?)
        } else {
            None
        };
        Ok((0..patients)
            .map(|_| {
                let tox = self.rng.random::<f64>() < p;
                let eff = e.map(|q| self.rng.random::<f64>() < q);
                Outcome { tox, eff }
            })
            .collect())
    }
}

/// Replays recorded cohorts in order.
#[derive(Debug, Clone, Default)]
pub struct ScriptedOutcomes {
    cohorts: VecDeque<Vec<Outcome>>,
}

impl ScriptedOutcomes {
    pub fn new(cohorts: impl IntoIterator<Item = Vec<Outcome>>) -> Self {
        Self {
            cohorts: cohorts.into_iter().collect(),
        }
    }
}

impl OutcomeSource for ScriptedOutcomes {
    fn outcomes(&mut self, _dose: usize, patients: usize, _efficacy: bool) -> Result<Vec<Outcome>> {
        self.cohorts.pop_front().ok_or(Error::OutcomeCount {
            expected: patients,
            actual: 0,
        })
    }
}

/// Runs a whole trial against `source`.
pub fn run_trial_with<S: OutcomeSource + ?Sized>(
    design: &DesignConfig,
    setup: &TrialSetup,
    seed: RngSeed,
    source: &mut S,
) -> Result<TrialResult> {
    let mut trial = Trial::new(design.clone(), setup.clone(), seed)?;
    let efficacy = design.needs_efficacy();
    let mut next = trial.decide()?;
    while let Decision::Treat { dose, patients } = next {
        let outcomes = source.outcomes(dose, patients, efficacy)?;
        next = trial.record(&outcomes)?;
    }
    Ok(trial.result())
}

/// Simulates one trial with Bernoulli outcomes drawn from `truth`.
pub fn run_trial(design: &DesignConfig, setup: &TrialSetup, truth: &GroundTruth, seed: RngSeed) -> Result<TrialResult> {
    if truth.tox.len() != setup.doses() {
        return Err(Error::LengthMismatch {
            expected: setup.doses(),
            actual: truth.tox.len(),
        });
    }
    run_trial_with(design, setup, seed, &mut BernoulliOutcomes::new(truth, seed))
}
