//! Trial-conduct service: one session per trial, driven by recorded
//! outcomes posted one allocation at a time.
//!
//! Each accepted batch moves a session to the next revision. Clients send
//! the revision they last saw; a stale revision is a conflict unless it
//! repeats the batch already accepted at that revision, which is answered
//! as a replay. Doses on the wire number from 1.

mod api;
pub mod store;

use std::collections::HashMap;
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use dosefind_core::bayes::{ChainConfig, MedProbabilities};
use dosefind_core::designs::{DesignConfig, Outcome, Phase, Reason, Recommendation};
use dosefind_core::rng::ANALYSIS_STREAM;
use dosefind_core::trial::{Decision, Interim, Trial, TrialSetup};
use dosefind_core::RngSeed;
use serde::{Deserialize, Serialize};

pub use api::{router, serve, ApiError};
use store::{Event, Store};

fn yes() -> bool {
    true
}

fn is_false(b: &bool) -> bool {
    !*b
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

/// Body of `POST /sessions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub design: DesignConfig,
    pub theta: f64,
    pub n: usize,
    pub cohort: usize,
    pub prior_tox: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_eff: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_prior: Option<Vec<f64>>,
    #[serde(default = "yes")]
    pub startup: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainConfig>,
    /// Drawn at random when absent; always stored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl CreateSession {
    pub fn setup(&self) -> dosefind_core::Result<TrialSetup> {
        let mut s = TrialSetup::new(
            self.theta,
            self.n,
            self.cohort,
            &self.prior_tox,
            self.prior_eff.as_deref(),
            self.tau_prior.as_deref(),
        )?;
        s.startup = self.startup;
        if let Some(c) = self.chain {
            s.chain = c;
        }
        s.check(&self.design)?;
        Ok(s)
    }
}

/// Body of `POST /sessions/{id}/outcomes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitOutcomes {
    pub revision: u64,
    pub outcomes: Vec<Outcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecommendationView {
    pub dose: Option<usize>,
    pub reason: Reason,
}

impl From<Recommendation> for RecommendationView {
    fn from(r: Recommendation) -> Self {
        Self {
            dose: r.dose.map(|d| d + 1),
            reason: r.reason,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecisionView {
    Treat { dose: usize, patients: usize },
    Stop { recommendation: RecommendationView },
}

impl From<&Decision> for DecisionView {
    fn from(d: &Decision) -> Self {
        match *d {
            Decision::Treat { dose, patients } => Self::Treat {
                dose: dose + 1,
                patients,
            },
            Decision::Stop { recommendation } => Self::Stop {
                recommendation: recommendation.into(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Active,
    Stopped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub revision: u64,
    pub design: DesignConfig,
    pub theta: f64,
    pub budget: usize,
    pub cohort: usize,
    pub status: Status,
    pub phase: Phase,
    pub next: DecisionView,
    pub patients_used: usize,
    pub allocations: Vec<u32>,
    pub toxicities: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efficacies: Option<Vec<u32>>,
    pub created_ms: u64,
    pub updated_ms: u64,
    #[serde(default, skip_serializing_if = "is_false")]
    pub replayed: bool,
}

/// Posterior summary of a session's data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorView {
    pub revision: u64,
    pub recommendation: RecommendationView,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mtd_probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub med_probs: Option<MedProbabilities>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admissible: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakpoint: Option<Vec<f64>>,
    pub tox_means: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eff_means: Option<Vec<f64>>,
    pub low_acceptance: bool,
}

impl PosteriorView {
    fn new(revision: u64, i: &Interim) -> Self {
        Self {
            revision,
            recommendation: i.recommendation.into(),
            mtd_probs: i.mtd_probs.clone(),
            med_probs: i.med_probs.clone(),
            admissible: i.admissible.as_ref().map(|a| a.doses.iter().map(|d| d + 1).collect()),
            breakpoint: i.breakpoint.clone(),
            tox_means: i.tox_means.clone(),
            eff_means: i.eff_means.clone(),
            low_acceptance: i.low_acceptance,
        }
    }
}

/// A validated batch waiting to be logged and committed.
pub struct Prepared {
    trial: Trial,
    next: Decision,
    outcomes: Vec<Outcome>,
}

pub enum Submission {
    Accept(Box<Prepared>),
    Replay,
}

pub struct Session {
    id: String,
    config: CreateSession,
    trial: Trial,
    next: Decision,
    revision: u64,
    /// Batch accepted at each past revision.
    batches: Vec<Vec<Outcome>>,
    created_ms: u64,
    updated_ms: u64,
    posterior: Option<PosteriorView>,
}

impl Session {
    /// `config.seed` must already be set.
    pub fn create(id: String, config: CreateSession, at_ms: u64) -> Result<Self, ApiError> {
        let seed = config.seed.ok_or_else(|| ApiError::Internal("session seed unset".into()))?;
        let setup = config.setup().map_err(ApiError::validation)?;
        let mut trial = Trial::new(config.design.clone(), setup, RngSeed(seed)).map_err(ApiError::validation)?;
        let next = trial.decide().map_err(ApiError::validation)?;
        Ok(Self {
            id,
            config,
            trial,
            next,
            revision: 0,
            batches: Vec::new(),
            created_ms: at_ms,
            updated_ms: at_ms,
            posterior: None,
        })
    }

    /// Rebuilds a session from its event log.
    pub fn replay(id: String, events: Vec<Event>) -> anyhow::Result<Self> {
        let mut events = events.into_iter();
        let Some(Event::Created { config, at_ms }) = events.next() else {
            anyhow::bail!("event log does not start with a creation event");
        };
        let mut s = Self::create(id, config, at_ms)?;
        for e in events {
            let Event::Outcomes {
                revision,
                outcomes,
                at_ms,
            } = e
            else {
                anyhow::bail!("duplicate creation event");
            };
            match s.prepare(revision, outcomes)? {
                Submission::Accept(p) => s.commit(p, at_ms),
                Submission::Replay => anyhow::bail!("event log repeats revision {revision}"),
            }
        }
        Ok(s)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    /// Validates a batch against a copy of the trial.
    pub fn prepare(&self, revision: u64, outcomes: Vec<Outcome>) -> Result<Submission, ApiError> {
        if revision < self.revision && self.batches.get(revision as usize) == Some(&outcomes) {
            return Ok(Submission::Replay);
        }
        if revision != self.revision {
            return Err(ApiError::Conflict {
                current_revision: self.revision,
            });
        }
        if self.trial.is_stopped() {
            return Err(ApiError::State("trial has stopped; no further outcomes are accepted".into()));
        }
        let mut trial = self.trial.clone();
        let next = trial.record(&outcomes).map_err(ApiError::validation)?;
        Ok(Submission::Accept(Box::new(Prepared { trial, next, outcomes })))
    }

    pub fn commit(&mut self, p: Box<Prepared>, at_ms: u64) {
        self.trial = p.trial;
        self.next = p.next;
        self.batches.push(p.outcomes);
        self.revision += 1;
        self.updated_ms = at_ms;
        self.posterior = None;
    }

    pub fn view(&self) -> SessionView {
        let st = self.trial.state();
        SessionView {
            id: self.id.clone(),
            revision: self.revision,
            design: self.config.design.clone(),
            theta: self.config.theta,
            budget: self.config.n,
            cohort: self.config.cohort,
            status: if self.trial.is_stopped() {
                Status::Stopped
            } else {
                Status::Active
            },
            phase: st.phase,
            next: (&self.next).into(),
            patients_used: st.patients_used(),
            allocations: st.allocations(),
            toxicities: st.tox.toxicities.clone(),
            efficacies: st.eff.as_ref().map(|e| e.responses.clone()),
            created_ms: self.created_ms,
            updated_ms: self.updated_ms,
            replayed: false,
        }
    }

    /// The summary behind the latest decision, or a fresh fit drawn from the
    /// analysis stream when that decision needed none.
    pub fn posterior(&mut self) -> Result<PosteriorView, ApiError> {
        if let Some(p) = &self.posterior {
            return Ok(p.clone());
        }
        let interim = match self.trial.interim() {
            Some(i) => i.clone(),
            None => {
                let seed = RngSeed(self.config.seed.unwrap_or_default()).replication(self.revision);
                self.trial
                    .analyze(&mut seed.stream(ANALYSIS_STREAM))
                    .map_err(|e| ApiError::Internal(e.to_string()))?
            }
        };
        let p = PosteriorView::new(self.revision, &interim);
        self.posterior = Some(p.clone());
        Ok(p)
    }
}

/// A session behind its mutex, plus the latest view for readers.
pub struct Handle {
    session: Arc<tokio::sync::Mutex<Session>>,
    view: RwLock<Arc<SessionView>>,
}

impl Handle {
    fn new(s: Session) -> Self {
        let view = Arc::new(s.view());
        Self {
            session: Arc::new(tokio::sync::Mutex::new(s)),
            view: RwLock::new(view),
        }
    }

    pub fn view(&self) -> Arc<SessionView> {
        self.view.read().expect("view lock").clone()
    }

    fn publish(&self, v: SessionView) {
        *self.view.write().expect("view lock") = Arc::new(v);
    }
}

pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<Handle>>>,
    store: Option<Store>,
}

impl AppState {
    /// Loads every stored session when a store is given.
    pub fn new(store: Option<Store>) -> anyhow::Result<Self> {
        let mut sessions = HashMap::new();
        if let Some(st) = &store {
            for (id, events) in st.load_all()? {
                match Session::replay(id.clone(), events) {
                    Ok(s) => {
                        sessions.insert(id, Arc::new(Handle::new(s)));
                    }
                    Err(e) => tracing::error!(session = %id, error = %e, "could not restore session"),
                }
            }
            tracing::info!(count = sessions.len(), dir = %st.dir().display(), "restored sessions");
        }
        Ok(Self {
            sessions: RwLock::new(sessions),
            store,
        })
    }

    pub fn in_memory() -> Self {
        Self {
            sessions: RwLock::new(HashMap::new()),
            store: None,
        }
    }

    pub fn get(&self, id: &str) -> Option<Arc<Handle>> {
        self.sessions.read().expect("sessions lock").get(id).cloned()
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("sessions lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn insert(&self, s: Session) -> Arc<Handle> {
        let id = s.id().to_string();
        let h = Arc::new(Handle::new(s));
        self.sessions.write().expect("sessions lock").insert(id, h.clone());
        h
    }

    /// Writes the latest snapshot of every session.
    pub fn flush(&self) -> anyhow::Result<()> {
        if let Some(st) = &self.store {
            let handles: Vec<_> = self.sessions.read().expect("sessions lock").values().cloned().collect();
            for h in handles {
                st.write_snapshot(&h.view())?;
            }
        }
        Ok(())
    }
}
