//! Replicated simulation across a worker pool.

use dosefind_core::designs::DesignConfig;
use dosefind_core::metrics::{BatchMetrics, TrialResult};
use dosefind_core::scenario::ScenarioSpec;
use dosefind_core::trial::{run_trial, GroundTruth, TrialSetup};
use dosefind_core::RngSeed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

fn pool(parallelism: usize) -> anyhow::Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(parallelism.max(1)).build()?)
}

/// Runs `replications` trials; replication `i` uses `seed.replication(i)`
/// and results come back in replication order.
pub fn run_replications(
    design: &DesignConfig,
    setup: &TrialSetup,
    truth: &GroundTruth,
    replications: usize,
    seed: RngSeed,
    parallelism: usize,
) -> anyhow::Result<Vec<TrialResult>> {
    setup.check(design)?;
    let results: Result<Vec<_>, _> = pool(parallelism)?.install(|| {
        (0..replications as u64)
            .into_par_iter()
            .map(|i| run_trial(design, setup, truth, seed.replication(i)))
            .collect()
    });
    Ok(results?)
}

pub fn run_batch(
    design: &DesignConfig,
    setup: &TrialSetup,
    truth: &GroundTruth,
    replications: usize,
    seed: RngSeed,
    parallelism: usize,
) -> anyhow::Result<BatchMetrics> {
    let results = run_replications(design, setup, truth, replications, seed, parallelism)?;
    Ok(BatchMetrics::aggregate(&results, setup.doses(), setup.budget))
}

/// Mean allocations of Independent Thompson Sampling at one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub horizon: usize,
    /// `Ê[N_k(n)]` per dose.
    pub mean_allocations: Vec<f64>,
}

impl GrowthRow {
    pub fn fractions(&self) -> Vec<f64> {
        self.mean_allocations.iter().map(|a| a / self.horizon as f64).collect()
    }
}

/// Patient-by-patient Independent TS (cohorts of one, no start-up) at each
/// horizon.
pub fn log_growth_probe(
    scenario: &ScenarioSpec,
    horizons: &[usize],
    replications: usize,
    seed: RngSeed,
    parallelism: usize,
) -> anyhow::Result<Vec<GrowthRow>> {
    let truth = scenario.truth();
    let design = DesignConfig::IndependentTs;
    horizons
        .iter()
        .map(|&h| {
            let mut setup = scenario.setup()?;
            setup.budget = h;
            setup.cohort = 1;
            setup.startup = false;
            let results = run_replications(&design, &setup, &truth, replications, seed, parallelism)?;
            let mut mean = vec![0.0; setup.doses()];
            for r in &results {
                for (m, &a) in mean.iter_mut().zip(&r.allocations) {
                    *m += f64::from(a);
                }
            }
            mean.iter_mut().for_each(|m| *m /= replications as f64);
            Ok(GrowthRow {
                horizon: h,
                mean_allocations: mean,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::builtin;

    #[test]
    fn single_replication_matches_direct_run() {
        let sc = builtin("tox_sc2").unwrap();
        let setup = sc.setup().unwrap();
        let d = DesignConfig::IndependentTs;
        let m = run_batch(&d, &setup, &sc.truth(), 1, RngSeed(3), 2).unwrap();
        let r = run_trial(&d, &setup, &sc.truth(), RngSeed(3).replication(0)).unwrap();
        assert_eq!(m, BatchMetrics::aggregate(&[r], 6, 36));
        assert!(m.alloc_pct_std.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn growth_probe_shape() {
        let sc = builtin("tox_sc1").unwrap();
        let rows = log_growth_probe(&sc, &[30], 4, RngSeed(1), 1).unwrap();
        assert_eq!(rows.len(), 1);
        assert!((rows[0].mean_allocations.iter().sum::<f64>() - 30.0).abs() < 1e-9);
    }
}
