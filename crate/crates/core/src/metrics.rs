//! Per-trial results and their aggregation into table metrics.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::designs::Recommendation;
use crate::math::sqrt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub recommendation: Recommendation,
    pub allocations: Vec<u32>,
    pub patients_used: usize,
    pub early_stop: bool,
    /// Posterior fits whose sampler acceptance fell below the diagnostic floor.
    pub low_acceptance_fits: u32,
}

/// Percentages over a batch of replications. Allocation percentages are
/// taken over the planned budget, so early-stopped trials contribute
/// partial rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchMetrics {
    pub replications: usize,
    pub rec_pct: Vec<f64>,
    pub rec_none_pct: f64,
    pub alloc_pct_mean: Vec<f64>,
    /// Population standard deviation of the per-trial allocation percentages.
    pub alloc_pct_std: Vec<f64>,
    pub estop_pct: f64,
    pub mean_patients: f64,
    pub low_acceptance_fits: u64,
}

impl BatchMetrics {
    /// Folds results in the given order; `budget` is the planned sample size.
    pub fn aggregate(results: &[TrialResult], doses: usize, budget: usize) -> Self {
        let n = results.len();
        let scale = if n == 0 { 0.0 } else { 100.0 / n as f64 };
        let mut rec = vec![0usize; doses];
        let mut none = 0usize;
        let mut estop = 0usize;
        let mut patients = 0usize;
        let mut low = 0u64;
        let mut sum = vec![0.0; doses];
        for r in results {
            match r.recommendation.dose {
                Some(k) => rec[k] += 1,
                None => none += 1,
            }
            estop += usize::from(r.early_stop);
            patients += r.patients_used;
            low += u64::from(r.low_acceptance_fits);
            for (s, &a) in sum.iter_mut().zip(&r.allocations) {
                *s += alloc_pct(a, budget);
            }
        }
        let mean: Vec<f64> = sum.iter().map(|s| if n == 0 { 0.0 } else { s / n as f64 }).collect();
        let mut var = vec![0.0; doses];
        for r in results {
            for ((v, &a), m) in var.iter_mut().zip(&r.allocations).zip(&mean) {
                let d = alloc_pct(a, budget) - m;
                *v += d * d;
            }
        }
        Self {
            replications: n,
            rec_pct: rec.iter().map(|&c| c as f64 * scale).collect(),
            rec_none_pct: none as f64 * scale,
            alloc_pct_std: var.iter().map(|v| if n == 0 { 0.0 } else { sqrt(v / n as f64) }).collect(),
            alloc_pct_mean: mean,
            estop_pct: estop as f64 * scale,
            mean_patients: if n == 0 { 0.0 } else { patients as f64 / n as f64 },
            low_acceptance_fits: low,
        }
    }
}

fn alloc_pct(a: u32, budget: usize) -> f64 {
    if budget == 0 {
        0.0
    } else {
        100.0 * f64::from(a) / budget as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::Reason;
    use approx::assert_abs_diff_eq;

    fn result(dose: Option<usize>, alloc: Vec<u32>, early: bool) -> TrialResult {
        TrialResult {
            recommendation: match dose {
                Some(d) => Recommendation::dose(d),
                None => Recommendation::none(if early { Reason::AllInadmissible } else { Reason::NoSafeDose }),
            },
            patients_used: alloc.iter().sum::<u32>() as usize,
            allocations: alloc,
            early_stop: early,
            low_acceptance_fits: 0,
        }
    }

    #[test]
    fn single_trial_has_zero_spread() {
        let m = BatchMetrics::aggregate(&[result(Some(1), vec![3, 6, 3], false)], 3, 12);
        assert_eq!(m.rec_pct, vec![0.0, 100.0, 0.0]);
        assert_eq!(m.alloc_pct_mean, vec![25.0, 50.0, 25.0]);
        assert_eq!(m.alloc_pct_std, vec![0.0; 3]);
        assert_eq!(m.estop_pct, 0.0);
    }

    #[test]
    fn conservation_and_partial_rows() {
        let rs = [
            result(Some(0), vec![6, 6], false),
            result(None, vec![3, 0], true),
            result(Some(1), vec![0, 12], false),
            result(None, vec![6, 6], false),
        ];
        let m = BatchMetrics::aggregate(&rs, 2, 12);
        assert_abs_diff_eq!(m.rec_pct.iter().sum::<f64>() + m.rec_none_pct, 100.0, epsilon = 1e-12);
        assert_eq!(m.estop_pct, 25.0);
        assert!(m.alloc_pct_mean.iter().sum::<f64>() < 100.0);
        // dose 0 allocations: 50, 25, 0, 50 -> mean 31.25, population sd
        let sd = ((18.75f64.powi(2) * 2.0 + 6.25f64.powi(2) + 31.25f64.powi(2)) / 4.0).sqrt();
        assert_abs_diff_eq!(m.alloc_pct_std[0], sd, epsilon = 1e-12);
    }
}
