use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{EffDraw, LogisticToxSkeleton, PlateauEffSkeleton, PosteriorSampleSet, ToxDraw};
use crate::math;
use crate::stats::med_unchecked;
use crate::{Error, Result, Threshold};

/// `q̂_k`: fraction of draws whose sampled curve has dose `k` as its MTD.
pub fn posterior_mtd_probs(samples: &PosteriorSampleSet<ToxDraw>, skeleton: &LogisticToxSkeleton, theta: Threshold) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut q = vec![0.0; skeleton.doses()];
    let mut curve = Vec::with_capacity(skeleton.doses());
    for d in &samples.draws {
        skeleton.curve_into(d.beta0, d.beta1, &mut curve);
        q[math::argmin_distance(&curve, theta.value())] += 1.0;
    }
    let n = samples.len() as f64;
    q.iter_mut().for_each(|x| *x /= n);
    Ok(q)
}

/// Posterior probabilities of each dose being the MED, plus the mass of
/// draws in which no dose is safe enough.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedProbabilities {
    pub doses: Vec<f64>,
    pub none: f64,
}

/// Pairs toxicity and efficacy draws index by index.
pub fn posterior_med_probs(
    tox_samples: &PosteriorSampleSet<ToxDraw>,
    eff_samples: &PosteriorSampleSet<EffDraw>,
    tox_skeleton: &LogisticToxSkeleton,
    eff_skeleton: &PlateauEffSkeleton,
    theta: Threshold,
) -> Result<MedProbabilities> {
    if tox_samples.is_empty() || eff_samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if tox_samples.len() != eff_samples.len() {
        return Err(Error::LengthMismatch {
            expected: tox_samples.len(),
            actual: eff_samples.len(),
        });
    }
    let k = tox_skeleton.doses();
    let mut doses = vec![0.0; k];
    let mut none = 0.0;
    let mut tox = Vec::with_capacity(k);
    let mut eff = Vec::with_capacity(k);
    for (t, e) in tox_samples.draws.iter().zip(&eff_samples.draws) {
        tox_skeleton.curve_into(t.beta0, t.beta1, &mut tox);
        eff_skeleton.curve_into(e.gamma0, e.gamma1, e.tau, &mut eff);
        match med_unchecked(&tox, &eff, theta.value()) {
            Some(i) => doses[i] += 1.0,
            None => none += 1.0,
        }
    }
    let n = tox_samples.len() as f64;
    doses.iter_mut().for_each(|x| *x /= n);
    Ok(MedProbabilities { doses, none: none / n })
}

/// Coordinate-wise posterior mean `(β̂0, β̂1)`.
pub fn mean_tox_parameters(samples: &PosteriorSampleSet<ToxDraw>) -> Result<ToxDraw> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let n = samples.len() as f64;
    let (b0, b1) = samples
        .draws
        .iter()
        .fold((0.0, 0.0), |(a, b), d| (a + d.beta0, b + d.beta1));
    Ok(ToxDraw {
        beta0: b0 / n,
        beta1: b1 / n,
    })
}

/// Posterior mean `(γ̂0, γ̂1)` with `τ̂` the mode of `t_hat`.
pub fn mean_eff_parameters(samples: &PosteriorSampleSet<EffDraw>, t_hat: &[f64]) -> Result<EffDraw> {
    if samples.is_empty() || t_hat.is_empty() {
        return Err(Error::EmptySamples);
    }
    let n = samples.len() as f64;
    let (g0, g1) = samples
        .draws
        .iter()
        .fold((0.0, 0.0), |(a, b), d| (a + d.gamma0, b + d.gamma1));
    Ok(EffDraw {
        gamma0: g0 / n,
        gamma1: g1 / n,
        tau: breakpoint_mode(t_hat),
    })
}

/// Most probable breakpoint; ties go to the smallest dose.
pub fn breakpoint_mode(t_hat: &[f64]) -> usize {
    math::argmax(t_hat)
}

/// Posterior mean toxicity per dose, averaged over draws.
pub fn posterior_tox_means(samples: &PosteriorSampleSet<ToxDraw>, skeleton: &LogisticToxSkeleton) -> Vec<f64> {
    let k = skeleton.doses();
    let mut acc = vec![0.0; k];
    for d in &samples.draws {
        for (j, a) in acc.iter_mut().enumerate() {
            *a += skeleton.psi(j, d.beta0, d.beta1);
        }
    }
    let n = samples.len().max(1) as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

/// Posterior mean efficacy per dose, averaged over draws.
pub fn posterior_eff_means(samples: &PosteriorSampleSet<EffDraw>, skeleton: &PlateauEffSkeleton) -> Vec<f64> {
    let k = skeleton.doses();
    let mut acc = vec![0.0; k];
    for d in &samples.draws {
        for (j, a) in acc.iter_mut().enumerate() {
            *a += skeleton.phi(j, d.gamma0, d.gamma1, d.tau);
        }
    }
    let n = samples.len().max(1) as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::{calibrate_eff_skeleton, calibrate_tox_skeleton, LogisticPrior};
    use approx::assert_abs_diff_eq;

    fn tox_skel() -> LogisticToxSkeleton {
        calibrate_tox_skeleton(&[0.10, 0.30, 0.50], LogisticPrior::default()).unwrap()
    }

    fn tox_draws(v: &[(f64, f64)]) -> PosteriorSampleSet<ToxDraw> {
        PosteriorSampleSet::from_draws(v.iter().map(|&(beta0, beta1)| ToxDraw { beta0, beta1 }).collect()).unwrap()
    }

    #[test]
    fn mtd_probs_hand_count() {
        let s = tox_skel();
        let th = Threshold::new(0.3).unwrap();
        let draws = [(0.0, 1.0), (0.0, 1.0), (-3.0, 0.5), (2.0, 1.0), (1.0, 1.0)];
        let set = tox_draws(&draws);
        let mut oracle = [0.0; 3];
        for &(b0, b1) in &draws {
            let dist: Vec<f64> = (0..3).map(|k| (s.psi(k, b0, b1) - 0.3).abs()).collect();
            let best = (0..3).fold(0, |b, k| if dist[k] < dist[b] - 1e-12 { k } else { b });
            oracle[best] += 0.2;
        }
        let q = posterior_mtd_probs(&set, &s, th).unwrap();
        for (a, b) in q.iter().zip(&oracle) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(q.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn identical_draws_give_indicator() {
        let q = posterior_mtd_probs(&tox_draws(&[(0.0, 1.0); 7]), &tox_skel(), Threshold::new(0.3).unwrap()).unwrap();
        assert_eq!(q, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn med_probs_hand_count_and_none() {
        let ts = tox_skel();
        let es = calibrate_eff_skeleton(&[0.2, 0.4, 0.6], None, LogisticPrior::default()).unwrap();
        let th = Threshold::new(0.35).unwrap();
        let tox = tox_draws(&[(0.0, 1.0), (0.0, 1.0), (5.0, 1.0), (-4.0, 1.0), (0.0, 1.0)]);
        let eff = PosteriorSampleSet::from_draws(vec![
            EffDraw { gamma0: 0.0, gamma1: 1.0, tau: 2 },
            EffDraw { gamma0: 0.0, gamma1: 1.0, tau: 0 },
            EffDraw { gamma0: 0.0, gamma1: 1.0, tau: 2 },
            EffDraw { gamma0: 0.0, gamma1: 1.0, tau: 2 },
            EffDraw { gamma0: 0.0, gamma1: 1.0, tau: 1 },
        ])
        .unwrap();
        // draw 1: doses 0,1 safe, eff increasing -> 1; draw 2: flat -> 0;
        // draw 3: nothing safe; draw 4: all safe -> 2; draw 5: plateau at 1 -> 1
        let m = posterior_med_probs(&tox, &eff, &ts, &es, th).unwrap();
        assert_eq!(m.doses, vec![0.2, 0.4, 0.2]);
        assert_abs_diff_eq!(m.none, 0.2);
        let toxic = tox_draws(&[(5.0, 1.0); 5]);
        assert_eq!(posterior_med_probs(&toxic, &eff, &ts, &es, th).unwrap().none, 1.0);
        let short = tox_draws(&[(0.0, 1.0)]);
        assert!(posterior_med_probs(&short, &eff, &ts, &es, th).is_err());
    }

    #[test]
    fn means_and_mode() {
        let m = mean_tox_parameters(&tox_draws(&[(0.0, 1.0), (2.0, 3.0)])).unwrap();
        assert_eq!((m.beta0, m.beta1), (1.0, 2.0));
        let single = mean_tox_parameters(&tox_draws(&[(0.4, 0.7)])).unwrap();
        assert_eq!((single.beta0, single.beta1), (0.4, 0.7));
        assert_eq!(breakpoint_mode(&[0.1, 0.7, 0.2]), 1);
        assert_eq!(breakpoint_mode(&[0.4, 0.2, 0.4]), 0);
    }
}
