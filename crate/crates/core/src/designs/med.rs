use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{eligible, sample_restricted, AdmissibleSet, MedCriteria, Reason, Recommendation};
use crate::bayes::{
    breakpoint_weights, mean_eff_parameters, mean_tox_parameters, EffDraw, EffObservations, LogisticToxSkeleton,
    MedProbabilities, PlateauEffSkeleton, PosteriorSampleSet, ToxDraw, ToxObservations,
};
use crate::math::{self, TIE_TOLERANCE};
use crate::stats::med_unchecked;
use crate::{Error, Result, Threshold};

/// Eligible doses with `P(ψ_k > θ) ≤ c1` and, once a dose has more than three
/// patients, `P(φ_k > ξ) ≥ c2`.
#[allow(clippy::too_many_arguments)]
pub fn admissible_set_med(
    obs: &ToxObservations,
    tox_samples: &PosteriorSampleSet<ToxDraw>,
    eff_samples: &PosteriorSampleSet<EffDraw>,
    tox_skeleton: &LogisticToxSkeleton,
    eff_skeleton: &PlateauEffSkeleton,
    theta: Threshold,
    criteria: MedCriteria,
) -> Result<AdmissibleSet> {
    if tox_samples.is_empty() || eff_samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let k = tox_skeleton.doses();
    let mut toxic = vec![0u32; k];
    let mut effective = vec![0u32; k];
    let mut curve = Vec::with_capacity(k);
    for d in &tox_samples.draws {
        tox_skeleton.curve_into(d.beta0, d.beta1, &mut curve);
        for (c, &p) in toxic.iter_mut().zip(&curve) {
            *c += u32::from(p > theta.value());
        }
    }
    for d in &eff_samples.draws {
        eff_skeleton.curve_into(d.gamma0, d.gamma1, d.tau, &mut curve);
        for (c, &p) in effective.iter_mut().zip(&curve) {
            *c += u32::from(p > criteria.xi);
        }
    }
    let nt = tox_samples.len() as f64;
    let ne = eff_samples.len() as f64;
    let doses = eligible(obs)
        .filter(|&j| f64::from(toxic[j]) / nt <= criteria.c1)
        .filter(|&j| obs.patients[j] <= 3 || f64::from(effective[j]) / ne >= criteria.c2)
        .collect();
    Ok(AdmissibleSet { doses })
}

/// Draws a dose from the MED probabilities; `None` when the no-feasible-dose
/// outcome is drawn.
pub fn med_ts_select<R: Rng + ?Sized>(probs: &MedProbabilities, rng: &mut R) -> Option<usize> {
    let mut u = rng.random::<f64>() * (probs.doses.iter().sum::<f64>() + probs.none);
    for (k, &q) in probs.doses.iter().enumerate() {
        if q > 0.0 && u < q {
            return Some(k);
        }
        u -= q;
    }
    if probs.none > 0.0 {
        None
    } else {
        probs.doses.iter().rposition(|&q| q > 0.0)
    }
}

/// Draws from the MED probabilities restricted to the admissible set plus
/// the no-feasible-dose outcome. Drawing that outcome stops for toxicity; an
/// empty or massless admissible set stops as all-inadmissible.
pub fn med_ts_a_select<R: Rng + ?Sized>(
    probs: &MedProbabilities,
    admissible: &AdmissibleSet,
    rng: &mut R,
) -> core::result::Result<usize, Reason> {
    let mass: f64 = admissible.doses.iter().map(|&k| probs.doses[k]).sum();
    if admissible.is_empty() || mass <= 0.0 {
        return Err(Reason::AllInadmissible);
    }
    if rng.random::<f64>() * (mass + probs.none) >= mass {
        return Err(Reason::EarlyStopToxicity);
    }
    Ok(sample_restricted(&probs.doses, admissible, rng).expect("positive admissible mass"))
}

/// Breakpoint slack after `used` of `budget` patients.
pub fn slack(initial: f64, used: usize, budget: usize) -> f64 {
    if budget == 0 {
        return 0.0;
    }
    initial * (1.0 - used as f64 / budget as f64)
}

/// Adaptive-randomization step: draw `τ̂` among breakpoints within `s1` of
/// the mode of `t_hat`, then pick the smallest admissible dose maximizing the
/// efficacy estimate given `τ = τ̂`. `None` when nothing is admissible.
///
/// The estimate averages `φ(k, γ0, γ1, τ̂)` over the draws weighted by
/// `P(τ = τ̂ | γ0, γ1, D)`, i.e. over the posterior of `(γ0, γ1)` given `τ̂`.
#[allow(clippy::too_many_arguments)]
pub fn mta_ra_select<R: Rng + ?Sized>(
    t_hat: &[f64],
    s1: f64,
    eff_samples: &PosteriorSampleSet<EffDraw>,
    eff_skeleton: &PlateauEffSkeleton,
    eff_obs: &EffObservations,
    admissible: &AdmissibleSet,
    rng: &mut R,
) -> Result<Option<usize>> {
    if eff_samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if admissible.is_empty() {
        return Ok(None);
    }
    let tau = draw_breakpoint(t_hat, s1, rng);
    let phi = conditional_efficacy(tau, eff_samples, eff_skeleton, eff_obs);
    let mut best: Option<usize> = None;
    for &k in &admissible.doses {
        if best.is_none_or(|b| phi[k] > phi[b] + TIE_TOLERANCE) {
            best = Some(k);
        }
    }
    Ok(best)
}

/// `P(τ̂ = k) ∝ t̂_k` over `{k : max t̂ − t̂_k ≤ s1}`.
pub(crate) fn draw_breakpoint<R: Rng + ?Sized>(t_hat: &[f64], s1: f64, rng: &mut R) -> usize {
    let top = t_hat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = t_hat
        .iter()
        .map(|&t| if top - t <= s1 + TIE_TOLERANCE { t } else { 0.0 })
        .collect();
    if weights.iter().all(|&w| w <= 0.0) {
        return math::argmax(t_hat);
    }
    crate::bayes::sample_categorical(&weights, rng)
}

pub(crate) fn conditional_efficacy(
    tau: usize,
    eff_samples: &PosteriorSampleSet<EffDraw>,
    eff_skeleton: &PlateauEffSkeleton,
    eff_obs: &EffObservations,
) -> Vec<f64> {
    let k = eff_skeleton.doses();
    let mut acc = vec![0.0; k];
    let mut total = 0.0;
    for d in &eff_samples.draws {
        let w = breakpoint_weights(d.gamma0, d.gamma1, eff_skeleton, eff_obs)[tau];
        total += w;
        for (j, a) in acc.iter_mut().enumerate() {
            *a += w * eff_skeleton.phi(j, d.gamma0, d.gamma1, tau);
        }
    }
    if total > 0.0 {
        acc.iter_mut().for_each(|a| *a /= total);
    } else {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for d in &eff_samples.draws {
            for (j, a) in acc.iter_mut().enumerate() {
                *a += eff_skeleton.phi(j, d.gamma0, d.gamma1, tau);
            }
        }
        let n = eff_samples.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
    }
    acc
}

/// MED of the curves at the posterior means, with `τ̂` the mode of `t_hat`.
pub fn recommend_med(
    tox_samples: &PosteriorSampleSet<ToxDraw>,
    eff_samples: &PosteriorSampleSet<EffDraw>,
    t_hat: &[f64],
    tox_skeleton: &LogisticToxSkeleton,
    eff_skeleton: &PlateauEffSkeleton,
    theta: Threshold,
) -> Result<Recommendation> {
    let t = mean_tox_parameters(tox_samples)?;
    let e = mean_eff_parameters(eff_samples, t_hat)?;
    let tox = tox_skeleton.curve(t.beta0, t.beta1);
    let eff = eff_skeleton.curve(e.gamma0, e.gamma1, e.tau);
    Ok(match med_unchecked(&tox, &eff, theta.value()) {
        Some(k) => Recommendation::dose(k),
        None => Recommendation::none(Reason::NoSafeDose),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::{calibrate_eff_skeleton, calibrate_tox_skeleton, LogisticPrior};
    use crate::RngSeed;
    use approx::assert_abs_diff_eq;

    fn th() -> Threshold {
        Threshold::new(0.35).unwrap()
    }

    fn skeletons() -> (LogisticToxSkeleton, PlateauEffSkeleton) {
        (
            calibrate_tox_skeleton(&[0.02, 0.06, 0.12, 0.20, 0.30, 0.40], LogisticPrior::default()).unwrap(),
            calibrate_eff_skeleton(&[0.12, 0.20, 0.30, 0.40, 0.50, 0.59], None, LogisticPrior::default()).unwrap(),
        )
    }

    #[test]
    fn slack_schedule() {
        assert_abs_diff_eq!(slack(0.2, 0, 60), 0.2);
        assert_eq!(slack(0.2, 60, 60), 0.0);
        assert_abs_diff_eq!(slack(0.2, 30, 60), 0.1);
    }

    #[test]
    fn breakpoint_draw_restricted_to_candidates() {
        let t_hat = [0.5, 0.45, 0.05];
        let mut rng = RngSeed(1).stream(0);
        let mut c = [0.0f64; 3];
        for _ in 0..20_000 {
            c[draw_breakpoint(&t_hat, 0.2, &mut rng)] += 1.0 / 20_000.0;
        }
        assert!((c[0] - 0.5 / 0.95).abs() < 0.015, "{c:?}");
        assert_eq!(c[2], 0.0);
        for _ in 0..100 {
            assert_eq!(draw_breakpoint(&t_hat, 0.0, &mut rng), 0);
        }
    }

    #[test]
    fn med_ts_stops_when_nothing_feasible() {
        let p = MedProbabilities {
            doses: vec![0.0; 3],
            none: 1.0,
        };
        let mut rng = RngSeed(2).stream(0);
        assert_eq!(med_ts_select(&p, &mut rng), None);
        let p = MedProbabilities {
            doses: vec![0.2, 0.5, 0.1],
            none: 0.2,
        };
        let mut c = [0.0f64; 4];
        for _ in 0..10_000 {
            match med_ts_select(&p, &mut rng) {
                Some(k) => c[k] += 1e-4,
                None => c[3] += 1e-4,
            }
        }
        for (a, b) in c.iter().zip([0.2, 0.5, 0.1, 0.2]) {
            assert!((a - b).abs() < 0.02, "{c:?}");
        }
        // with every dose admissible the law is the TS law, stop included
        let all = AdmissibleSet { doses: vec![0, 1, 2] };
        let mut c = [0.0f64; 4];
        for _ in 0..10_000 {
            match med_ts_a_select(&p, &all, &mut rng) {
                Ok(k) => c[k] += 1e-4,
                Err(r) => {
                    assert_eq!(r, Reason::EarlyStopToxicity);
                    c[3] += 1e-4
                }
            }
        }
        for (a, b) in c.iter().zip([0.2, 0.5, 0.1, 0.2]) {
            assert!((a - b).abs() < 0.02, "{c:?}");
        }
        let one = AdmissibleSet { doses: vec![1] };
        let mut c = [0.0f64; 2];
        for _ in 0..10_000 {
            match med_ts_a_select(&p, &one, &mut rng) {
                Ok(k) => {
                    assert_eq!(k, 1);
                    c[0] += 1e-4
                }
                Err(_) => c[1] += 1e-4,
            }
        }
        assert!((c[0] - 0.5 / 0.7).abs() < 0.02, "{c:?}");
        assert_eq!(med_ts_a_select(&p, &AdmissibleSet::default(), &mut rng), Err(Reason::AllInadmissible));
        let zero = AdmissibleSet { doses: vec![0] };
        let p0 = MedProbabilities { doses: vec![0.0, 0.8, 0.0], none: 0.2 };
        assert_eq!(med_ts_a_select(&p0, &zero, &mut rng), Err(Reason::AllInadmissible));
    }

    #[test]
    fn efficacy_gate_needs_more_than_three_patients() {
        let (ts, es) = skeletons();
        let tox = PosteriorSampleSet::from_draws(vec![ToxDraw { beta0: -3.0, beta1: 1.0 }; 10]).unwrap();
        // efficacy far below xi everywhere
        let eff = PosteriorSampleSet::from_draws(vec![EffDraw { gamma0: -5.0, gamma1: 1.0, tau: 5 }; 10]).unwrap();
        let c = MedCriteria::default();
        let obs = ToxObservations::from_counts(vec![3, 4, 0, 0, 0, 0], vec![0, 0, 0, 0, 0, 0]).unwrap();
        let a = admissible_set_med(&obs, &tox, &eff, &ts, &es, th(), c).unwrap();
        assert_eq!(a.doses, vec![0, 2]);
    }

    #[test]
    fn mta_ra_picks_smallest_maximizer() {
        let (_, es) = skeletons();
        let obs = EffObservations::new(6);
        let eff = PosteriorSampleSet::from_draws(vec![EffDraw { gamma0: 0.0, gamma1: 1.0, tau: 2 }; 5]).unwrap();
        // all mass on τ = 2: efficacy flat from dose 2 on
        let t_hat = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        let a = AdmissibleSet { doses: vec![0, 1, 2, 3] };
        let mut rng = RngSeed(3).stream(0);
        assert_eq!(mta_ra_select(&t_hat, 0.2, &eff, &es, &obs, &a, &mut rng).unwrap(), Some(2));
        let a = AdmissibleSet { doses: vec![0, 1] };
        assert_eq!(mta_ra_select(&t_hat, 0.2, &eff, &es, &obs, &a, &mut rng).unwrap(), Some(1));
        assert_eq!(mta_ra_select(&t_hat, 0.2, &eff, &es, &obs, &AdmissibleSet::default(), &mut rng).unwrap(), None);
    }

    #[test]
    fn med_recommendation_at_truth() {
        let (ts, es) = skeletons();
        // curves with tox below θ up to dose 4, efficacy plateau at dose 3
        let tox = PosteriorSampleSet::from_draws(vec![ToxDraw { beta0: -0.5, beta1: 1.3 }]).unwrap();
        let eff = PosteriorSampleSet::from_draws(vec![EffDraw { gamma0: 1.5, gamma1: 1.0, tau: 2 }]).unwrap();
        let t_hat = [0.0, 0.1, 0.8, 0.1, 0.0, 0.0];
        let r = recommend_med(&tox, &eff, &t_hat, &ts, &es, th()).unwrap();
        assert_eq!(r, Recommendation::dose(2));
        let toxic = PosteriorSampleSet::from_draws(vec![ToxDraw { beta0: 5.0, beta1: 1.0 }]).unwrap();
        assert_eq!(recommend_med(&toxic, &eff, &t_hat, &ts, &es, th()).unwrap().reason, Reason::NoSafeDose);
    }
}
