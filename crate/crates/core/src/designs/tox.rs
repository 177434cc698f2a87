use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Beta, Distribution};

use super::{eligible, sample_restricted, AdmissibleSet, Reason, Recommendation};
use crate::bayes::{mean_tox_parameters, LogisticToxSkeleton, PosteriorSampleSet, ToxDraw, ToxObservations};
use crate::math::{self, argmin_distance};
use crate::{Error, Result, Threshold};

/// Independent Thompson Sampling: one `Beta(S+1, N-S+1)` draw per dose, the
/// draw closest to θ wins.
pub fn independent_ts_select<R: Rng + ?Sized>(obs: &ToxObservations, theta: Threshold, rng: &mut R) -> usize {
    let draws: Vec<f64> = obs
        .patients
        .iter()
        .zip(&obs.toxicities)
        .map(|(&n, &s)| {
            let a = f64::from(s) + 1.0;
            let b = f64::from(n - s) + 1.0;
            Beta::new(a, b).expect("beta parameters are at least one").sample(rng)
        })
        .collect();
    argmin_distance(&draws, theta.value())
}

/// Most-allocated dose; `u` in `[0, 1)` picks uniformly among ties.
pub fn recommend_most_allocated(obs: &ToxObservations, u: f64) -> Recommendation {
    let top = obs.patients.iter().copied().max().unwrap_or(0);
    if top == 0 {
        return Recommendation::none(Reason::NoData);
    }
    let tied: Vec<usize> = (0..obs.doses()).filter(|&k| obs.patients[k] == top).collect();
    let i = ((u * tied.len() as f64) as usize).min(tied.len() - 1);
    Recommendation::dose(tied[i])
}

/// Empirical-mean rule over tested doses.
pub fn recommend_empirical_mean(obs: &ToxObservations, theta: Threshold) -> Recommendation {
    let mut best: Option<(usize, f64)> = None;
    for (k, (&n, &s)) in obs.patients.iter().zip(&obs.toxicities).enumerate() {
        if n == 0 {
            continue;
        }
        let d = math::abs(f64::from(s) / f64::from(n) - theta.value());
        if best.is_none_or(|(_, b)| d < b - math::TIE_TOLERANCE) {
            best = Some((k, d));
        }
    }
    match best {
        Some((k, _)) => Recommendation::dose(k),
        None => Recommendation::none(Reason::NoData),
    }
}

/// Dose whose toxicity at the posterior-mean parameters is closest to θ.
pub fn crm_select(samples: &PosteriorSampleSet<ToxDraw>, skeleton: &LogisticToxSkeleton, theta: Threshold) -> Result<usize> {
    let m = mean_tox_parameters(samples)?;
    Ok(argmin_distance(&skeleton.curve(m.beta0, m.beta1), theta.value()))
}

/// The CRM rule doubles as the recommendation of every toxicity-model design.
pub fn recommend_tox(
    samples: &PosteriorSampleSet<ToxDraw>,
    skeleton: &LogisticToxSkeleton,
    theta: Threshold,
) -> Result<Recommendation> {
    crm_select(samples, skeleton, theta).map(Recommendation::dose)
}

/// MTD of one uniformly chosen posterior draw.
pub fn ts_select<R: Rng + ?Sized>(
    samples: &PosteriorSampleSet<ToxDraw>,
    skeleton: &LogisticToxSkeleton,
    theta: Threshold,
    rng: &mut R,
) -> Result<usize> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let d = samples.draws[rng.random_range(0..samples.len())];
    Ok(argmin_distance(&skeleton.curve(d.beta0, d.beta1), theta.value()))
}

/// TS(ε): Thompson candidates are accepted only if their toxicity at the
/// posterior means lies within ε of the CRM dose's. After `max_rejections`
/// refusals the least toxic refused candidate is used.
pub fn ts_eps_select<R: Rng + ?Sized>(
    samples: &PosteriorSampleSet<ToxDraw>,
    skeleton: &LogisticToxSkeleton,
    theta: Threshold,
    epsilon: f64,
    max_rejections: usize,
    rng: &mut R,
) -> Result<usize> {
    let m = mean_tox_parameters(samples)?;
    let curve = skeleton.curve(m.beta0, m.beta1);
    let p_hat = curve[argmin_distance(&curve, theta.value())];
    let mut fallback: Option<usize> = None;
    for _ in 0..max_rejections.max(1) {
        let cand = ts_select(samples, skeleton, theta, rng)?;
        if math::abs(curve[cand] - p_hat) < epsilon {
            return Ok(cand);
        }
        if fallback.is_none_or(|f| curve[cand] < curve[f]) {
            fallback = Some(cand);
        }
    }
    Ok(fallback.expect("at least one candidate"))
}

/// Eligible doses whose probability of being more toxic than the sampled
/// MTD is at most `c1`.
pub fn admissible_set_tox(
    obs: &ToxObservations,
    samples: &PosteriorSampleSet<ToxDraw>,
    skeleton: &LogisticToxSkeleton,
    theta: Threshold,
    c1: f64,
) -> Result<AdmissibleSet> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let k = skeleton.doses();
    let mut exceed = vec![0u32; k];
    let mut curve = Vec::with_capacity(k);
    for d in &samples.draws {
        skeleton.curve_into(d.beta0, d.beta1, &mut curve);
        let mtd = argmin_distance(&curve, theta.value());
        for (e, &p) in exceed.iter_mut().zip(&curve) {
            *e += u32::from(p > curve[mtd]);
        }
    }
    let n = samples.len() as f64;
    Ok(AdmissibleSet {
        doses: eligible(obs).filter(|&j| f64::from(exceed[j]) / n <= c1).collect(),
    })
}

/// Draws from `q` renormalized over the admissible set; `None` when the set
/// carries no mass.
pub fn ts_a_select<R: Rng + ?Sized>(q: &[f64], admissible: &AdmissibleSet, rng: &mut R) -> Option<usize> {
    sample_restricted(q, admissible, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::{calibrate_tox_skeleton, posterior_mtd_probs, LogisticPrior};
    use crate::RngSeed;

    fn th() -> Threshold {
        Threshold::new(0.3).unwrap()
    }

    fn standard_skeleton() -> LogisticToxSkeleton {
        calibrate_tox_skeleton(&[0.06, 0.12, 0.20, 0.30, 0.40, 0.50], LogisticPrior::default()).unwrap()
    }

    fn cloud(rng: &mut impl Rng, centre: (f64, f64), spread: f64, n: usize) -> PosteriorSampleSet<ToxDraw> {
        let draws = (0..n)
            .map(|_| ToxDraw {
                beta0: centre.0 + spread * (rng.random::<f64>() - 0.5),
                beta1: centre.1 * (1.0 + spread * (rng.random::<f64>() - 0.5)),
            })
            .collect();
        PosteriorSampleSet::from_draws(draws).unwrap()
    }

    #[test]
    fn independent_ts_is_uniform_without_data() {
        let obs = ToxObservations::new(4);
        let mut rng = RngSeed(1).stream(0);
        let mut counts = [0u32; 4];
        for _ in 0..10_000 {
            counts[independent_ts_select(&obs, th(), &mut rng)] += 1;
        }
        for c in counts {
            assert!((f64::from(c) / 10_000.0 - 0.25).abs() < 0.02, "{counts:?}");
        }
    }

    #[test]
    fn independent_ts_avoids_toxic_dose() {
        // Beta(100,1) at dose 0, Beta(1,100) elsewhere
        let obs = ToxObservations::from_counts(vec![99, 99, 99], vec![99, 0, 0]).unwrap();
        let mut rng = RngSeed(2).stream(0);
        let hits = (0..10_000).filter(|_| independent_ts_select(&obs, th(), &mut rng) == 0).count();
        assert!(hits < 10);
    }

    #[test]
    fn empirical_mean_recommendation() {
        let obs = ToxObservations::from_counts(vec![3, 6, 0], vec![0, 2, 0]).unwrap();
        assert_eq!(recommend_empirical_mean(&obs, th()), Recommendation::dose(1));
        assert_eq!(recommend_empirical_mean(&ToxObservations::new(3), th()).reason, Reason::NoData);
    }

    #[test]
    fn most_allocated_recommendation() {
        let obs = ToxObservations::from_counts(vec![6, 3, 6, 0], vec![0, 1, 5, 0]).unwrap();
        assert_eq!(recommend_most_allocated(&obs, 0.0), Recommendation::dose(0));
        assert_eq!(recommend_most_allocated(&obs, 0.49), Recommendation::dose(0));
        assert_eq!(recommend_most_allocated(&obs, 0.5), Recommendation::dose(2));
        assert_eq!(recommend_most_allocated(&obs, 0.999), Recommendation::dose(2));
        let single = ToxObservations::from_counts(vec![3, 9, 6], vec![0, 9, 0]).unwrap();
        assert_eq!(recommend_most_allocated(&single, 0.7), Recommendation::dose(1));
        assert_eq!(recommend_most_allocated(&ToxObservations::new(2), 0.3).reason, Reason::NoData);
    }

    #[test]
    fn crm_at_prior_means_picks_skeleton_match() {
        let s = standard_skeleton();
        let set = PosteriorSampleSet::from_draws(vec![ToxDraw { beta0: 0.0, beta1: 1.0 }]).unwrap();
        assert_eq!(crm_select(&set, &s, th()).unwrap(), 3);
        // concentrated near a curve whose dose-4 toxicity is 0.30
        let mut rng = RngSeed(3).stream(0);
        let set = cloud(&mut rng, (0.0, 1.0), 0.05, 500);
        assert_eq!(crm_select(&set, &s, th()).unwrap(), 3);
    }

    #[test]
    fn ts_frequencies_match_mtd_probabilities() {
        let s = standard_skeleton();
        let mut rng = RngSeed(4).stream(0);
        let set = cloud(&mut rng, (0.3, 1.0), 2.0, 400);
        let q = posterior_mtd_probs(&set, &s, th()).unwrap();
        let mut freq = [0.0; 6];
        for _ in 0..10_000 {
            freq[ts_select(&set, &s, th(), &mut rng).unwrap()] += 1e-4;
        }
        for (f, q) in freq.iter().zip(&q) {
            assert!((f - q).abs() < 0.02, "{freq:?} vs {q:?}");
        }
    }

    #[test]
    fn ts_eps_with_unit_width_matches_ts() {
        let s = standard_skeleton();
        let set = cloud(&mut RngSeed(5).stream(0), (0.3, 1.0), 2.0, 400);
        let mut a = RngSeed(6).stream(0);
        let mut b = RngSeed(6).stream(0);
        for _ in 0..10_000 {
            let x = ts_eps_select(&set, &s, th(), 1.0, 50, &mut a).unwrap();
            let y = ts_select(&set, &s, th(), &mut b).unwrap();
            assert_eq!(x, y);
        }
    }

    #[test]
    fn ts_eps_narrow_width_returns_crm_dose() {
        let s = standard_skeleton();
        let set = cloud(&mut RngSeed(7).stream(0), (0.0, 1.0), 0.3, 2000);
        let crm = crm_select(&set, &s, th()).unwrap();
        let mut rng = RngSeed(8).stream(0);
        for _ in 0..1000 {
            assert_eq!(ts_eps_select(&set, &s, th(), 1e-9, 50, &mut rng).unwrap(), crm);
        }
    }

    #[test]
    fn ts_eps_falls_back_to_least_toxic_rejected() {
        let s = standard_skeleton();
        // posterior means pick dose 3 but every draw has MTD 1 or 5
        let draws = vec![
            ToxDraw { beta0: 1.6, beta1: 1.0 },
            ToxDraw { beta0: -1.6, beta1: 1.0 },
        ];
        let set = PosteriorSampleSet::from_draws(draws).unwrap();
        let m = mean_tox_parameters(&set).unwrap();
        let curve = s.curve(m.beta0, m.beta1);
        let picks: Vec<usize> = set
            .draws
            .iter()
            .map(|d| argmin_distance(&s.curve(d.beta0, d.beta1), 0.3))
            .collect();
        assert_ne!(picks[0], picks[1]);
        let mut rng = RngSeed(9).stream(0);
        let got = ts_eps_select(&set, &s, th(), 1e-6, 50, &mut rng).unwrap();
        let expected = *picks.iter().min_by(|&&a, &&b| curve[a].total_cmp(&curve[b])).unwrap();
        assert_eq!(got, expected);
    }

    #[test]
    fn admissible_boundaries() {
        let s = standard_skeleton();
        let set = cloud(&mut RngSeed(10).stream(0), (0.0, 1.0), 1.0, 50);
        let obs = ToxObservations::from_counts(vec![3, 3, 0, 0, 0, 0], vec![0, 1, 0, 0, 0, 0]).unwrap();
        assert_eq!(admissible_set_tox(&obs, &set, &s, th(), 1.0).unwrap().doses, vec![0, 1, 2]);
        let strict = admissible_set_tox(&obs, &set, &s, th(), 0.0).unwrap();
        for &k in &strict.doses {
            for d in &set.draws {
                let c = s.curve(d.beta0, d.beta1);
                assert!(c[k] <= c[argmin_distance(&c, 0.3)]);
            }
        }
    }

    #[test]
    fn ts_a_renormalizes() {
        let q = [0.1, 0.2, 0.3, 0.4];
        let a = AdmissibleSet { doses: vec![1, 3] };
        let mut rng = RngSeed(11).stream(0);
        let mut c = [0.0f64; 4];
        for _ in 0..10_000 {
            c[ts_a_select(&q, &a, &mut rng).unwrap()] += 1e-4;
        }
        assert!((c[1] - 2.0 / 6.0).abs() < 0.02 && (c[3] - 4.0 / 6.0).abs() < 0.02);
        assert_eq!(c[0] + c[2], 0.0);
        assert_eq!(ts_a_select(&q, &AdmissibleSet { doses: vec![2] }, &mut rng), Some(2));
        assert_eq!(ts_a_select(&q, &AdmissibleSet::default(), &mut rng), None);
        assert_eq!(ts_a_select(&[0.0, 1.0], &AdmissibleSet { doses: vec![0] }, &mut rng), None);
    }
}
