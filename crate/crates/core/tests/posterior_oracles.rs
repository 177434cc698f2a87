//! MCMC output checked against deterministic quadrature on small problems.

use dosefind_core::bayes::{
    breakpoint_posterior, calibrate_eff_skeleton, calibrate_tox_skeleton, log_likelihood_eff, log_posterior_tox,
    mcmc_sample_eff, mcmc_sample_tox, posterior_tox_means, ChainConfig, EffObservations, LogisticPrior,
    ToxObservations,
};
use dosefind_core::RngSeed;
use rand::Rng;

fn long_chain() -> ChainConfig {
    ChainConfig {
        length: 60_000,
        burn_in: 5_000,
        ..ChainConfig::default()
    }
}

/// Midpoint rule over a bounded box; returns the normalizing mass and the
/// integrals of each function in `fs` against the unnormalized density.
fn quadrature(
    (a0, b0, n0): (f64, f64, usize),
    (a1, b1, n1): (f64, f64, usize),
    log_density: impl Fn(f64, f64) -> f64,
    fs: &[&dyn Fn(f64, f64) -> f64],
) -> (f64, Vec<f64>) {
    let h0 = (b0 - a0) / n0 as f64;
    let h1 = (b1 - a1) / n1 as f64;
    let mut grid = Vec::with_capacity(n0 * n1);
    let mut peak = f64::NEG_INFINITY;
    for i in 0..n0 {
        for j in 0..n1 {
            let x = a0 + (i as f64 + 0.5) * h0;
            let y = a1 + (j as f64 + 0.5) * h1;
            let l = log_density(x, y);
            peak = peak.max(l);
            grid.push((x, y, l));
        }
    }
    let mut mass = 0.0;
    let mut acc = vec![0.0; fs.len()];
    for &(x, y, l) in &grid {
        let w = (l - peak).exp();
        mass += w;
        for (a, f) in acc.iter_mut().zip(fs) {
            *a += w * f(x, y);
        }
    }
    (mass, acc)
}

#[test]
fn tox_intercept_mean_matches_quadrature() {
    let skel = calibrate_tox_skeleton(&[0.2, 0.4], LogisticPrior::default()).unwrap();
    let obs = ToxObservations::from_counts(vec![20, 20], vec![4, 9]).unwrap();
    let (mass, m) = quadrature(
        (-30.0, 30.0, 1200),
        (1e-6, 15.0, 1200),
        |b0, b1| log_posterior_tox(b0, b1, &skel, &obs),
        &[&|b0, _| b0, &|_, b1| b1],
    );
    let oracle_b0 = m[0] / mass;
    let oracle_b1 = m[1] / mass;

    let post = mcmc_sample_tox(&skel, &obs, &long_chain(), &mut RngSeed(11).stream(0)).unwrap();
    let n = post.len() as f64;
    let b0 = post.draws.iter().map(|d| d.beta0).sum::<f64>() / n;
    let b1 = post.draws.iter().map(|d| d.beta1).sum::<f64>() / n;
    assert!((b0 - oracle_b0).abs() < 0.05, "mcmc {b0} vs quadrature {oracle_b0}");
    assert!((b1 - oracle_b1).abs() < 0.1, "mcmc {b1} vs quadrature {oracle_b1}");
    assert!(!post.low_acceptance());
}

#[test]
fn tox_posterior_is_consistent_with_large_samples() {
    let skel = calibrate_tox_skeleton(&[0.06, 0.12, 0.20, 0.30, 0.40, 0.50], LogisticPrior::default()).unwrap();
    let truth: Vec<f64> = skel.curve(-1.0, 0.8);
    let mut rng = RngSeed(3).stream(1);
    let mut obs = ToxObservations::new(6);
    for (k, &p) in truth.iter().enumerate() {
        for _ in 0..2000 {
            obs.record(k, rng.random::<f64>() < p);
        }
    }
    let post = mcmc_sample_tox(&skel, &obs, &ChainConfig::default(), &mut RngSeed(3).stream(0)).unwrap();
    for (m, t) in posterior_tox_means(&post, &skel).iter().zip(&truth) {
        assert!((m - t).abs() < 0.03, "{m} vs {t}");
    }
}

fn eff_breakpoint_oracle(prior_eff: &[f64], obs: &EffObservations) -> Vec<f64> {
    let skel = calibrate_eff_skeleton(prior_eff, None, LogisticPrior::default()).unwrap();
    let k = prior_eff.len();
    let joint = |g0: f64, g1: f64, s: usize| skel.tau_prior[s].ln() + log_likelihood_eff(g0, g1, s, &skel, obs);
    let fs: Vec<Box<dyn Fn(f64, f64) -> f64>> = (0..k)
        .map(|s| {
            let joint = &joint;
            Box::new(move |g0: f64, g1: f64| {
                let ls: Vec<f64> = (0..k).map(|r| joint(g0, g1, r)).collect();
                let top = ls.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = ls.iter().map(|l| (l - top).exp()).sum();
                (ls[s] - top).exp() / z
            }) as Box<dyn Fn(f64, f64) -> f64>
        })
        .collect();
    let refs: Vec<&dyn Fn(f64, f64) -> f64> = fs.iter().map(|f| f.as_ref()).collect();
    let (mass, acc) = quadrature(
        (-30.0, 30.0, 900),
        (1e-6, 15.0, 900),
        |g0, g1| {
            let ls: Vec<f64> = (0..k).map(|r| joint(g0, g1, r)).collect();
            let top = ls.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = top + ls.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
            skel.prior.log_density(g0, g1) + lse
        },
        &refs,
    );
    acc.iter().map(|a| a / mass).collect()
}

#[test]
fn breakpoint_posterior_matches_quadrature() {
    let prior_eff = [0.2, 0.5];
    let skel = calibrate_eff_skeleton(&prior_eff, None, LogisticPrior::default()).unwrap();
    for (m, e) in [([10, 10], [5, 5]), ([6, 9], [1, 6]), ([12, 3], [3, 3])] {
        let obs = EffObservations::from_counts(m.to_vec(), e.to_vec()).unwrap();
        let oracle = eff_breakpoint_oracle(&prior_eff, &obs);
        let post = mcmc_sample_eff(&skel, &obs, &long_chain(), &mut RngSeed(21).stream(0)).unwrap();
        let t_hat = breakpoint_posterior(&post, &skel, &obs).unwrap();
        for (a, b) in t_hat.iter().zip(&oracle) {
            assert!((a - b).abs() < 0.02, "{t_hat:?} vs {oracle:?} for {m:?}/{e:?}");
        }
    }
}

#[test]
fn identical_efficacy_data_favours_early_plateau() {
    let prior_eff = [0.2, 0.5];
    let obs = EffObservations::from_counts(vec![15, 15], vec![6, 6]).unwrap();
    let oracle = eff_breakpoint_oracle(&prior_eff, &obs);
    assert!(oracle[0] > 0.5, "{oracle:?}");
    let skel = calibrate_eff_skeleton(&prior_eff, None, LogisticPrior::default()).unwrap();
    let post = mcmc_sample_eff(&skel, &obs, &ChainConfig::default(), &mut RngSeed(8).stream(0)).unwrap();
    let freq0 = post.draws.iter().filter(|d| d.tau == 0).count() as f64 / post.len() as f64;
    assert!(freq0 > 0.5, "{freq0}");
}
