use alloc::vec::Vec;

use rand::Rng;

use super::{mcmc, ChainConfig, LogisticToxSkeleton, PosteriorSampleSet, ToxDraw, ToxObservations};
use crate::math::{self, softplus};
use crate::Result;

/// Bernoulli log-likelihood of the toxicity counts under `(β0, β1)`.
pub fn log_likelihood_tox(beta0: f64, beta1: f64, skeleton: &LogisticToxSkeleton, obs: &ToxObservations) -> f64 {
    let mut ll = 0.0;
    for (k, &u) in skeleton.effective_doses.iter().enumerate() {
        let n = obs.patients[k];
        if n == 0 {
            continue;
        }
        let s = obs.toxicities[k];
        let z = beta0 + beta1 * u;
        // s ln expit(z) + (n - s) ln(1 - expit(z))
        ll += f64::from(s) * z - f64::from(n) * softplus(z);
    }
    ll
}

/// Unnormalized log posterior; `-inf` outside the slope prior's support.
pub fn log_posterior_tox(beta0: f64, beta1: f64, skeleton: &LogisticToxSkeleton, obs: &ToxObservations) -> f64 {
    if beta1 <= 0.0 {
        return f64::NEG_INFINITY;
    }
    skeleton.prior.log_density(beta0, beta1) + log_likelihood_tox(beta0, beta1, skeleton, obs)
}

/// Posterior draws of `(β0, β1)`. The slope is sampled on the log scale.
pub fn mcmc_sample_tox<R: Rng + ?Sized>(
    skeleton: &LogisticToxSkeleton,
    obs: &ToxObservations,
    config: &ChainConfig,
    rng: &mut R,
) -> Result<PosteriorSampleSet<ToxDraw>> {
    config.validate()?;
    let init = [skeleton.prior.intercept_mean, math::ln(skeleton.prior.slope_mean())];
    let chain = mcmc::sample(
        init,
        |x: &[f64; 2]| {
            let beta1 = math::exp(x[1]);
            // log-Jacobian of beta1 = e^eta
            log_posterior_tox(x[0], beta1, skeleton, obs) + x[1]
        },
        config,
        rng,
    );
    let draws: Vec<ToxDraw> = chain
        .draws
        .iter()
        .map(|x| ToxDraw {
            beta0: x[0],
            beta1: math::exp(x[1]),
        })
        .collect();
    Ok(PosteriorSampleSet {
        draws,
        acceptance_rate: chain.acceptance_rate,
        chain_length: config.length,
        burn_in: config.burn_in,
    })
}
