use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{mcmc, ChainConfig, EffDraw, EffObservations, PlateauEffSkeleton, PosteriorSampleSet};
use crate::math::{self, softplus};
use crate::{Error, Result};

/// Efficacy log-likelihood for one breakpoint `tau` (zero-based).
pub fn log_likelihood_eff(gamma0: f64, gamma1: f64, tau: usize, skeleton: &PlateauEffSkeleton, obs: &EffObservations) -> f64 {
    let mut ll = 0.0;
    for k in 0..skeleton.doses() {
        let m = obs.patients[k];
        if m == 0 {
            continue;
        }
        let e = obs.responses[k];
        let z = gamma0 + gamma1 * skeleton.effective_efficacies[k.min(tau)];
        ll += f64::from(e) * z - f64::from(m) * softplus(z);
    }
    ll
}

/// Scratch space for evaluating all breakpoints at once in O(K).
struct BreakpointScratch {
    log_p: Vec<f64>,
    log_q: Vec<f64>,
    /// Responses and non-responses at doses `>= s`.
    tail_e: Vec<f64>,
    tail_f: Vec<f64>,
}

impl BreakpointScratch {
    fn new(obs: &EffObservations) -> Self {
        let k = obs.doses();
        let mut tail_e = vec![0.0; k + 1];
        let mut tail_f = vec![0.0; k + 1];
        for s in (0..k).rev() {
            tail_e[s] = tail_e[s + 1] + f64::from(obs.responses[s]);
            tail_f[s] = tail_f[s + 1] + f64::from(obs.patients[s] - obs.responses[s]);
        }
        Self {
            log_p: vec![0.0; k],
            log_q: vec![0.0; k],
            tail_e,
            tail_f,
        }
    }

    /// Writes `ln t_s + ln L(D | γ0, γ1, s)` for every `s` into `out`.
    fn joint_log_weights(
        &mut self,
        gamma0: f64,
        gamma1: f64,
        skeleton: &PlateauEffSkeleton,
        obs: &EffObservations,
        out: &mut [f64],
    ) {
        let k = skeleton.doses();
        for j in 0..k {
            let z = gamma0 + gamma1 * skeleton.effective_efficacies[j];
            let sp = softplus(z);
            self.log_p[j] = z - sp;
            self.log_q[j] = -sp;
        }
        let mut head = 0.0;
        #[allow(clippy::needless_range_loop)]
        for s in 0..k {
            let t = skeleton.tau_prior[s];
            out[s] = if t > 0.0 {
                math::ln(t) + head + self.tail_e[s] * self.log_p[s] + self.tail_f[s] * self.log_q[s]
            } else {
                f64::NEG_INFINITY
            };
            let e = f64::from(obs.responses[s]);
            let f = f64::from(obs.patients[s] - obs.responses[s]);
            head += e * self.log_p[s] + f * self.log_q[s];
        }
    }
}

/// Conditional breakpoint distribution `P(τ = s | γ0, γ1, D)`.
pub fn breakpoint_weights(gamma0: f64, gamma1: f64, skeleton: &PlateauEffSkeleton, obs: &EffObservations) -> Vec<f64> {
    let mut scratch = BreakpointScratch::new(obs);
    let mut w = vec![0.0; skeleton.doses()];
    scratch.joint_log_weights(gamma0, gamma1, skeleton, obs, &mut w);
    math::normalize_log_weights(&mut w);
    w
}

/// Posterior draws of `(γ0, γ1)` from the breakpoint-marginalized posterior,
/// each completed with an exact draw of `τ` from its conditional.
pub fn mcmc_sample_eff<R: Rng + ?Sized>(
    skeleton: &PlateauEffSkeleton,
    obs: &EffObservations,
    config: &ChainConfig,
    rng: &mut R,
) -> Result<PosteriorSampleSet<EffDraw>> {
    config.validate()?;
    let k = skeleton.doses();
    if obs.doses() != k {
        return Err(Error::LengthMismatch {
            expected: k,
            actual: obs.doses(),
        });
    }
    let mut scratch = BreakpointScratch::new(obs);
    let mut w = vec![0.0; k];
    let prior = skeleton.prior;
    let init = [prior.intercept_mean, math::ln(prior.slope_mean())];
    let chain = mcmc::sample(
        init,
        |x: &[f64; 2]| {
            let gamma1 = math::exp(x[1]);
            scratch.joint_log_weights(x[0], gamma1, skeleton, obs, &mut w);
            prior.log_density(x[0], gamma1) + math::log_sum_exp(&w) + x[1]
        },
        config,
        rng,
    );

    let mut draws = Vec::with_capacity(chain.draws.len());
    for x in &chain.draws {
        let gamma1 = math::exp(x[1]);
        scratch.joint_log_weights(x[0], gamma1, skeleton, obs, &mut w);
        math::normalize_log_weights(&mut w);
        let tau = sample_categorical(&w, rng);
        draws.push(EffDraw {
            gamma0: x[0],
            gamma1,
            tau,
        });
    }
    Ok(PosteriorSampleSet {
        draws,
        acceptance_rate: chain.acceptance_rate,
        chain_length: config.length,
        burn_in: config.burn_in,
    })
}

/// Monte-Carlo estimate of the breakpoint posterior `t̂`, averaging the
/// conditional breakpoint distribution over the `(γ0, γ1)` draws.
pub fn breakpoint_posterior(
    samples: &PosteriorSampleSet<EffDraw>,
    skeleton: &PlateauEffSkeleton,
    obs: &EffObservations,
) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let k = skeleton.doses();
    let mut scratch = BreakpointScratch::new(obs);
    let mut w = vec![0.0; k];
    let mut acc = vec![0.0; k];
    for d in &samples.draws {
        scratch.joint_log_weights(d.gamma0, d.gamma1, skeleton, obs, &mut w);
        math::normalize_log_weights(&mut w);
        acc.iter_mut().zip(&w).for_each(|(a, x)| *a += x);
    }
    let n = samples.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

/// Draws an index with probability proportional to `weights`.
pub(crate) fn sample_categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u: f64 = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        last = i;
        if u < w {
            return i;
        }
        u -= w;
    }
    last
}
