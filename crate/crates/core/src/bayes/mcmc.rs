//! Adaptive component-wise random-walk Metropolis-Hastings.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use super::ChainConfig;
use crate::math;

pub(crate) struct Chain<const D: usize> {
    pub draws: Vec<[f64; D]>,
    pub acceptance_rate: f64,
}

const MIN_LOG_SCALE: f64 = -12.0;
const MAX_LOG_SCALE: f64 = 4.0;

/// Runs a chain on an unconstrained `D`-dimensional target.
///
/// Each iteration updates the coordinates one at a time with Gaussian
/// proposals. During burn-in each coordinate's log step size follows a
/// Robbins-Monro recursion toward the target acceptance rate; the step sizes
/// are frozen afterwards so the kept draws come from a fixed kernel.
pub(crate) fn sample<const D: usize, R, F>(
    init: [f64; D],
    mut log_target: F,
    config: &ChainConfig,
    rng: &mut R,
) -> Chain<D>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64; D]) -> f64,
{
    let mut x = init;
    let mut lp = log_target(&x);
    let mut log_scale = [0.0f64; D];
    let mut accepted = 0usize;
    let mut proposed = 0usize;
    let kept = (config.length - config.burn_in).div_ceil(config.thin);
    let mut draws = Vec::with_capacity(kept);

    for iter in 0..config.length {
        let adapting = iter < config.burn_in;
        for j in 0..D {
            let z: f64 = rng.sample(StandardNormal);
            let mut y = x;
            y[j] += math::exp(log_scale[j]) * z;
            let lq = log_target(&y);
            let u: f64 = rng.random();
            let accept = lq.is_finite() && math::ln(u) < lq - lp;
            if accept {
                x = y;
                lp = lq;
            }
            if adapting {
                let gain = 2.0 / libm::pow(iter as f64 + 1.0, 0.6);
                let a = if accept { 1.0 } else { 0.0 };
                log_scale[j] = (log_scale[j] + gain * (a - config.target_acceptance))
                    .clamp(MIN_LOG_SCALE, MAX_LOG_SCALE);
            } else {
                proposed += 1;
                accepted += usize::from(accept);
            }
        }
        if !adapting && (iter - config.burn_in).is_multiple_of(config.thin) {
            draws.push(x);
        }
    }

    Chain {
        draws,
        acceptance_rate: if proposed == 0 {
            0.0
        } else {
            accepted as f64 / proposed as f64
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RngSeed;

    #[test]
    fn recovers_a_correlated_gaussian() {
        // N(mean=(1, -2), sd=(0.5, 3)), independent coordinates
        let cfg = ChainConfig {
            length: 40_000,
            burn_in: 4_000,
            ..ChainConfig::default()
        };
        let mut rng = RngSeed(11).stream(0);
        let chain = sample(
            [0.0, 0.0],
            |x: &[f64; 2]| {
                let a = (x[0] - 1.0) / 0.5;
                let b = (x[1] + 2.0) / 3.0;
                -0.5 * (a * a + b * b)
            },
            &cfg,
            &mut rng,
        );
        let n = chain.draws.len() as f64;
        let m0 = chain.draws.iter().map(|d| d[0]).sum::<f64>() / n;
        let m1 = chain.draws.iter().map(|d| d[1]).sum::<f64>() / n;
        let v1 = chain.draws.iter().map(|d| (d[1] - m1).powi(2)).sum::<f64>() / n;
        assert!((m0 - 1.0).abs() < 0.05, "{m0}");
        assert!((m1 + 2.0).abs() < 0.25, "{m1}");
        assert!((v1.sqrt() - 3.0).abs() < 0.25, "{v1}");
        assert!(chain.acceptance_rate > 0.2 && chain.acceptance_rate < 0.45);
    }
}
