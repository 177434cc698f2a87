//! Numerical kernel: binary KL divergence, optimal-dose identification and
//! the computable constants of the allocation and error bounds.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{self, abs, TIE_TOLERANCE};
use crate::{Error, Result};

/// Target toxicity probability, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Threshold(f64);

impl Threshold {
    pub fn new(theta: f64) -> Result<Self> {
        if theta > 0.0 && theta < 1.0 {
            Ok(Self(theta))
        } else {
            Err(Error::InvalidThreshold(theta))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Threshold {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Threshold> for f64 {
    fn from(t: Threshold) -> f64 {
        t.0
    }
}

/// Per-dose toxicity probabilities `p_1..p_K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToxicityVector {
    probs: Vec<f64>,
    assume_increasing: bool,
}

impl ToxicityVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_probabilities(&probs)?;
        if probs.len() < 2 {
            return Err(Error::TooFewDoses(probs.len()));
        }
        Ok(Self {
            probs,
            assume_increasing: false,
        })
    }

    /// A structured scenario: toxicity must be nondecreasing in the dose.
    pub fn increasing(probs: Vec<f64>) -> Result<Self> {
        let mut v = Self::new(probs)?;
        if v.probs.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidSkeleton);
        }
        v.assume_increasing = true;
        Ok(v)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn assume_increasing(&self) -> bool {
        self.assume_increasing
    }
}

impl core::ops::Deref for ToxicityVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.probs
    }
}

pub(crate) fn check_probabilities(ps: &[f64]) -> Result<()> {
    match ps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        Some(&p) => Err(Error::NotAProbability(p)),
        None => Ok(()),
    }
}

/// Binary Kullback-Leibler divergence `kl(x, y)` between Bernoulli means.
///
/// Uses `0 ln 0 = 0` and returns `+inf` when `y` is 0 or 1 and `x != y`.
pub fn binary_kl(x: f64, y: f64) -> Result<f64> {
    check_probabilities(&[x, y])?;
    if x == y {
        return Ok(0.0);
    }
    if y == 0.0 || y == 1.0 {
        return Ok(f64::INFINITY);
    }
    let a = if x > 0.0 { x * math::ln(x / y) } else { 0.0 };
    let b = if x < 1.0 {
        (1.0 - x) * math::ln((1.0 - x) / (1.0 - y))
    } else {
        0.0
    };
    // rounding can push tiny divergences below zero
    Ok((a + b).max(0.0))
}

/// Dose whose toxicity is closest to the threshold (smallest index on ties).
pub fn mtd_index(p: &[f64], theta: Threshold) -> usize {
    math::argmin_distance(p, theta.value())
}

/// Proxy optimal toxicity `d*_k` for a suboptimal dose: the MTD's toxicity
/// or its mirror image about the threshold, whichever is closer to `p_k`.
pub fn proxy_dose(p: &[f64], theta: Threshold, k: usize) -> Result<f64> {
    if k >= p.len() {
        return Err(Error::DoseOutOfRange(k));
    }
    let star = mtd_index(p, theta);
    if k == star {
        return Err(Error::OptimalDose(k));
    }
    let p_star = p[star];
    let mirror = 2.0 * theta.value() - p_star;
    if abs(p[k] - mirror) < abs(p[k] - p_star) - TIE_TOLERANCE {
        Ok(mirror)
    } else {
        Ok(p_star)
    }
}

/// `1 / kl(p_k, d)`, infinite when the divergence vanishes.
pub fn inverse_kl(p_k: f64, d: f64) -> Result<f64> {
    let kl = binary_kl(p_k, d)?;
    Ok(if kl == 0.0 { f64::INFINITY } else { 1.0 / kl })
}

fn check_no_tie(p: &[f64], theta: Threshold, k: usize) -> Result<usize> {
    if k >= p.len() {
        return Err(Error::DoseOutOfRange(k));
    }
    let star = mtd_index(p, theta);
    let t = theta.value();
    if k == star {
        return Err(Error::OptimalDose(k));
    }
    if abs(abs(t - p[k]) - abs(t - p[star])) <= TIE_TOLERANCE {
        return Err(Error::DistanceTie(k));
    }
    Ok(star)
}

/// Constant `1 / kl(p_k, d*_k)` in front of `log n` in the allocation bound
/// for a dose that does not tie the MTD's distance to the threshold.
pub fn allocation_constant(p: &[f64], theta: Threshold, k: usize) -> Result<f64> {
    check_no_tie(p, theta, k)?;
    inverse_kl(p[k], proxy_dose(p, theta, k)?)
}

/// Asymptotic lower bound constant on `E[N_k(n)] / log n` for uniformly
/// efficient designs. Undefined on distance ties and when `p_{k*} = θ`.
pub fn lower_bound_constant(p: &[f64], theta: Threshold, k: usize) -> Result<f64> {
    let star = check_no_tie(p, theta, k)?;
    if abs(p[star] - theta.value()) <= TIE_TOLERANCE {
        return Err(Error::OptimalOnThreshold);
    }
    inverse_kl(p[k], proxy_dose(p, theta, k)?)
}

/// Minimal effective dose: among doses with toxicity at most `θ`, the
/// smallest one attaining the maximal efficacy. `None` if no dose qualifies.
pub fn med_index(tox: &[f64], eff: &[f64], theta: f64) -> Result<Option<usize>> {
    if tox.len() != eff.len() {
        return Err(Error::LengthMismatch {
            expected: tox.len(),
            actual: eff.len(),
        });
    }
    Ok(med_unchecked(tox, eff, theta))
}

#[inline]
pub(crate) fn med_unchecked(tox: &[f64], eff: &[f64], theta: f64) -> Option<usize> {
    let mut best: Option<usize> = None;
    for k in 0..tox.len() {
        if tox[k] > theta {
            continue;
        }
        match best {
            Some(b) if eff[k] <= eff[b] + TIE_TOLERANCE => {}
            _ => best = Some(k),
        }
    }
    best
}

/// Gaps to the MTD's distance and the Sequential Halving complexity `H_2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapProfile {
    pub deltas: Vec<f64>,
    pub sorted_deltas: Vec<f64>,
    pub h2: f64,
}

pub fn gap_profile(p: &[f64], theta: Threshold) -> Result<GapProfile> {
    if p.len() < 2 {
        return Err(Error::TooFewDoses(p.len()));
    }
    let t = theta.value();
    let star = mtd_index(p, theta);
    let best = abs(p[star] - t);
    let mut deltas: Vec<f64> = p.iter().map(|&pk| abs(pk - t) - best).collect();
    for (k, d) in deltas.iter_mut().enumerate() {
        if k == star {
            *d = 0.0;
        } else if *d <= TIE_TOLERANCE {
            return Err(Error::DistanceTie(k));
        }
    }
    let mut sorted_deltas = deltas.clone();
    sorted_deltas.sort_by(f64::total_cmp);
    let h2 = sorted_deltas
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, d)| (i + 1) as f64 / (d * d))
        .fold(0.0, f64::max);
    Ok(GapProfile {
        deltas,
        sorted_deltas,
        h2,
    })
}

/// Upper bound `9 log2(K) exp(-n / (8 H_2 log2 K))` on the probability that
/// Sequential Halving misidentifies the MTD. May exceed one.
pub fn sh_error_bound(h2: f64, doses: usize, budget: usize) -> f64 {
    let l = math::log2(doses as f64);
    9.0 * l * math::exp(-(budget as f64) / (8.0 * h2 * l))
}
