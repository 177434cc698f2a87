//! Scalar helpers over `libm` so the kernel builds without `std`.

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn log2(x: f64) -> f64 {
    libm::log2(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn logit(p: f64) -> f64 {
    ln(p / (1.0 - p))
}

/// Logistic function `1 / (1 + e^{-z})`.
#[inline]
pub fn expit(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + exp(-z))
    } else {
        let e = exp(z);
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + libm::log1p(exp(-z))
    } else {
        libm::log1p(exp(z))
    }
}

/// `ln(expit(z))`.
#[inline]
pub fn log_expit(z: f64) -> f64 {
    -softplus(-z)
}

/// `ln(1 - expit(z))`.
#[inline]
pub fn log1m_expit(z: f64) -> f64 {
    -softplus(z)
}

/// Max-shifted `ln Σ e^{x_i}`; `-inf` for an empty or all `-inf` slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = xs.iter().map(|&x| exp(x - max)).sum();
    max + ln(sum)
}

/// Normalizes log-weights in place into probabilities.
pub fn normalize_log_weights(ws: &mut [f64]) {
    let lse = log_sum_exp(ws);
    if lse == f64::NEG_INFINITY {
        let u = 1.0 / ws.len() as f64;
        ws.iter_mut().for_each(|w| *w = u);
        return;
    }
    for w in ws.iter_mut() {
        *w = exp(*w - lse);
    }
}

/// Distances closer than this are treated as ties, so that decimal inputs
/// such as `0.25` and `0.35` around `0.30` tie despite binary rounding.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// Index of the smallest `|x - target|`, ties to the smallest index.
pub fn argmin_distance(xs: &[f64], target: f64) -> usize {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (i, &x) in xs.iter().enumerate() {
        let d = libm::fabs(x - target);
        if d < best_dist - TIE_TOLERANCE {
            best = i;
            best_dist = d;
        }
    }
    best
}

/// Index of the largest element, ties to the smallest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
