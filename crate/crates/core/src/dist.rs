//! Log-probability kernels for the discrete distributions in the models.
//!
//! Factorials and binomial coefficients always go through log-gamma, since
//! vocalization counts run into the thousands for abundant species.

use std::sync::OnceLock;

const TABLE_LEN: usize = 4096;

fn table() -> &'static [f64; TABLE_LEN] {
    static TABLE: OnceLock<Box<[f64; TABLE_LEN]>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Box::new([0.0; TABLE_LEN]);
        for (i, slot) in t.iter_mut().enumerate() {
            *slot = libm::lgamma(i as f64 + 1.0);
        }
        t
    })
}

/// `ln(n!)`
#[inline]
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) < TABLE_LEN {
        table()[n as usize]
    } else {
        libm::lgamma(n as f64 + 1.0)
    }
}

/// `ln C(n, k)`; `-inf` when `k > n`.
#[inline]
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `x * ln(y)` with the convention `0 * ln(0) = 0`.
#[inline]
pub fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln(inv_logit(x))`
#[inline]
pub fn ln_inv_logit(x: f64) -> f64 {
    -softplus(-x)
}

pub fn poisson_lpmf(x: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return if x == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    xlogy(x as f64, mean) - mean - ln_factorial(x)
}

/// Bernoulli log-pmf parameterized by the logit of the success probability.
pub fn bernoulli_logit_lpmf(success: bool, eta: f64) -> f64 {
    if success {
        ln_inv_logit(eta)
    } else {
        ln_inv_logit(-eta)
    }
}

pub fn binomial_lpmf(x: u64, trials: u64, p: f64) -> f64 {
    if x > trials {
        return f64::NEG_INFINITY;
    }
    let xf = x as f64;
    let rest = (trials - x) as f64;
    ln_choose(trials, x) + xlogy(xf, p) + xlogy(rest, 1.0 - p)
}

/// Probability that a uniform sample of `draws` items from a pool of
/// `successes` marked and `failures` unmarked items contains exactly
/// `observed` marked ones.
pub fn hypergeometric_lpmf(observed: u64, successes: u64, failures: u64, draws: u64) -> f64 {
    if draws > successes + failures || observed > draws || observed > successes {
        return f64::NEG_INFINITY;
    }
    if draws - observed > failures {
        return f64::NEG_INFINITY;
    }
    ln_choose(successes, observed) + ln_choose(failures, draws - observed)
        - ln_choose(successes + failures, draws)
}

pub fn normal_lpdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// Numerically stable `ln(sum(exp(values)))`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
