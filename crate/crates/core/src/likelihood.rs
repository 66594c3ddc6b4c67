//! Full-data log-likelihoods and log-priors.
//!
//! These are the reference kernels: every sum runs cell by cell over the raw
//! data. The sampler keeps per-site sufficient statistics instead and is
//! tested against these functions.

use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::dist::{
    bernoulli_logit_lpmf, binomial_lpmf, hypergeometric_lpmf, normal_lpdf, poisson_lpmf,
};
use crate::model::{
    true_positive_rate, AbundanceModel, Dataset, Grid, ModelVariant, ParameterState,
};

/// A natural-log density. `-inf` marks a hard support violation; NaN never
/// appears.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LogDensity(f64);

impl LogDensity {
    pub const ZERO: LogDensity = LogDensity(0.0);
    pub const IMPOSSIBLE: LogDensity = LogDensity(f64::NEG_INFINITY);

    pub fn new(value: f64) -> Self {
        if value.is_nan() {
            log::warn!("NaN log-density mapped to -inf");
            return Self::IMPOSSIBLE;
        }
        LogDensity(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl Add for LogDensity {
    type Output = LogDensity;

    fn add(self, rhs: LogDensity) -> LogDensity {
        LogDensity::new(self.0 + rhs.0)
    }
}

impl AddAssign for LogDensity {
    fn add_assign(&mut self, rhs: LogDensity) {
        *self = *self + rhs;
    }
}

impl fmt::Display for LogDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

pub fn loglik_abundance(n: &[u32], abundance: &AbundanceModel) -> LogDensity {
    loglik_abundance_at(n, abundance, 0..n.len())
}

/// Poisson abundance term restricted to `sites`.
pub fn loglik_abundance_at(
    n: &[u32],
    abundance: &AbundanceModel,
    sites: impl IntoIterator<Item = usize>,
) -> LogDensity {
    let mut total = 0.0;
    for s in sites {
        let rate = abundance.rate(s);
        if !rate.is_finite() {
            log::debug!("non-finite expected abundance at site {s}");
            return LogDensity::IMPOSSIBLE;
        }
        total += poisson_lpmf(u64::from(n[s]), rate);
    }
    LogDensity::new(total)
}

/// Bernoulli detections with `logit(pi_i) = alpha0 + alpha1 * N_i`.
pub fn loglik_acoustic_binary(
    y: &Grid<u8>,
    n: &[u32],
    alpha0: f64,
    alpha1: f64,
    missing: &Grid<bool>,
) -> LogDensity {
    let mut total = 0.0;
    for site in 0..y.rows() {
        let eta = alpha0 + alpha1 * f64::from(n[site]);
        for survey in 0..y.cols() {
            if !missing[(site, survey)] {
                total += bernoulli_logit_lpmf(y[(site, survey)] == 1, eta);
            }
        }
    }
    LogDensity::new(total)
}

/// Poisson vocalization counts with mean `(delta * N_i + omega) * y_ij`.
pub fn loglik_vocalizations(
    v: &Grid<u32>,
    y: &Grid<u8>,
    n: &[u32],
    delta: f64,
    omega: f64,
    missing: &Grid<bool>,
) -> LogDensity {
    let mut total = 0.0;
    for site in 0..v.rows() {
        let mean = delta * f64::from(n[site]) + omega;
        for survey in 0..v.cols() {
            if missing[(site, survey)] {
                continue;
            }
            let cell_mean = if y[(site, survey)] == 1 { mean } else { 0.0 };
            total += poisson_lpmf(u64::from(v[(site, survey)]), cell_mean);
        }
    }
    LogDensity::new(total)
}

/// Latent true calls `K ~ Binomial(v, tp_i)` and validated calls
/// `k ~ Hypergeometric(K, v - K, n)`.
#[allow(clippy::too_many_arguments)]
pub fn loglik_validation(
    confirmed: &Grid<u32>,
    checked: &Grid<u32>,
    true_calls: &Grid<u32>,
    v: &Grid<u32>,
    n: &[u32],
    delta: f64,
    omega: f64,
    missing: &Grid<bool>,
) -> LogDensity {
    let mut total = 0.0;
    for site in 0..v.rows() {
        let tp = true_positive_rate(n[site], delta, omega).value;
        for survey in 0..v.cols() {
            if missing[(site, survey)] {
                continue;
            }
            total += validation_cell(
                u64::from(confirmed[(site, survey)]),
                u64::from(checked[(site, survey)]),
                u64::from(true_calls[(site, survey)]),
                u64::from(v[(site, survey)]),
                tp,
            );
        }
    }
    LogDensity::new(total)
}

/// One cell of the validation likelihood.
pub fn validation_cell(k: u64, n: u64, big_k: u64, v: u64, tp: f64) -> f64 {
    if big_k > v {
        return f64::NEG_INFINITY;
    }
    binomial_lpmf(big_k, v, tp) + hypergeometric_lpmf(k, big_k, v - big_k, n)
}

/// N-mixture counts `c_it ~ Binomial(N_site_map[i], p)`.
pub fn loglik_counts(
    c: &Grid<u32>,
    n: &[u32],
    p: f64,
    site_map: &[usize],
    missing: &Grid<bool>,
) -> LogDensity {
    let mut total = 0.0;
    for (i, &g) in site_map.iter().enumerate() {
        for t in 0..c.cols() {
            if !missing[(i, t)] {
                total += binomial_lpmf(u64::from(c[(i, t)]), u64::from(n[g]), p);
            }
        }
    }
    LogDensity::new(total)
}

/// A univariate prior. Bounds are hard: the log-density is `-inf` outside
/// `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Prior {
    Uniform { lower: f64, upper: f64 },
    Normal { mean: f64, sd: f64, lower: f64, upper: f64 },
}

impl Prior {
    pub fn uniform(lower: f64, upper: f64) -> Self {
        Prior::Uniform { lower, upper }
    }

    /// Normal prior given by its variance.
    pub fn normal_var(mean: f64, variance: f64) -> Self {
        Prior::Normal {
            mean,
            sd: variance.sqrt(),
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Prior::Uniform { lower, upper } | Prior::Normal { lower, upper, .. } => (lower, upper),
        }
    }

    /// Unnormalized inside truncation bounds for the normal family; the
    /// normalizing constant cancels in every use.
    pub fn ln_density(&self, x: f64) -> f64 {
        let (lower, upper) = self.bounds();
        if !(x >= lower && x <= upper) {
            return f64::NEG_INFINITY;
        }
        match *self {
            Prior::Uniform { lower, upper } => -(upper - lower).ln(),
            Prior::Normal { mean, sd, .. } => normal_lpdf(x, mean, sd),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Priors {
    pub alpha0: Prior,
    pub alpha1: Prior,
    pub delta: Prior,
    pub omega: Prior,
    pub p: Prior,
    pub lambda: Prior,
    pub beta0: Prior,
    pub beta1: Prior,
}

impl Default for Priors {
    /// Vague priors: uniform(0, 1000) on rates and the detection slope,
    /// normal with variance 100 on logit and log-link intercepts.
    fn default() -> Self {
        Self {
            alpha0: Prior::normal_var(0.0, 100.0),
            alpha1: Prior::uniform(0.0, 1000.0),
            delta: Prior::uniform(0.0, 1000.0),
            omega: Prior::uniform(0.0, 1000.0),
            p: Prior::uniform(0.0, 1.0),
            lambda: Prior::uniform(0.0, 1000.0),
            beta0: Prior::normal_var(0.0, 100.0),
            beta1: Prior::normal_var(0.0, 100.0),
        }
    }
}

impl Priors {
    /// Priors restricted to the ranges the sampler initializes from. Used for
    /// calibration studies, where truths are drawn from the prior itself.
    pub fn truncated() -> Self {
        Self {
            alpha0: Prior::Normal {
                mean: 0.0,
                sd: 10.0,
                lower: -5.0,
                upper: 0.0,
            },
            alpha1: Prior::uniform(0.0, 5.0),
            delta: Prior::uniform(0.0, 20.0),
            omega: Prior::uniform(0.0, 20.0),
            lambda: Prior::uniform(0.0, 20.0),
            p: Prior::uniform(0.05, 0.95),
            ..Self::default()
        }
    }

    pub fn log_density(&self, state: &ParameterState) -> LogDensity {
        let mut total = self.alpha0.ln_density(state.alpha0)
            + self.alpha1.ln_density(state.alpha1)
            + self.delta.ln_density(state.delta)
            + self.omega.ln_density(state.omega)
            + self.p.ln_density(state.p);
        total += match &state.abundance {
            AbundanceModel::Constant { lambda } => self.lambda.ln_density(*lambda),
            AbundanceModel::LogLinear { beta0, beta1, .. } => {
                self.beta0.ln_density(*beta0) + self.beta1.ln_density(*beta1)
            }
        };
        LogDensity::new(total)
    }
}

/// Log prior under the default vague priors.
pub fn logprior(state: &ParameterState) -> LogDensity {
    Priors::default().log_density(state)
}

/// Sum of the likelihood terms `variant` switches on, over the sites that
/// variant models. Blocks the variant needs but the dataset lacks contribute
/// nothing; check with [`Dataset::blocks_for`] first.
pub fn joint_loglik(state: &ParameterState, dataset: &Dataset, variant: ModelVariant) -> LogDensity {
    let blocks = variant.blocks();
    let sites = dataset.active_sites(variant);
    let n = &state.abundance_n;
    let mut total = loglik_abundance_at(n, &state.abundance, sites.iter().copied());
    if blocks.acoustic {
        if let Some(a) = dataset.acoustic() {
            total += loglik_acoustic_binary(&a.y, n, state.alpha0, state.alpha1, &a.missing);
            total += loglik_vocalizations(&a.v, &a.y, n, state.delta, state.omega, &a.missing);
            if blocks.validation {
                if let Some(val) = dataset.validation() {
                    total += loglik_validation(
                        &val.confirmed,
                        &val.checked,
                        &state.true_calls,
                        &a.v,
                        n,
                        state.delta,
                        state.omega,
                        &a.missing,
                    );
                }
            }
        }
    }
    if blocks.counts {
        if let Some(c) = dataset.counts() {
            total += loglik_counts(&c.c, n, state.p, dataset.design().site_map(), &c.missing);
        }
    }
    total
}

/// Unnormalized log posterior: joint likelihood plus log prior.
pub fn log_posterior(
    state: &ParameterState,
    dataset: &Dataset,
    variant: ModelVariant,
    priors: &Priors,
) -> LogDensity {
    let prior = priors.log_density(state);
    if !prior.is_finite() {
        return prior;
    }
    prior + joint_loglik(state, dataset, variant)
}
