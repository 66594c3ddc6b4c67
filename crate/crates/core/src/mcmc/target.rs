//! Posterior with per-site sufficient statistics.
//!
//! Every Metropolis step only needs the terms that involve the quantity
//! being updated, so the data are folded into per-site summaries once and
//! each update touches O(sites) or O(surveys) numbers instead of the full
//! data matrices.

use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dist::{
    binomial_lpmf, hypergeometric_lpmf, ln_factorial, ln_inv_logit, poisson_lpmf, xlogy,
};
use crate::error::{Error, Result};
use crate::likelihood::Priors;
use crate::model::{
    true_positive_rate, AbundanceModel, ActiveBlocks, Dataset, ModelVariant, ParameterState,
};

/// Shape of the expected-abundance model being fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbundanceKind {
    Constant,
    LogLinear,
}

/// Scale on which a scalar is random-walked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Identity,
    Log,
    Logit,
}

impl Transform {
    pub fn forward(self, x: f64) -> f64 {
        match self {
            Transform::Identity => x,
            Transform::Log => x.ln(),
            Transform::Logit => (x / (1.0 - x)).ln(),
        }
    }

    pub fn inverse(self, z: f64) -> f64 {
        match self {
            Transform::Identity => z,
            Transform::Log => z.exp(),
            Transform::Logit => crate::model::inv_logit(z),
        }
    }

    /// `ln |d x / d z|` evaluated at `x`.
    pub fn ln_jacobian(self, x: f64) -> f64 {
        match self {
            Transform::Identity => 0.0,
            Transform::Log => x.ln(),
            Transform::Logit => x.ln() + (1.0 - x).ln(),
        }
    }
}

/// Scalar model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    Alpha0,
    Alpha1,
    Delta,
    Omega,
    P,
    Lambda,
    Beta0,
    Beta1,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::Alpha0 => "alpha0",
            Param::Alpha1 => "alpha1",
            Param::Delta => "delta",
            Param::Omega => "omega",
            Param::P => "p",
            Param::Lambda => "lambda",
            Param::Beta0 => "beta0",
            Param::Beta1 => "beta1",
        }
    }

    pub fn from_name(name: &str) -> Option<Param> {
        [
            Param::Alpha0,
            Param::Alpha1,
            Param::Delta,
            Param::Omega,
            Param::P,
            Param::Lambda,
            Param::Beta0,
            Param::Beta1,
        ]
        .into_iter()
        .find(|p| p.name() == name)
    }

    pub fn transform(self) -> Transform {
        match self {
            Param::Alpha0 | Param::Beta0 | Param::Beta1 => Transform::Identity,
            Param::Alpha1 | Param::Delta | Param::Omega | Param::Lambda => Transform::Log,
            Param::P => Transform::Logit,
        }
    }

    pub fn get(self, s: &ParameterState) -> f64 {
        match (self, &s.abundance) {
            (Param::Alpha0, _) => s.alpha0,
            (Param::Alpha1, _) => s.alpha1,
            (Param::Delta, _) => s.delta,
            (Param::Omega, _) => s.omega,
            (Param::P, _) => s.p,
            (Param::Lambda, AbundanceModel::Constant { lambda }) => *lambda,
            (Param::Beta0, AbundanceModel::LogLinear { beta0, .. }) => *beta0,
            (Param::Beta1, AbundanceModel::LogLinear { beta1, .. }) => *beta1,
            _ => f64::NAN,
        }
    }

    pub fn set(self, s: &mut ParameterState, value: f64) {
        match (self, &mut s.abundance) {
            (Param::Alpha0, _) => s.alpha0 = value,
            (Param::Alpha1, _) => s.alpha1 = value,
            (Param::Delta, _) => s.delta = value,
            (Param::Omega, _) => s.omega = value,
            (Param::P, _) => s.p = value,
            (Param::Lambda, AbundanceModel::Constant { lambda }) => *lambda = value,
            (Param::Beta0, AbundanceModel::LogLinear { beta0, .. }) => *beta0 = value,
            (Param::Beta1, AbundanceModel::LogLinear { beta1, .. }) => *beta1 = value,
            (p, _) => panic!("parameter {} does not belong to this abundance model", p.name()),
        }
    }

    fn prior(self, priors: &Priors) -> &crate::likelihood::Prior {
        match self {
            Param::Alpha0 => &priors.alpha0,
            Param::Alpha1 => &priors.alpha1,
            Param::Delta => &priors.delta,
            Param::Omega => &priors.omega,
            Param::P => &priors.p,
            Param::Lambda => &priors.lambda,
            Param::Beta0 => &priors.beta0,
            Param::Beta1 => &priors.beta1,
        }
    }
}

/// Scalars a variant estimates, in update order.
pub fn params_for(variant: ModelVariant, kind: AbundanceKind) -> Vec<Param> {
    let blocks = variant.blocks();
    let mut out = Vec::new();
    if blocks.acoustic {
        out.extend([Param::Alpha0, Param::Alpha1, Param::Delta, Param::Omega]);
    }
    if blocks.counts {
        out.push(Param::P);
    }
    match kind {
        AbundanceKind::Constant => out.push(Param::Lambda),
        AbundanceKind::LogLinear => out.extend([Param::Beta0, Param::Beta1]),
    }
    out
}

#[derive(Debug, Clone, Default)]
pub(crate) struct SiteInfo {
    pub acoustic: bool,
    /// Observed acoustic surveys.
    pub surveys: f64,
    /// Observed surveys with a detection.
    pub detections: f64,
    /// Sum of clustered calls over detected surveys.
    pub calls: f64,
    /// `-sum ln(v!)` over detected surveys.
    pub calls_const: f64,
    /// Latent validation cells belonging to this site.
    pub cells: Range<usize>,
    /// Sum of clustered calls over those cells.
    pub cell_calls: u64,
    /// Validated and confirmed calls summed over those cells.
    pub checked: f64,
    pub confirmed: f64,
    pub counted: bool,
    pub counts: Vec<u32>,
    pub count_sum: f64,
    /// Largest observed count; N may not go below it.
    pub count_max: u32,
}

/// Cell with latent true calls `K`, supported on `[k, v - (n - k)]`.
#[derive(Debug, Clone)]
pub struct LatentCell {
    pub site: usize,
    pub survey: usize,
    pub v: u32,
    pub n: u32,
    pub k: u32,
    /// `ln C(v, K) + ln Hypergeometric(k; K, v - K, n)` for each K in the
    /// support, starting at `K = k`.
    weights: Vec<f64>,
}

impl LatentCell {
    pub fn lower(&self) -> u32 {
        self.k
    }

    pub fn upper(&self) -> u32 {
        self.v - (self.n - self.k)
    }
}

/// A variant's posterior over a fixed dataset, ready for sampling.
#[derive(Debug, Clone)]
pub struct Posterior {
    dataset: Dataset,
    variant: ModelVariant,
    blocks: ActiveBlocks,
    priors: Priors,
    kind: AbundanceKind,
    params: Vec<Param>,
    sites: Vec<usize>,
    pub(crate) info: Vec<SiteInfo>,
    pub(crate) cells: Vec<LatentCell>,
    cap: Option<u32>,
    covariate: Option<Arc<Vec<f64>>>,
}

/// Mutable sampler state: the parameter state plus caches derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub state: ParameterState,
    /// Sum of latent true calls per global site.
    pub(crate) true_sums: Vec<u64>,
    /// Expected abundance per global site.
    pub(crate) rates: Vec<f64>,
}

impl ChainState {
    pub fn rate(&self, site: usize) -> f64 {
        self.rates[site]
    }
}

impl Posterior {
    pub fn new(
        dataset: &Dataset,
        variant: ModelVariant,
        priors: Priors,
        kind: AbundanceKind,
        cap: Option<u32>,
    ) -> Result<Self> {
        let blocks = dataset.blocks_for(variant)?;
        let covariate = match kind {
            AbundanceKind::Constant => None,
            AbundanceKind::LogLinear => Some(dataset.covariate().cloned().ok_or_else(|| {
                Error::InvalidCovariate("log-linear abundance needs a site covariate".into())
            })?),
        };
        let design = dataset.design();
        let g = design.num_global_sites();
        let mut info = vec![SiteInfo::default(); g];
        let mut cells = Vec::new();
        if blocks.acoustic {
            let a = dataset.acoustic().expect("checked by blocks_for");
            for (site, si) in info.iter_mut().enumerate().take(design.num_acoustic_sites()) {
                si.acoustic = true;
                let start = cells.len();
                for survey in 0..design.acoustic_surveys() {
                    if !a.is_observed(site, survey) {
                        continue;
                    }
                    si.surveys += 1.0;
                    if a.y[(site, survey)] == 0 {
                        continue;
                    }
                    let v = a.v[(site, survey)];
                    si.detections += 1.0;
                    si.calls += f64::from(v);
                    si.calls_const -= ln_factorial(u64::from(v));
                    if blocks.validation && v > 0 {
                        let val = dataset.validation().expect("checked by blocks_for");
                        let (n, k) = (val.checked[(site, survey)], val.confirmed[(site, survey)]);
                        let weights = (k..=v - (n - k))
                            .map(|big_k| {
                                crate::dist::ln_choose(u64::from(v), u64::from(big_k))
                                    + hypergeometric_lpmf(
                                        u64::from(k),
                                        u64::from(big_k),
                                        u64::from(v - big_k),
                                        u64::from(n),
                                    )
                            })
                            .collect();
                        si.cell_calls += u64::from(v);
                        si.checked += f64::from(n);
                        si.confirmed += f64::from(k);
                        cells.push(LatentCell {
                            site,
                            survey,
                            v,
                            n,
                            k,
                            weights,
                        });
                    }
                }
                si.cells = start..cells.len();
            }
        }
        if blocks.counts {
            let c = dataset.counts().expect("checked by blocks_for");
            for (i, &site) in design.site_map().iter().enumerate() {
                let si = &mut info[site];
                si.counted = true;
                for t in 0..design.count_surveys() {
                    if !c.missing[(i, t)] {
                        let value = c.c[(i, t)];
                        si.counts.push(value);
                        si.count_sum += f64::from(value);
                        si.count_max = si.count_max.max(value);
                    }
                }
            }
        }
        let params = params_for(variant, kind);
        Ok(Self {
            dataset: dataset.clone(),
            variant,
            blocks,
            priors,
            kind,
            params,
            sites: dataset.active_sites(variant),
            info,
            cells,
            cap,
            covariate,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn variant(&self) -> ModelVariant {
        self.variant
    }

    pub fn priors(&self) -> &Priors {
        &self.priors
    }

    pub fn kind(&self) -> AbundanceKind {
        self.kind
    }

    /// Scalars being estimated.
    pub fn params(&self) -> &[Param] {
        &self.params
    }

    /// Global sites with a latent abundance in this model.
    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn cells(&self) -> &[LatentCell] {
        &self.cells
    }

    pub fn cap(&self) -> Option<u32> {
        self.cap
    }

    /// Smallest abundance the count data allow at `site`.
    pub fn min_abundance(&self, site: usize) -> u32 {
        self.info[site].count_max
    }

    /// Wraps a parameter state, building the caches the updates rely on.
    pub fn chain_state(&self, state: ParameterState) -> ChainState {
        let mut true_sums = vec![0u64; self.info.len()];
        for cell in &self.cells {
            true_sums[cell.site] += u64::from(state.true_calls[(cell.site, cell.survey)]);
        }
        let rates = (0..self.info.len()).map(|s| state.abundance.rate(s)).collect();
        ChainState {
            state,
            true_sums,
            rates,
        }
    }

    pub(crate) fn abundance_model(&self, lambda: f64, beta0: f64, beta1: f64) -> AbundanceModel {
        match self.kind {
            AbundanceKind::Constant => AbundanceModel::Constant { lambda },
            AbundanceKind::LogLinear => AbundanceModel::LogLinear {
                beta0,
                beta1,
                covariate: self.covariate.clone().expect("checked in new"),
            },
        }
    }

    pub(crate) fn abundance_term(n: u32, rate: f64) -> f64 {
        if !rate.is_finite() {
            return f64::NEG_INFINITY;
        }
        poisson_lpmf(u64::from(n), rate)
    }

    pub(crate) fn acoustic_term(&self, site: usize, n: u32, alpha0: f64, alpha1: f64) -> f64 {
        let si = &self.info[site];
        if !si.acoustic || si.surveys == 0.0 {
            return 0.0;
        }
        let eta = alpha0 + alpha1 * f64::from(n);
        let mut out = 0.0;
        if si.detections > 0.0 {
            out += si.detections * ln_inv_logit(eta);
        }
        let misses = si.surveys - si.detections;
        if misses > 0.0 {
            out += misses * ln_inv_logit(-eta);
        }
        out
    }

    pub(crate) fn vocal_term(&self, site: usize, n: u32, delta: f64, omega: f64) -> f64 {
        let si = &self.info[site];
        if !si.acoustic || si.detections == 0.0 {
            return 0.0;
        }
        let mean = delta * f64::from(n) + omega;
        if mean == 0.0 {
            return if si.calls > 0.0 { f64::NEG_INFINITY } else { 0.0 };
        }
        si.calls * mean.ln() - si.detections * mean + si.calls_const
    }

    /// Binomial(v, tp) terms of the latent true calls, without the
    /// `ln C(v, K)` constants.
    pub(crate) fn validation_term(&self, site: usize, n: u32, delta: f64, omega: f64, true_sum: u64) -> f64 {
        let si = &self.info[site];
        if si.cells.is_empty() {
            return 0.0;
        }
        let tp = true_positive_rate(n, delta, omega).value;
        let trues = true_sum as f64;
        let falses = (si.cell_calls - true_sum) as f64;
        xlogy(trues, tp) + xlogy(falses, 1.0 - tp)
    }

    pub(crate) fn count_term(&self, site: usize, n: u32, p: f64) -> f64 {
        let si = &self.info[site];
        if !si.counted {
            return 0.0;
        }
        if n < si.count_max {
            return f64::NEG_INFINITY;
        }
        let nn = u64::from(n);
        let choose: f64 = si
            .counts
            .iter()
            .map(|&c| crate::dist::ln_choose(nn, u64::from(c)))
            .sum();
        let trials = si.counts.len() as f64 * f64::from(n);
        choose + xlogy(si.count_sum, p) + xlogy(trials - si.count_sum, 1.0 - p)
    }

    /// Every term that involves `N_site`, evaluated at `n`.
    pub(crate) fn site_loglik(&self, cs: &ChainState, site: usize, n: u32) -> f64 {
        self.site_terms(cs, site, n, false)
    }

    /// Site log-likelihood with the latent true calls summed out, under which
    /// the confirmed count of each validated cell is Binomial(checked, tp).
    /// Constants free of the abundance and scalars are dropped.
    pub(crate) fn collapsed_loglik(&self, cs: &ChainState, site: usize, n: u32) -> f64 {
        self.site_terms(cs, site, n, true)
    }

    fn site_terms(&self, cs: &ChainState, site: usize, n: u32, collapsed: bool) -> f64 {
        if let Some(cap) = self.cap {
            if n > cap {
                return f64::NEG_INFINITY;
            }
        }
        let s = &cs.state;
        let mut out = Self::abundance_term(n, cs.rates[site]);
        if self.blocks.counts {
            out += self.count_term(site, n, s.p);
        }
        if out == f64::NEG_INFINITY {
            return out;
        }
        if self.blocks.acoustic {
            out += self.acoustic_term(site, n, s.alpha0, s.alpha1);
            out += self.vocal_term(site, n, s.delta, s.omega);
            if self.blocks.validation {
                out += if collapsed {
                    let si = &self.info[site];
                    if si.cells.is_empty() {
                        0.0
                    } else {
                        let tp = true_positive_rate(n, s.delta, s.omega).value;
                        xlogy(si.confirmed, tp) + xlogy(si.checked - si.confirmed, 1.0 - tp)
                    }
                } else {
                    self.validation_term(site, n, s.delta, s.omega, cs.true_sums[site])
                };
            }
        }
        out
    }


    /// Prior plus Jacobian on the random-walk scale.
    /// Conditional of one site's abundance given the scalars in `cs`, with
    /// the latent true calls summed out, as the lower end of an enumerated window, the log weights over
    /// it and their log normalizer. Weights outside the window are below
    /// [`ENUM_DROP`] under the maximum.
    ///
    /// The conditional is log-concave in the abundance: every factor is,
    /// except the collapsed validation term, whose convex part is dominated
    /// by the call-count term since validated calls are a subset of all
    /// calls. The window therefore grows both ways from the mode.
    pub fn abundance_conditional(&self, cs: &ChainState, site: usize) -> Option<Conditional> {
        let lo = self.min_abundance(site);
        let hi = self.cap.unwrap_or(u32::MAX - 1);
        if lo > hi {
            return None;
        }
        // Each term bounds one factor's mode from above.
        let si = &self.info[site];
        let s = &cs.state;
        let mut past = f64::from(lo) + cs.rates[site] + 1.0;
        if si.acoustic && si.detections > 0.0 {
            past += si.calls / (si.detections * s.delta);
        }
        if si.counted {
            past += f64::from(si.count_max) / s.p;
        }
        let past = past.min(f64::from(hi)) as u32;
        let l = |n: u32| self.collapsed_loglik(cs, site, n);
        // First n whose successor is no better, bracketed by galloping out
        // from the current abundance. The result depends only on the
        // scalars, not on where the search starts.
        let up = |n: u32| n < hi && l(n + 1) > l(n);
        let top = past.max(lo);
        let hint = cs.state.abundance_n[site].clamp(lo, top);
        let (mut a, mut b) = if up(hint) {
            let mut step = 1;
            let mut a = hint + 1;
            loop {
                let probe = hint.saturating_add(step).min(top);
                if probe >= top || !up(probe) {
                    break (a, probe);
                }
                a = probe + 1;
                step *= 2;
            }
        } else {
            let mut step = 1;
            let mut b = hint;
            loop {
                let probe = hint.saturating_sub(step).max(lo);
                if up(probe) {
                    break (probe + 1, b);
                }
                if probe <= lo {
                    break (lo, b);
                }
                b = probe;
                step *= 2;
            }
        };
        while a < b {
            let m = a + (b - a) / 2;
            if up(m) {
                a = m + 1;
            } else {
                b = m;
            }
        }
        let best = l(a);
        if best == f64::NEG_INFINITY {
            return None;
        }
        let mut logs = Vec::new();
        let mut n = a;
        while n > lo && logs.len() < MAX_ENUM {
            n -= 1;
            let v = l(n);
            logs.push(v);
            if v < best - ENUM_DROP {
                break;
            }
        }
        let start = n;
        logs.reverse();
        logs.push(best);
        let mut n = a;
        while n < hi && logs.len() < MAX_ENUM {
            n += 1;
            let v = l(n);
            logs.push(v);
            if v < best - ENUM_DROP {
                break;
            }
        }
        let z = best + logs.iter().map(|v| (v - best).exp()).sum::<f64>().ln();
        Some((start, logs, z))
    }

    /// Prior log density of `param` on its natural scale.
    pub(crate) fn prior_ln(&self, param: Param, value: f64) -> f64 {
        param.prior(&self.priors).ln_density(value)
    }

    /// Scalars moved by the scale move with the exponent of the factor each
    /// is multiplied by. `Beta0` is shifted by the log factor instead.
    pub fn scale_params(&self) -> Vec<(Param, f64)> {
        self.params
            .iter()
            .filter_map(|&p| match p {
                Param::Lambda | Param::Beta0 => Some((p, 1.0)),
                Param::Delta | Param::Alpha1 | Param::P => Some((p, -1.0)),
                _ => None,
            })
            .collect()
    }

    pub(crate) fn prior_term(&self, param: Param, value: f64) -> f64 {
        let lp = param.prior(&self.priors).ln_density(value);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        lp + param.transform().ln_jacobian(value)
    }

    /// Sum over active sites of the likelihood terms that `param` enters,
    /// with `param` set to `value` and everything else taken from `cs`.
    pub(crate) fn scalar_loglik(&self, cs: &ChainState, param: Param, value: f64) -> f64 {
        let s = &cs.state;
        let n = &s.abundance_n;
        match param {
            Param::Alpha0 | Param::Alpha1 => {
                let (a0, a1) = if param == Param::Alpha0 {
                    (value, s.alpha1)
                } else {
                    (s.alpha0, value)
                };
                self.sites
                    .iter()
                    .map(|&site| self.acoustic_term(site, n[site], a0, a1))
                    .sum()
            }
            Param::Delta | Param::Omega => {
                let (d, o) = if param == Param::Delta {
                    (value, s.omega)
                } else {
                    (s.delta, value)
                };
                let mut total = 0.0;
                for &site in &self.sites {
                    total += self.vocal_term(site, n[site], d, o);
                    if self.blocks.validation {
                        total += self.validation_term(site, n[site], d, o, cs.true_sums[site]);
                    }
                }
                total
            }
            Param::P => {
                let (mut hits, mut trials) = (0.0, 0.0);
                for &site in &self.sites {
                    let si = &self.info[site];
                    if si.counted {
                        hits += si.count_sum;
                        trials += si.counts.len() as f64 * f64::from(n[site]);
                    }
                }
                xlogy(hits, value) + xlogy(trials - hits, 1.0 - value)
            }
            Param::Lambda => {
                let total_n: f64 = self.sites.iter().map(|&site| f64::from(n[site])).sum();
                xlogy(total_n, value) - self.sites.len() as f64 * value
            }
            Param::Beta0 | Param::Beta1 => {
                let x = self.covariate.as_ref().expect("log-linear model has a covariate");
                let (b0, b1) = match &s.abundance {
                    AbundanceModel::LogLinear { beta0, beta1, .. } if param == Param::Beta0 => (value, *beta1),
                    AbundanceModel::LogLinear { beta0, .. } => (*beta0, value),
                    AbundanceModel::Constant { .. } => unreachable!("beta on a constant model"),
                };
                let mut total = 0.0;
                for &site in &self.sites {
                    let eta = b0 + b1 * x[site];
                    let rate = eta.exp();
                    if !rate.is_finite() {
                        return f64::NEG_INFINITY;
                    }
                    total += f64::from(n[site]) * eta - rate;
                }
                total
            }
        }
    }

    /// Log posterior through the cached summaries. Equals
    /// [`crate::likelihood::log_posterior`] for states that agree with the
    /// model's active sites.
    pub fn log_density(&self, cs: &ChainState) -> f64 {
        let prior = self.priors.log_density(&cs.state).value();
        if prior == f64::NEG_INFINITY {
            return prior;
        }
        let mut total = prior;
        for &site in &self.sites {
            total += self.site_loglik(cs, site, cs.state.abundance_n[site]);
        }
        total + self.latent_constants(&cs.state)
    }

    /// `ln C(v, K)` and the hypergeometric validation terms, which depend only
    /// on the latent true calls.
    fn latent_constants(&self, s: &ParameterState) -> f64 {
        self.cells
            .iter()
            .map(|cell| {
                let big_k = s.true_calls[(cell.site, cell.survey)];
                if big_k < cell.lower() || big_k > cell.upper() {
                    f64::NEG_INFINITY
                } else {
                    cell.weights[(big_k - cell.k) as usize]
                }
            })
            .sum()
    }

    /// Which block is responsible for a `-inf` density, for diagnostics.
    pub(crate) fn violated_component(&self, cs: &ChainState) -> String {
        let s = &cs.state;
        if self.priors.log_density(s).value() == f64::NEG_INFINITY {
            return "prior".into();
        }
        if self.latent_constants(s) == f64::NEG_INFINITY {
            return "validation (latent true calls out of bounds)".into();
        }
        for &site in &self.sites {
            let n = s.abundance_n[site];
            if Self::abundance_term(n, cs.rates[site]) == f64::NEG_INFINITY {
                return format!("abundance at site {site}");
            }
            if self.blocks.counts && self.count_term(site, n, s.p) == f64::NEG_INFINITY {
                return format!("point counts at site {site}");
            }
            if self.blocks.acoustic {
                if self.vocal_term(site, n, s.delta, s.omega) == f64::NEG_INFINITY {
                    return format!("vocalizations at site {site}");
                }
                if self.blocks.validation
                    && self.validation_term(site, n, s.delta, s.omega, cs.true_sums[site]) == f64::NEG_INFINITY
                {
                    return format!("validation at site {site}");
                }
            }
            if let Some(cap) = self.cap {
                if n > cap {
                    return format!("abundance cap at site {site}");
                }
            }
        }
        "unknown".into()
    }
}

/// Exact full conditional of the latent true calls in one cell:
/// `K ~ Binomial(v, tp)` combined with the validation outcome `k` of `n`.
/// Returns the lowest supported `K` and the normalized pmf over
/// `[k, v - (n - k)]`.
/// Enumerated full conditional of one abundance: lower bound, log weights
/// and log normalizer.
pub type Conditional = (u32, Vec<f64>, f64);

/// Log weight drop below the running maximum that ends an enumeration.
const ENUM_DROP: f64 = 30.0;
const MAX_ENUM: usize = 100_000;

pub fn true_calls_conditional(v: u32, n: u32, k: u32, tp: f64) -> Option<(u32, Vec<f64>)> {
    if k > n || n > v || (tp == 0.0 && k > 0) || (tp == 1.0 && k < n) {
        return None;
    }
    // Unvalidated calls are true independently with probability tp.
    let rest = u64::from(v - n);
    let pmf = (0..=rest).map(|extra| binomial_lpmf(extra, rest, tp).exp()).collect();
    Some((k, pmf))
}

