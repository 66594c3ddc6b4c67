//! Single-chain Metropolis-within-Gibbs updates.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::target::{ChainState, Conditional, Param, Posterior};
use crate::error::{Error, Result};
use crate::model::{true_positive_rate, Grid, ParameterState};
use crate::rng::StreamRng;

const INIT_ATTEMPTS: usize = 1000;
/// Rounds of redrawing starting abundances from their conditionals.
const INIT_PASSES: usize = 3;
const MAX_N_WIDTH: f64 = 1000.0;
const INITIAL_STEP: f64 = 0.25;
/// Adaptation-phase states needed before the joint block uses their covariance.
const BLOCK_MIN_SAMPLES: f64 = 100.0;
/// Acceptance the joint block adapts towards.
const BLOCK_TARGET: f64 = 0.234;

/// Robbins-Monro step on a log scale parameter.
fn adapt(log_scale: &mut f64, accepted: bool, target: f64, visits: u64) {
    let gain = 1.0 / (1.0 + visits as f64).powf(0.6);
    *log_scale += gain * (f64::from(u8::from(accepted)) - target);
}

/// Acceptance tallies for one block.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Tally {
    pub proposed: u64,
    pub accepted: u64,
}

impl Tally {
    fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += u64::from(accepted);
    }

    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// One chain's state plus its proposal scales.
#[derive(Debug, Clone)]
pub struct Chain<'p> {
    posterior: &'p Posterior,
    state: ChainState,
    target_accept: f64,
    /// Log of the random-walk scale for each scalar, on its transformed scale.
    log_steps: Vec<f64>,
    step_visits: Vec<u64>,
    /// Log of the maximum abundance jump per global site.
    log_widths: Vec<f64>,
    width_visits: Vec<u64>,
    pub(crate) scalar_tally: Vec<Tally>,
    pub(crate) n_tally: Tally,
    detection: Option<DetectionBlock>,
    scale: ScaleMove,
    block: MarginalBlock,
    /// Abundance conditionals at the current state, valid only between
    /// consecutive marginal moves.
    cached: Option<Vec<Conditional>>,
}

#[derive(Debug, Clone)]
struct ScaleMove {
    log_step: f64,
    visits: u64,
    tally: Tally,
}

/// Adaptive Gaussian block proposal for `(alpha0, ln alpha1)`, whose
/// posterior is strongly correlated. The covariance is estimated from the
/// adaptation-phase states and frozen afterwards.
#[derive(Debug, Clone)]
struct DetectionBlock {
    count: f64,
    mean: [f64; 2],
    /// Running sums of squared deviations: xx, xy, yy.
    m2: [f64; 3],
    log_scale: f64,
    visits: u64,
    tally: Tally,
}

impl DetectionBlock {
    fn new() -> Self {
        Self {
            count: 0.0,
            mean: [0.0; 2],
            m2: [0.0; 3],
            // 2.38 / sqrt(2)
            log_scale: 1.68f64.ln(),
            visits: 0,
            tally: Tally::default(),
        }
    }

    fn observe(&mut self, z: [f64; 2]) {
        self.count += 1.0;
        let d0 = z[0] - self.mean[0];
        let d1 = z[1] - self.mean[1];
        self.mean[0] += d0 / self.count;
        self.mean[1] += d1 / self.count;
        self.m2[0] += d0 * (z[0] - self.mean[0]);
        self.m2[1] += d0 * (z[1] - self.mean[1]);
        self.m2[2] += d1 * (z[1] - self.mean[1]);
    }

    /// Lower Cholesky factor of the proposal covariance.
    fn cholesky(&self) -> [f64; 3] {
        let (xx, xy, yy) = if self.count < 50.0 {
            (0.01, 0.0, 0.01)
        } else {
            let n = self.count - 1.0;
            (self.m2[0] / n + 1e-6, self.m2[1] / n, self.m2[2] / n + 1e-6)
        };
        let scale = (2.0 * self.log_scale).exp();
        let (xx, xy, yy) = (scale * xx, scale * xy, scale * yy);
        let l00 = xx.sqrt();
        let l10 = xy / l00;
        let l11 = (yy - l10 * l10).max(1e-12).sqrt();
        [l00, l10, l11]
    }
}

/// Draws an abundance from an enumerated conditional.
fn draw_conditional((lo, logs, z): &Conditional, rng: &mut StreamRng) -> u32 {
    let u = rng.random::<f64>();
    let mut acc = 0.0;
    for (i, l) in logs.iter().enumerate() {
        acc += (l - z).exp();
        if u < acc {
            return lo + i as u32;
        }
    }
    lo + (logs.len() - 1) as u32
}

/// Adaptive Gaussian proposal over every transformed scalar, with the
/// covariance estimated from adaptation-phase states.
#[derive(Debug, Clone)]
struct MarginalBlock {
    count: f64,
    mean: Vec<f64>,
    m2: Vec<Vec<f64>>,
    log_scale: f64,
    visits: u64,
    tally: Tally,
}

impl MarginalBlock {
    fn new(d: usize) -> Self {
        Self {
            count: 0.0,
            mean: vec![0.0; d],
            m2: vec![vec![0.0; d]; d],
            log_scale: (2.38 / (d.max(1) as f64).sqrt()).ln(),
            visits: 0,
            tally: Tally::default(),
        }
    }

    fn observe(&mut self, z: &[f64]) {
        self.count += 1.0;
        let before: Vec<f64> = z.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        for (m, d) in self.mean.iter_mut().zip(&before) {
            *m += d / self.count;
        }
        for (row, b) in self.m2.iter_mut().zip(&before) {
            for ((cell, x), m) in row.iter_mut().zip(z).zip(&self.mean) {
                *cell += b * (x - m);
            }
        }
    }

    /// Lower Cholesky factor of the scaled proposal covariance.
    fn cholesky(&self) -> Vec<Vec<f64>> {
        let d = self.mean.len();
        let scale = (2.0 * self.log_scale).exp();
        let cov = |i: usize, j: usize| {
            let c = if self.count < BLOCK_MIN_SAMPLES {
                if i == j { 0.01 } else { 0.0 }
            } else {
                self.m2[i][j] / (self.count - 1.0) + if i == j { 1e-6 } else { 0.0 }
            };
            scale * c
        };
        let mut l = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in 0..=i {
                let sum: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
                if i == j {
                    l[i][i] = (cov(i, i) - sum).max(1e-12).sqrt();
                } else {
                    l[i][j] = (cov(i, j) - sum) / l[j][j];
                }
            }
        }
        l
    }
}

impl<'p> Chain<'p> {
    pub fn new(posterior: &'p Posterior, state: ChainState, target_accept: f64, initial_width: u32) -> Self {
        let g = state.state.abundance_n.len();
        let k = posterior.params().len();
        Self {
            posterior,
            state,
            target_accept,
            log_steps: vec![INITIAL_STEP.ln(); k],
            step_visits: vec![0; k],
            log_widths: vec![f64::from(initial_width.max(1)).ln(); g],
            width_visits: vec![0; g],
            scalar_tally: vec![Tally::default(); k],
            n_tally: Tally::default(),
            detection: posterior.params().contains(&Param::Alpha1).then(DetectionBlock::new),
            scale: ScaleMove {
                log_step: (0.2 * INITIAL_STEP).ln(),
                visits: 0,
                tally: Tally::default(),
            },
            block: MarginalBlock::new(k),
            cached: None,
        }
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn log_density(&self) -> f64 {
        self.posterior.log_density(&self.state)
    }

    pub(crate) fn reset_tallies(&mut self) {
        self.scalar_tally.iter_mut().for_each(|t| *t = Tally::default());
        self.n_tally = Tally::default();
        if let Some(b) = &mut self.detection {
            b.tally = Tally::default();
        }
        self.scale.tally = Tally::default();
        self.block.tally = Tally::default();
    }

    /// Post-adaptation acceptance rate of the joint marginal block.
    pub(crate) fn block_rate(&self) -> f64 {
        self.block.tally.rate()
    }

    /// Post-adaptation acceptance rate of the scale move.
    pub(crate) fn scale_rate(&self) -> f64 {
        self.scale.tally.rate()
    }

    /// Post-adaptation acceptance rate of the detection block move.
    pub(crate) fn detection_rate(&self) -> Option<f64> {
        self.detection.as_ref().map(|b| b.tally.rate())
    }

    /// Joint move of the detection coefficients with abundances summed out.
    fn update_detection(&mut self, rng: &mut StreamRng, adapting: bool) -> Result<()> {
        let Some(block) = &self.detection else { return Ok(()) };
        let l = block.cholesky();
        let (e0, e1) = (standard_normal(rng), standard_normal(rng));
        let s = &self.state.state;
        let a0 = s.alpha0 + l[0] * e0;
        let a1 = (s.alpha1.ln() + l[1] * e0 + l[2] * e1).exp();
        let jacobian = Param::Alpha1.transform().ln_jacobian(a1) - Param::Alpha1.transform().ln_jacobian(s.alpha1);
        let accepted = self.marginal_step(&[(Param::Alpha0, a0), (Param::Alpha1, a1)], jacobian, rng)?;
        let z = [self.state.state.alpha0, self.state.state.alpha1.ln()];
        let target = self.target_accept;
        let block = self.detection.as_mut().expect("checked above");
        if adapting {
            block.visits += 1;
            adapt(&mut block.log_scale, accepted, target, block.visits);
            block.log_scale = block.log_scale.clamp(-10.0, 3.0);
            block.observe(z);
        }
        block.tally.record(accepted);
        Ok(())
    }

    /// Log acceptance ratio of moving `N_site` to `proposed`. The proposal is
    /// symmetric, so this is the log posterior difference.
    pub fn log_ratio_n(&self, site: usize, proposed: u32) -> f64 {
        let current = self.state.state.abundance_n[site];
        let new = self.posterior.site_loglik(&self.state, site, proposed);
        if new == f64::NEG_INFINITY {
            return new;
        }
        new - self.posterior.site_loglik(&self.state, site, current)
    }

    /// Log acceptance ratio of moving `param` to `value`, including the
    /// Jacobian of the random-walk scale.
    pub fn log_ratio_scalar(&self, param: Param, value: f64) -> f64 {
        let current = param.get(&self.state.state);
        let prior_new = self.posterior.prior_term(param, value);
        if prior_new == f64::NEG_INFINITY || !value.is_finite() {
            return f64::NEG_INFINITY;
        }
        let lik_new = self.posterior.scalar_loglik(&self.state, param, value);
        if lik_new == f64::NEG_INFINITY || lik_new.is_nan() {
            return f64::NEG_INFINITY;
        }
        prior_new + lik_new
            - self.posterior.prior_term(param, current)
            - self.posterior.scalar_loglik(&self.state, param, current)
    }

    /// Scalars after the scale move with log factor `eps`, with the log
    /// Jacobian of that map on the natural scale.
    fn scaled_scalars(&self, eps: f64) -> (Vec<(Param, f64)>, f64) {
        let s = &self.state.state;
        let mut changes = Vec::new();
        let mut jacobian = 0.0;
        for (param, sign) in self.posterior.scale_params() {
            let old = param.get(s);
            if param == Param::Beta0 {
                changes.push((param, old + eps));
            } else {
                changes.push((param, old * (sign * eps).exp()));
                jacobian += sign * eps;
            }
        }
        (changes, jacobian)
    }

    /// Log acceptance ratio of moving the scalars to `values` with every
    /// abundance summed out, and the proposed state before abundances are
    /// redrawn. `ln_jacobian` belongs to the proposal map. Abundances outside
    /// the enumerated range of the current state make the reverse move
    /// impossible and reject.
    pub fn marginal_proposal(&self, values: &[(Param, f64)], ln_jacobian: f64) -> (ChainState, Vec<Conditional>, f64) {
        match self.current_conditionals() {
            Some(old) => self.marginal_proposal_from(&old, values, ln_jacobian),
            None => (self.state.clone(), Vec::new(), f64::NEG_INFINITY),
        }
    }

    /// Enumerated abundance conditionals of every active site at the
    /// current state.
    fn current_conditionals(&self) -> Option<Vec<Conditional>> {
        let post = self.posterior;
        let mut out = Vec::with_capacity(post.sites().len());
        for &site in post.sites() {
            let cond = post.abundance_conditional(&self.state, site)?;
            let n = self.state.state.abundance_n[site];
            if n < cond.0 || (n - cond.0) as usize >= cond.1.len() {
                return None;
            }
            out.push(cond);
        }
        Some(out)
    }

    fn marginal_proposal_from(
        &self,
        old: &[Conditional],
        values: &[(Param, f64)],
        ln_jacobian: f64,
    ) -> (ChainState, Vec<Conditional>, f64) {
        let post = self.posterior;
        let mut ratio = ln_jacobian;
        let mut prop = self.state.clone();
        for &(param, value) in values {
            let prior_new = post.prior_ln(param, value);
            if prior_new == f64::NEG_INFINITY || !value.is_finite() {
                return (prop, Vec::new(), f64::NEG_INFINITY);
            }
            ratio += prior_new - post.prior_ln(param, param.get(&self.state.state));
            param.set(&mut prop.state, value);
        }
        for &site in post.sites() {
            prop.rates[site] = prop.state.abundance.rate(site);
        }
        let mut conditionals = Vec::with_capacity(post.sites().len());
        for (&site, old) in post.sites().iter().zip(old) {
            let Some(new) = post.abundance_conditional(&prop, site) else {
                return (prop, Vec::new(), f64::NEG_INFINITY);
            };
            ratio += new.2 - old.2;
            conditionals.push(new);
        }
        (prop, conditionals, ratio)
    }

    /// Runs a marginal move to `values`, reusing the current conditionals
    /// when an earlier marginal move left them valid.
    fn marginal_step(&mut self, values: &[(Param, f64)], ln_jacobian: f64, rng: &mut StreamRng) -> Result<bool> {
        let old = match self.cached.take() {
            Some(c) => c,
            None => match self.current_conditionals() {
                Some(c) => c,
                None => return Ok(false),
            },
        };
        let (prop, conditionals, ratio) = self.marginal_proposal_from(&old, values, ln_jacobian);
        let accepted = accept(rng, ratio);
        if accepted {
            self.take_marginal(prop, &conditionals, rng)?;
            self.cached = Some(conditionals);
        } else {
            self.cached = Some(old);
        }
        Ok(accepted)
    }

    /// Log acceptance ratio of the marginal scale move with log factor `eps`.
    pub fn marginal_scale_ratio(&self, eps: f64) -> (ChainState, Vec<Conditional>, f64) {
        let (values, jacobian) = self.scaled_scalars(eps);
        self.marginal_proposal(&values, jacobian)
    }

    /// Accepts `prop` with abundances drawn from `conditionals` and latent
    /// true calls from theirs given the new abundances.
    fn take_marginal(&mut self, mut prop: ChainState, conditionals: &[Conditional], rng: &mut StreamRng) -> Result<()> {
        for (&site, cond) in self.posterior.sites().iter().zip(conditionals) {
            prop.state.abundance_n[site] = draw_conditional(cond, rng);
        }
        self.state = prop;
        for c in 0..self.posterior.cells().len() {
            self.update_k(c, rng)?;
        }
        Ok(())
    }

    /// Adaptive Gaussian random walk on all transformed scalars at once with
    /// abundances summed out.
    fn update_block(&mut self, rng: &mut StreamRng, adapting: bool) -> Result<()> {
        let params = self.posterior.params();
        let s = &self.state.state;
        let z: Vec<f64> = params.iter().map(|p| p.transform().forward(p.get(s))).collect();
        let l = self.block.cholesky();
        let e: Vec<f64> = (0..z.len()).map(|_| standard_normal(rng)).collect();
        let mut values = Vec::with_capacity(z.len());
        let mut jacobian = 0.0;
        for (i, &p) in params.iter().enumerate() {
            let step: f64 = (0..=i).map(|j| l[i][j] * e[j]).sum();
            let tr = p.transform();
            let value = tr.inverse(z[i] + step);
            jacobian += tr.ln_jacobian(value) - tr.ln_jacobian(p.get(s));
            values.push((p, value));
        }
        let accepted = self.marginal_step(&values, jacobian, rng)?;
        let target = self.target_accept;
        let current: Vec<f64> = params
            .iter()
            .map(|p| p.transform().forward(p.get(&self.state.state)))
            .collect();
        let block = &mut self.block;
        if adapting {
            block.visits += 1;
            adapt(&mut block.log_scale, accepted, BLOCK_TARGET.min(target), block.visits);
            block.log_scale = block.log_scale.clamp(-10.0, 3.0);
            block.observe(&current);
        }
        block.tally.record(accepted);
        Ok(())
    }

    /// Joint rescaling of abundances against the parameters that multiply
    /// them, with abundances redrawn from their exact conditionals.
    fn update_scale(&mut self, rng: &mut StreamRng, adapting: bool) -> Result<()> {
        let eps = self.scale.log_step.exp() * standard_normal(rng);
        let (values, jacobian) = self.scaled_scalars(eps);
        let accepted = self.marginal_step(&values, jacobian, rng)?;
        if adapting {
            self.scale.visits += 1;
            adapt(&mut self.scale.log_step, accepted, self.target_accept, self.scale.visits);
            self.scale.log_step = self.scale.log_step.clamp(-12.0, 3.0);
        }
        self.scale.tally.record(accepted);
        Ok(())
    }

    /// Random-walk update of one site's abundance with jumps of at most the
    /// site's current width.
    pub fn update_n(&mut self, site: usize, rng: &mut StreamRng, adapting: bool) -> bool {
        let width = self.log_widths[site].exp().round().clamp(1.0, MAX_N_WIDTH) as u32;
        let step = rng.random_range(1..=width);
        let up = rng.random_bool(0.5);
        let current = self.state.state.abundance_n[site];
        let proposed = if up {
            current.checked_add(step)
        } else {
            current.checked_sub(step)
        };
        let accepted = match proposed {
            Some(n) if n >= self.posterior.min_abundance(site) => {
                let ratio = self.log_ratio_n(site, n);
                let ok = accept(rng, ratio);
                if ok {
                    self.state.state.abundance_n[site] = n;
                }
                ok
            }
            _ => false,
        };
        if adapting {
            self.width_visits[site] += 1;
            adapt(&mut self.log_widths[site], accepted, self.target_accept, self.width_visits[site]);
            self.log_widths[site] = self.log_widths[site].clamp(0.0, MAX_N_WIDTH.ln());
        }
        self.n_tally.record(accepted);
        accepted
    }

    /// Exact draw of one cell's latent true calls from its full conditional.
    pub fn update_k(&mut self, cell_index: usize, rng: &mut StreamRng) -> Result<()> {
        let cell = &self.posterior.cells()[cell_index];
        let s = &self.state.state;
        let tp = true_positive_rate(s.abundance_n[cell.site], s.delta, s.omega).value;
        let empty = Error::EmptySupport {
            site: cell.site,
            survey: cell.survey,
        };
        if (tp == 0.0 && cell.k > 0) || (tp == 1.0 && cell.k < cell.n) || !(0.0..=1.0).contains(&tp) {
            return Err(empty);
        }
        // Unvalidated calls are true independently with probability tp.
        let extra = Binomial::new(u64::from(cell.v - cell.n), tp).map_err(|_| empty)?.sample(rng);
        let pick = extra as u32;
        let new = cell.lower() + pick;
        let old = std::mem::replace(&mut self.state.state.true_calls[(cell.site, cell.survey)], new);
        let sum = &mut self.state.true_sums[cell.site];
        *sum = *sum - u64::from(old) + u64::from(new);
        Ok(())
    }

    /// One-at-a-time random-walk updates of every estimated scalar.
    pub fn update_scalars(&mut self, rng: &mut StreamRng, adapting: bool) {
        for i in 0..self.posterior.params().len() {
            let param = self.posterior.params()[i];
            let tr = param.transform();
            let current = param.get(&self.state.state);
            let z = tr.forward(current) + self.log_steps[i].exp() * standard_normal(rng);
            let value = tr.inverse(z);
            let ratio = self.log_ratio_scalar(param, value);
            let accepted = accept(rng, ratio);
            if accepted {
                param.set(&mut self.state.state, value);
                if matches!(param, Param::Lambda | Param::Beta0 | Param::Beta1) {
                    self.refresh_rates();
                }
            }
            if adapting {
                self.step_visits[i] += 1;
                adapt(&mut self.log_steps[i], accepted, self.target_accept, self.step_visits[i]);
                self.log_steps[i] = self.log_steps[i].clamp(-12.0, 3.0);
            }
            self.scalar_tally[i].record(accepted);
        }
    }

    fn refresh_rates(&mut self) {
        for &site in self.posterior.sites() {
            self.state.rates[site] = self.state.state.abundance.rate(site);
        }
    }

    /// Abundances, then latent true calls, then scalars.
    pub fn sweep(&mut self, rng: &mut StreamRng, adapting: bool) -> Result<()> {
        self.cached = None;
        for i in 0..self.posterior.sites().len() {
            let site = self.posterior.sites()[i];
            self.update_n(site, rng, adapting);
        }
        for c in 0..self.posterior.cells().len() {
            self.update_k(c, rng)?;
        }
        self.update_scalars(rng, adapting);
        self.update_scale(rng, adapting)?;
        self.update_block(rng, adapting)?;
        self.update_detection(rng, adapting)?;
        self.cached = None;
        Ok(())
    }
}

fn accept(rng: &mut StreamRng, log_ratio: f64) -> bool {
    if log_ratio.is_nan() || log_ratio == f64::NEG_INFINITY {
        return false;
    }
    log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio
}

fn standard_normal(rng: &mut StreamRng) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

/// Draws a starting state with finite log posterior.
///
/// Scalars are drawn uniformly over moderate ranges clipped to the prior
/// support, which spreads chains out for convergence diagnostics. Abundances
/// start at the largest observed count (one more than the largest detection
/// indicator at acoustic-only sites) and are then redrawn a few times from
/// their full conditionals given the drawn scalars.
pub fn initialize(posterior: &Posterior, rng: &mut StreamRng) -> Result<ChainState> {
    let ds = posterior.dataset();
    let design = ds.design();
    let g = design.num_global_sites();
    let mut n0 = vec![0u32; g];
    for &site in posterior.sites() {
        let mut n = posterior.min_abundance(site);
        if design.is_acoustic(site) {
            if let Some(a) = ds.acoustic() {
                let max_y = (0..design.acoustic_surveys())
                    .filter(|&j| a.is_observed(site, j))
                    .map(|j| u32::from(a.y[(site, j)]))
                    .max()
                    .unwrap_or(0);
                let counted = design.count_index(site).is_some() && posterior.min_abundance(site) > 0;
                if !counted {
                    n = n.max(1 + max_y);
                }
            }
        }
        if posterior.cells().iter().any(|c| c.site == site && c.k > 0) {
            n = n.max(1);
        }
        if let Some(cap) = posterior.cap() {
            if posterior.min_abundance(site) > cap {
                return Err(Error::Initialization {
                    attempts: 0,
                    component: format!("abundance cap {cap} is below the largest count at site {site}"),
                });
            }
            n = n.min(cap);
        }
        n0[site] = n;
    }

    let mean_n = if posterior.sites().is_empty() {
        1.0
    } else {
        posterior.sites().iter().map(|&s| f64::from(n0[s])).sum::<f64>() / posterior.sites().len() as f64
    };
    let priors = posterior.priors();
    let mut last = String::new();
    let mut start = None;
    for _ in 0..INIT_ATTEMPTS {
        let mut draw = |lo: f64, hi: f64, prior: &crate::likelihood::Prior| {
            let (plo, phi) = prior.bounds();
            let (a, b) = (lo.max(plo), hi.min(phi));
            if a < b {
                rng.random_range(a..b)
            } else {
                0.5 * (plo + phi)
            }
        };
        let alpha0 = draw(-5.0, 0.0, &priors.alpha0);
        let alpha1 = draw(0.1, 5.0, &priors.alpha1);
        let delta = draw(0.1, 20.0, &priors.delta);
        let omega = draw(0.1, 20.0, &priors.omega);
        let p = draw(0.05, 0.95, &priors.p);
        let lambda = draw(0.1, 20.0, &priors.lambda);
        let centre = (mean_n + 0.5).ln();
        let beta0 = draw(centre - 0.5, centre + 0.5, &priors.beta0);
        let beta1 = draw(-0.5, 0.5, &priors.beta1);
        let state = ParameterState {
            abundance_n: n0.clone(),
            true_calls: guess_calls(posterior, &n0, delta, omega),
            alpha0,
            alpha1,
            delta,
            omega,
            p,
            abundance: posterior.abundance_model(lambda, beta0, beta1),
        };
        let cs = posterior.chain_state(state);
        if posterior.log_density(&cs).is_finite() {
            start = Some(cs);
            break;
        }
        last = posterior.violated_component(&cs);
    }
    let Some(mut cs) = start else {
        return Err(Error::Initialization {
            attempts: INIT_ATTEMPTS,
            component: last,
        });
    };
    for _ in 0..INIT_PASSES {
        let mut state = cs.state.clone();
        for &site in posterior.sites() {
            if let Some(cond) = posterior.abundance_conditional(&cs, site) {
                state.abundance_n[site] = draw_conditional(&cond, rng);
            }
        }
        state.true_calls = guess_calls(posterior, &state.abundance_n, state.delta, state.omega);
        let next = posterior.chain_state(state);
        if !posterior.log_density(&next).is_finite() {
            break;
        }
        cs = next;
    }
    Ok(cs)
}

/// Validated true-call counts at their expected values given abundances.
fn guess_calls(posterior: &Posterior, n: &[u32], delta: f64, omega: f64) -> Grid<u32> {
    let design = posterior.dataset().design();
    let mut true_calls = Grid::filled(design.num_acoustic_sites(), design.acoustic_surveys(), 0u32);
    for cell in posterior.cells() {
        let tp = true_positive_rate(n[cell.site], delta, omega).value;
        let guess = cell.k + (tp * f64::from(cell.v - cell.n)).round() as u32;
        true_calls[(cell.site, cell.survey)] = guess.clamp(cell.lower(), cell.upper());
    }
    true_calls
}
