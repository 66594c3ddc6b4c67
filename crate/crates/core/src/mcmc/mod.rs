//! Multi-chain Metropolis-within-Gibbs sampler.
//!
//! Each sweep updates, in order: every active site's abundance by a discrete
//! random walk, every validated cell's latent true-call count by an exact draw
//! from its full conditional, and every estimated scalar by a Gaussian random
//! walk on an unconstrained scale (log for rates and the detection slope,
//! logit for the count detection probability).
//!
//! Three further moves act on the scalars with every abundance summed out and
//! the latent true calls collapsed. The scale move multiplies the abundance
//! mean by a common factor and divides the vocalization rate, detection slope
//! and count detection probability by it. The joint move perturbs all
//! estimated scalars with a covariance learned during adaptation, and the
//! detection move does the same for the two detection coefficients. The
//! collapsed conditional of each abundance is log-concave, so it is
//! enumerated over a window around its mode. On acceptance the abundances
//! are drawn from their new conditionals and the latent true calls from
//! theirs.
//!
//! Each chain starts from the best of several short adapting pilot runs.
//! Proposal scales adapt only during the adaptation phase, which runs first;
//! burn-in follows with fixed scales and then draws are retained every
//! `thin` iterations.
//!
//! Chains run in parallel and each owns an independent random stream, so
//! results do not depend on the number of worker threads.

mod chain;
mod target;

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use chain::{initialize, Chain, Tally};
pub use target::{
    params_for, true_calls_conditional, AbundanceKind, ChainState, Conditional, LatentCell, Param, Posterior,
    Transform,
};

use crate::error::{Error, Result};
use crate::likelihood::Priors;
use crate::model::{Dataset, ModelVariant};
use crate::rng::{stream, Domain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcConfig {
    pub chains: usize,
    /// Total iterations per chain, adaptation and burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub adapt: usize,
    pub thin: usize,
    pub seed: u64,
    /// Acceptance rate the proposal scales adapt towards.
    pub target_accept: f64,
    /// Optional hard upper bound on site abundance.
    pub abundance_cap: Option<u32>,
    /// Starting maximum jump of the abundance random walk.
    pub initial_n_width: u32,
    /// Random starting points tried per chain. Each runs `pilot_sweeps`
    /// adapting sweeps and the one ending at the highest log posterior
    /// seeds the chain.
    pub pilot_starts: usize,
    pub pilot_sweeps: usize,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            chains: 3,
            iterations: 4000,
            burn_in: 1000,
            adapt: 1000,
            thin: 2,
            seed: 1,
            target_accept: 0.44,
            abundance_cap: None,
            initial_n_width: 3,
            pilot_starts: 4,
            pilot_sweeps: 100,
        }
    }
}

impl McmcConfig {
    /// Run length used for the published simulation study.
    pub fn full_scale() -> Self {
        Self {
            iterations: 10_000,
            burn_in: 3000,
            adapt: 5000,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.chains == 0 {
            return fail("chains must be at least 1".into());
        }
        if self.iterations == 0 {
            return fail("iterations must be at least 1".into());
        }
        if self.thin == 0 {
            return fail("thin must be at least 1".into());
        }
        if self.burn_in + self.adapt >= self.iterations {
            return fail(format!(
                "burn_in ({}) plus adapt ({}) must be less than iterations ({})",
                self.burn_in, self.adapt, self.iterations
            ));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return fail(format!("target_accept must lie in (0, 1), got {}", self.target_accept));
        }
        if self.initial_n_width == 0 {
            return fail("initial_n_width must be at least 1".into());
        }
        if self.pilot_starts == 0 {
            return fail("pilot_starts must be at least 1".into());
        }
        Ok(())
    }

    /// Draws kept per chain.
    pub fn retained(&self) -> usize {
        self.iterations.saturating_sub(self.burn_in + self.adapt) / self.thin.max(1)
    }
}

/// Retained draws from one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDraws {
    pub chain: usize,
    /// 1-based iteration number of each retained draw.
    pub iterations: Vec<usize>,
    /// One series per estimated scalar, in [`ChainOutput::params`] order.
    pub scalars: Vec<Vec<f64>>,
    /// One series per active site, in [`ChainOutput::sites`] order.
    pub abundance: Vec<Vec<u32>>,
    pub log_posterior: Vec<f64>,
    /// Post-adaptation acceptance rate per block (`N` and each scalar).
    pub acceptance: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOutput {
    pub variant: ModelVariant,
    pub kind: AbundanceKind,
    pub params: Vec<Param>,
    pub sites: Vec<usize>,
    pub chains: Vec<ChainDraws>,
    pub config: McmcConfig,
    pub priors: Priors,
    pub dataset_digest: String,
    pub config_hash: String,
}

impl ChainOutput {
    /// Per-chain draws of `param`, or `None` if it was not estimated.
    pub fn scalar(&self, param: Param) -> Option<Vec<&[f64]>> {
        let i = self.params.iter().position(|&p| p == param)?;
        Some(self.chains.iter().map(|c| c.scalars[i].as_slice()).collect())
    }

    /// Per-chain draws of total abundance over the active sites.
    pub fn total_abundance(&self) -> Vec<Vec<f64>> {
        self.chains
            .iter()
            .map(|c| {
                (0..c.iterations.len())
                    .map(|d| c.abundance.iter().map(|s| f64::from(s[d])).sum())
                    .collect()
            })
            .collect()
    }

    pub fn draws_per_chain(&self) -> usize {
        self.chains.first().map_or(0, |c| c.iterations.len())
    }
}

/// Progress notification: chain index and iterations completed.
pub type Progress = Arc<dyn Fn(usize, usize) + Send + Sync>;

#[derive(Clone)]
pub struct Sampler {
    config: McmcConfig,
    priors: Priors,
    kind: Option<AbundanceKind>,
    progress: Option<Progress>,
}

impl std::fmt::Debug for Sampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Sampler")
            .field("config", &self.config)
            .field("priors", &self.priors)
            .field("kind", &self.kind)
            .finish_non_exhaustive()
    }
}

impl Sampler {
    pub fn new(config: McmcConfig) -> Self {
        Self {
            config,
            priors: Priors::default(),
            kind: None,
            progress: None,
        }
    }

    pub fn priors(mut self, priors: Priors) -> Self {
        self.priors = priors;
        self
    }

    /// Overrides the abundance model. By default a dataset with a covariate
    /// is fitted log-linearly and one without gets a constant rate.
    pub fn abundance(mut self, kind: AbundanceKind) -> Self {
        self.kind = Some(kind);
        self
    }

    pub fn progress(mut self, progress: Progress) -> Self {
        self.progress = Some(progress);
        self
    }

    pub fn config(&self) -> &McmcConfig {
        &self.config
    }

    pub fn posterior(&self, dataset: &Dataset, variant: ModelVariant) -> Result<Posterior> {
        let kind = self.kind.unwrap_or(if dataset.covariate().is_some() {
            AbundanceKind::LogLinear
        } else {
            AbundanceKind::Constant
        });
        Posterior::new(dataset, variant, self.priors.clone(), kind, self.config.abundance_cap)
    }

    pub fn run(&self, dataset: &Dataset, variant: ModelVariant) -> Result<ChainOutput> {
        self.config.validate()?;
        let posterior = self.posterior(dataset, variant)?;
        let digest = crate::io::dataset_digest(dataset);
        let config_hash = config_hash(&self.config, &self.priors, variant, posterior.kind(), &digest);
        let chains = (0..self.config.chains)
            .into_par_iter()
            .map(|c| self.run_chain(&posterior, c))
            .collect::<Result<Vec<_>>>()?;
        Ok(ChainOutput {
            variant,
            kind: posterior.kind(),
            params: posterior.params().to_vec(),
            sites: posterior.sites().to_vec(),
            chains,
            config: self.config.clone(),
            priors: self.priors.clone(),
            dataset_digest: digest,
            config_hash,
        })
    }

    /// Starting state from the best of several short pilot runs, which keeps
    /// chains out of minor local modes while their starts stay dispersed.
    fn pilot(&self, posterior: &Posterior, rng: &mut crate::rng::StreamRng) -> Result<ChainState> {
        let cfg = &self.config;
        let mut best: Option<(f64, ChainState)> = None;
        for _ in 0..cfg.pilot_starts {
            let start = initialize(posterior, rng)?;
            let mut chain = Chain::new(posterior, start, cfg.target_accept, cfg.initial_n_width);
            for _ in 0..cfg.pilot_sweeps {
                chain.sweep(rng, true)?;
            }
            let score = chain.log_density();
            if best.as_ref().is_none_or(|(b, _)| score > *b) {
                best = Some((score, chain.state().clone()));
            }
        }
        Ok(best.expect("pilot_starts is at least 1").1)
    }

    fn run_chain(&self, posterior: &Posterior, index: usize) -> Result<ChainDraws> {
        let cfg = &self.config;
        let mut rng = stream(cfg.seed, Domain::Chain, index as u64);
        let start = self.pilot(posterior, &mut rng)?;
        let mut chain = Chain::new(posterior, start, cfg.target_accept, cfg.initial_n_width);
        let keep_from = cfg.adapt + cfg.burn_in;
        let retained = cfg.retained();
        let params = posterior.params();
        let mut out = ChainDraws {
            chain: index,
            iterations: Vec::with_capacity(retained),
            scalars: vec![Vec::with_capacity(retained); params.len()],
            abundance: vec![Vec::with_capacity(retained); posterior.sites().len()],
            log_posterior: Vec::with_capacity(retained),
            acceptance: BTreeMap::new(),
        };
        for it in 0..cfg.iterations {
            if it == cfg.adapt {
                chain.reset_tallies();
            }
            chain.sweep(&mut rng, it < cfg.adapt)?;
            if it >= keep_from && (it - keep_from + 1).is_multiple_of(cfg.thin) {
                let s = &chain.state().state;
                out.iterations.push(it + 1);
                for (series, p) in out.scalars.iter_mut().zip(params) {
                    series.push(p.get(s));
                }
                for (series, &site) in out.abundance.iter_mut().zip(posterior.sites()) {
                    series.push(s.abundance_n[site]);
                }
                out.log_posterior.push(chain.log_density());
            }
            if let Some(progress) = &self.progress {
                if (it + 1) % 500 == 0 || it + 1 == cfg.iterations {
                    progress(index, it + 1);
                }
            }
        }
        out.acceptance.insert("N".into(), chain.n_tally.rate());
        for (p, t) in params.iter().zip(&chain.scalar_tally) {
            out.acceptance.insert(p.name().into(), t.rate());
        }
        if let Some(rate) = chain.detection_rate() {
            out.acceptance.insert("alpha0+alpha1".into(), rate);
        }
        out.acceptance.insert("scale".into(), chain.scale_rate());
        out.acceptance.insert("joint".into(), chain.block_rate());
        Ok(out)
    }
}

/// Fits `variant` to `dataset` with default priors.
pub fn run(dataset: &Dataset, variant: ModelVariant, config: &McmcConfig) -> Result<ChainOutput> {
    Sampler::new(config.clone()).run(dataset, variant)
}

fn config_hash(
    config: &McmcConfig,
    priors: &Priors,
    variant: ModelVariant,
    kind: AbundanceKind,
    digest: &str,
) -> String {
    let payload = serde_json::json!({
        "config": config,
        "priors": priors,
        "variant": variant,
        "abundance": kind,
        "dataset": digest,
    });
    let bytes = serde_json::to_vec(&payload).expect("config serializes");
    hex(&Sha256::digest(bytes))
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
