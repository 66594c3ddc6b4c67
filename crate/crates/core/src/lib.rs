//! Hierarchical abundance models that combine autonomous acoustic recordings
//! with point-count surveys.
//!
//! Four model variants share a latent Poisson abundance per site:
//!
//! * `AV`: acoustic detections, clustered vocalization counts and a manually
//!   validated subset of vocalizations,
//! * `C`: repeated point counts (N-mixture),
//! * `AC`: acoustic detections and vocalizations joined with point counts,
//! * `ACV`: all three data blocks.
//!
//! The crate provides the data model ([`model`]), log-density kernels
//! ([`dist`], [`likelihood`]), a data simulator ([`simulate`]), a multi-chain
//! Metropolis-within-Gibbs sampler ([`mcmc`]), convergence diagnostics
//! ([`diagnostics`]), a replicated-study harness ([`study`]) and the CSV/JSON
//! file formats ([`io`]).

pub mod diagnostics;
pub mod dist;
pub mod error;
pub mod io;
pub mod likelihood;
pub mod mcmc;
pub mod model;
pub mod rng;
pub mod simulate;
pub mod study;

pub use error::{Error, Result};
pub use model::{
    AbundanceModel, AcousticData, CountData, Dataset, Grid, ModelVariant, ParameterState,
    SurveyDesign, ValidationData,
};
