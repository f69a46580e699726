//! Exact data augmentation MCMC for discretely observed diffusions.
//!
//! Diffusions are handled through their Lamperti transform. Exact bridge
//! draws, with layers for drifts whose `phi` is unbounded, supply an
//! augmentation under which the posterior density is computable exactly.
//! A grid-based approximate sampler, an observation-error extension and
//! chain diagnostics complete the crate.

// Negated comparisons are used on purpose so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amcmc;
pub mod bridge;
pub mod chain;
pub mod diagnostics;
pub mod ea;
pub mod emcmc;
pub mod error;
pub mod latent;
pub mod model;
pub mod models;
pub mod proposal;
pub mod rng;
pub mod simulate;

pub use amcmc::{run_amcmc, AmcmcOptions, DiscretePath};
pub use chain::{ChainRecord, Counters, SamplerConfig};
pub use ea::{ea_sample_interval, AugmentedInterval, EaConfig};
pub use emcmc::{run_emcmc, EmcmcOptions, ObservationSet, Scheme};
pub use error::{Error, Result};
pub use latent::{run_emcmc_error, ErrorOptions, InitialPrior, TauPrior};
pub use model::{Diffusion, EaClass, ModelSpec};
pub use simulate::{add_noise, simulate_dataset};
