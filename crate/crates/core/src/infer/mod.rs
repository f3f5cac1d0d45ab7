//! Bayesian inference: priors, unconstrained reparameterization, NUTS with
//! a random-walk Metropolis fallback, and chain diagnostics.

pub mod diagnostics;
pub mod nuts;
pub mod posterior;
pub mod prior;
pub mod rwm;
pub mod samples;
pub mod transform;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Result, TppError};
use crate::models::canonicalize;
use crate::rng::substream;

pub use diagnostics::{chain_diagnostics, ParamDiagnostics};
pub use posterior::{log_posterior_and_grad, Posterior};
pub use prior::{Prior, PriorSpec};
pub use samples::{ArchiveConfig, PosteriorSamples};

pub const INIT_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Nuts,
    Rwm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub n_chains: usize,
    pub warmup: usize,
    pub draws: usize,
    pub target_accept: f64,
    pub max_depth: usize,
    pub seed: u64,
    pub sampler: SamplerKind,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            n_chains: 4,
            warmup: 6000,
            draws: 4000,
            target_accept: 0.99,
            max_depth: 10,
            seed: 0,
            sampler: SamplerKind::Nuts,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 || self.draws == 0 || self.max_depth == 0 {
            return Err(TppError::invalid("chains, draws and max depth must be positive"));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(TppError::invalid("target acceptance must lie in (0, 1)"));
        }
        Ok(())
    }
}

fn initial_point(post: &Posterior, seed: u64, chain: usize) -> Result<Vec<f64>> {
    let mut rng = substream(seed, "init", chain as u64);
    let mut g = vec![0.0; post.dim()];
    for _ in 0..INIT_ATTEMPTS {
        let theta = post.prior().sample(&mut rng);
        let x = post.unconstrain(&theta);
        if x.iter().all(|v| v.is_finite()) && post.log_density_and_grad(&x, &mut g).is_finite() {
            return Ok(x);
        }
    }
    Err(TppError::Sampler(format!(
        "chain {chain}: no finite initial point after {INIT_ATTEMPTS} prior draws"
    )))
}

/// Samples the posterior of `prior.family` given `ds`. Chains run in
/// parallel, each on its own random stream.
pub fn run_nuts(ds: &Dataset, prior: &PriorSpec, cfg: &ChainConfig) -> Result<PosteriorSamples> {
    cfg.validate()?;
    let post = Posterior::new(ds, prior)?;
    let family = post.family();
    let results: Result<Vec<nuts::ChainResult>> = (0..cfg.n_chains)
        .into_par_iter()
        .map(|c| {
            let x0 = initial_point(&post, cfg.seed, c)?;
            let mut rng = substream(cfg.seed, "chain", c as u64);
            Ok(match cfg.sampler {
                SamplerKind::Nuts => {
                    let settings = nuts::NutsSettings {
                        warmup: cfg.warmup,
                        draws: cfg.draws,
                        target_accept: cfg.target_accept,
                        max_depth: cfg.max_depth,
                    };
                    nuts::run_chain(&post, x0, &settings, &mut rng)
                }
                SamplerKind::Rwm => rwm::run_chain(&post, x0, cfg.warmup, cfg.draws, &mut rng),
            })
        })
        .collect();
    let results = results?;

    for (c, r) in results.iter().enumerate() {
        if r.divergences == cfg.draws {
            return Err(TppError::Sampler(format!(
                "chain {c}: every transition diverged (step size {:.3e}); config {}",
                r.step_size,
                serde_json::to_string(cfg).unwrap_or_default()
            )));
        }
    }
    let divergences = results.iter().map(|r| r.divergences).sum();
    let draws: Vec<Vec<Vec<f64>>> = results
        .iter()
        .map(|r| {
            r.draws
                .iter()
                .map(|x| {
                    let mut theta = post.constrain(x);
                    canonicalize(family, &mut theta);
                    theta
                })
                .collect()
        })
        .collect();
    PosteriorSamples::new(family, draws, divergences)
}

pub fn archive_config(ds: &Dataset, prior: &PriorSpec, cfg: &ChainConfig, samples: &PosteriorSamples) -> ArchiveConfig {
    ArchiveConfig {
        family: prior.family,
        prior: prior.clone(),
        chains: cfg.clone(),
        gamma_parameterization: "shape-rate".into(),
        divergences: samples.divergences,
        n_sessions: ds.len(),
    }
}
