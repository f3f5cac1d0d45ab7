//! Component-wise random-walk Metropolis with Robbins–Monro scale tuning
//! toward a 0.44 per-coordinate acceptance rate during warmup.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::nuts::ChainResult;
use super::posterior::Posterior;
use crate::rng::Rng;

const TARGET: f64 = 0.44;

pub fn run_chain(post: &Posterior, x0: Vec<f64>, warmup: usize, draws: usize, rng: &mut Rng) -> ChainResult {
    let d = post.dim();
    let mut x = x0;
    let mut logp = post.log_density(&x);
    let mut log_scale = vec![0.0f64; d];
    let mut out = Vec::with_capacity(draws);
    let mut accepted = 0usize;

    for it in 0..warmup + draws {
        for i in 0..d {
            let z: f64 = StandardNormal.sample(rng);
            let old = x[i];
            x[i] = old + log_scale[i].exp() * z;
            let lp = post.log_density(&x);
            let a = if lp.is_finite() { (lp - logp).min(0.0).exp() } else { 0.0 };
            let accept = rng.random::<f64>() < a;
            if accept {
                logp = lp;
            } else {
                x[i] = old;
            }
            if it < warmup {
                log_scale[i] += (a - TARGET) / ((it + 1) as f64).powf(0.6);
            } else if accept {
                accepted += 1;
            }
        }
        if it >= warmup {
            out.push(x.clone());
        }
    }
    ChainResult {
        draws: out,
        divergences: 0,
        step_size: 0.0,
        inv_metric: log_scale.iter().map(|s| (2.0 * s).exp()).collect(),
        mean_accept: accepted as f64 / (draws.max(1) * d.max(1)) as f64,
        mean_tree_depth: 0.0,
    }
}
