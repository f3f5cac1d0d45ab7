use crate::data::{Dataset, EventSequence};
use crate::error::{Result, TppError};
use crate::models::{self, ModelFamily};

use super::prior::PriorSpec;
use super::transform::{transforms, Transform};

/// Log posterior density on the unconstrained scale for one family, prior
/// and dataset.
#[derive(Debug, Clone)]
pub struct Posterior {
    family: ModelFamily,
    prior: PriorSpec,
    transforms: Vec<Transform>,
    sessions: Vec<EventSequence>,
}

impl Posterior {
    /// Onsets at exactly `t = 0` are dropped for the power-law NHPP, whose
    /// intensity is 0 or ∞ there.
    pub fn new(ds: &Dataset, prior: &PriorSpec) -> Result<Self> {
        let family = prior.family;
        let sessions = if family == ModelFamily::NhppPl {
            ds.sequences
                .iter()
                .map(|s| {
                    let mut s = s.clone();
                    s.onsets.retain(|&t| t > 0.0);
                    s
                })
                .collect()
        } else {
            ds.sequences.clone()
        };
        Ok(Posterior {
            family,
            prior: PriorSpec::new(family, prior.priors.clone())?,
            transforms: transforms(prior),
            sessions,
        })
    }

    pub fn family(&self) -> ModelFamily {
        self.family
    }

    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    pub fn constrain(&self, x: &[f64]) -> Vec<f64> {
        self.transforms.iter().zip(x).map(|(t, &x)| t.constrain(x)).collect()
    }

    pub fn unconstrain(&self, theta: &[f64]) -> Vec<f64> {
        self.transforms.iter().zip(theta).map(|(t, &v)| t.unconstrain(v)).collect()
    }

    /// Log density (up to a constant) and its gradient written into `grad`.
    /// A non-finite density is reported as −∞ with a zeroed gradient.
    pub fn log_density_and_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.dim();
        let theta = self.constrain(x);
        let lbs = self.family.lower_bounds();
        let mut total = 0.0;
        let mut g_theta = vec![0.0; d];
        for i in 0..d {
            let y = match self.prior.priors[i] {
                super::prior::Prior::Gamma { .. } => theta[i] - lbs[i],
                super::prior::Prior::Uniform { .. } => theta[i],
            };
            let (lp, dlp) = self.prior.priors[i].log_density_and_grad(y);
            total += lp;
            g_theta[i] += dlp;
        }
        if total.is_finite() {
            let mut g = vec![0.0; d];
            for s in &self.sessions {
                total += models::value_and_grad_raw(self.family, &theta, s, &mut g);
                for (a, b) in g_theta.iter_mut().zip(&g) {
                    *a += b;
                }
            }
        }
        for i in 0..d {
            let (dth, logj, dlogj) = self.transforms[i].jacobian(x[i]);
            total += logj;
            grad[i] = g_theta[i] * dth + dlogj;
        }
        if !total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            return f64::NEG_INFINITY;
        }
        total
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let theta = self.constrain(x);
        let lbs = self.family.lower_bounds();
        let mut total = 0.0;
        for i in 0..d {
            let y = match self.prior.priors[i] {
                super::prior::Prior::Gamma { .. } => theta[i] - lbs[i],
                super::prior::Prior::Uniform { .. } => theta[i],
            };
            total += self.prior.priors[i].log_density_and_grad(y).0;
            total += self.transforms[i].jacobian(x[i]).1;
        }
        if total.is_finite() {
            for s in &self.sessions {
                total += models::log_likelihood_raw(self.family, &theta, s);
            }
        }
        if total.is_finite() {
            total
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// One-shot evaluation of the unconstrained log posterior and its gradient.
pub fn log_posterior_and_grad(x: &[f64], ds: &Dataset, prior: &PriorSpec) -> Result<(f64, Vec<f64>)> {
    let post = Posterior::new(ds, prior)?;
    if x.len() != post.dim() || x.iter().any(|v| !v.is_finite()) {
        return Err(TppError::invalid(format!(
            "unconstrained point must hold {} finite values",
            post.dim()
        )));
    }
    let mut g = vec![0.0; post.dim()];
    let lp = post.log_density_and_grad(x, &mut g);
    Ok((lp, g))
}
