use rand_distr::{Distribution, Gamma as GammaDist, Uniform as UniformDist};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TppError};
use crate::models::ModelFamily;
use crate::rng::Rng;
use crate::stats::ln_gamma;

/// Marginal prior for one parameter. `Gamma` uses (shape, rate) and is placed
/// on `θ − lower_bound`, so for the power-law exponent `p` it is a prior on
/// `p − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum Prior {
    Gamma { shape: f64, rate: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Prior {
    pub fn gamma(shape: f64, rate: f64) -> Self {
        Prior::Gamma { shape, rate }
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        Prior::Uniform { lo, hi }
    }

    fn check(&self, name: &str, lower_bound: f64) -> Result<()> {
        match *self {
            Prior::Gamma { shape, rate } => {
                if !(shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()) {
                    return Err(TppError::invalid(format!(
                        "prior for {name}: Gamma shape and rate must be positive and finite"
                    )));
                }
            }
            Prior::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                    return Err(TppError::invalid(format!("prior for {name}: Uniform needs lo < hi")));
                }
                if lo < lower_bound {
                    return Err(TppError::invalid(format!(
                        "prior for {name}: Uniform support starts at {lo}, below the parameter bound {lower_bound}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Log density at `y` (the shifted value for Gamma, the raw value for
    /// Uniform), and its derivative.
    pub(crate) fn log_density_and_grad(&self, y: f64) -> (f64, f64) {
        match *self {
            Prior::Gamma { shape, rate } => (
                (shape - 1.0) * y.ln() - rate * y + shape * rate.ln() - ln_gamma(shape),
                (shape - 1.0) / y - rate,
            ),
            Prior::Uniform { lo, hi } => {
                if y > lo && y < hi {
                    (-(hi - lo).ln(), 0.0)
                } else {
                    (f64::NEG_INFINITY, 0.0)
                }
            }
        }
    }

    /// Draw on the parameter scale.
    pub fn sample(&self, lower_bound: f64, rng: &mut Rng) -> f64 {
        match *self {
            Prior::Gamma { shape, rate } => {
                lower_bound + GammaDist::new(shape, 1.0 / rate).expect("validated").sample(rng)
            }
            Prior::Uniform { lo, hi } => UniformDist::new(lo, hi).expect("validated").sample(rng),
        }
    }

    /// CDF on the parameter scale.
    pub fn cdf(&self, lower_bound: f64, x: f64) -> f64 {
        use statrs::distribution::{ContinuousCDF, Gamma};
        match *self {
            Prior::Gamma { shape, rate } => {
                let y = x - lower_bound;
                if y <= 0.0 {
                    0.0
                } else {
                    Gamma::new(shape, rate).expect("validated").cdf(y)
                }
            }
            Prior::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub family: ModelFamily,
    /// One prior per parameter, in [`ModelFamily::param_names`] order.
    pub priors: Vec<Prior>,
}

impl PriorSpec {
    pub fn new(family: ModelFamily, priors: Vec<Prior>) -> Result<Self> {
        if priors.len() != family.dim() {
            return Err(TppError::invalid(format!(
                "{family} needs {} priors, got {}",
                family.dim(),
                priors.len()
            )));
        }
        for ((p, name), lb) in priors.iter().zip(family.param_names()).zip(family.lower_bounds()) {
            p.check(name, lb)?;
        }
        Ok(PriorSpec { family, priors })
    }

    pub fn default_for(family: ModelFamily) -> Self {
        let g = Prior::gamma;
        let priors = match family {
            ModelFamily::Hpp => vec![g(1.0, 1.0)],
            ModelFamily::NhppPl => vec![g(1.0, 1.0), g(1.0, 1.0)],
            ModelFamily::HawkesExp => vec![g(1.0, 1.0); 3],
            ModelFamily::Hawkes2Exp => {
                vec![g(1.0, 1.0), g(1.0, 3.0), g(3.0, 3.0), g(1.0, 3.0), g(3.0, 3.0)]
            }
            ModelFamily::HawkesPl => vec![
                Prior::uniform(0.0, 2.0),
                Prior::uniform(0.0, 4.0),
                Prior::uniform(0.0, 4.0),
                Prior::uniform(1.0, 4.0),
            ],
        };
        PriorSpec { family, priors }
    }

    /// Parses the JSON form and validates it.
    pub fn from_json(s: &str) -> Result<Self> {
        let raw: PriorSpec = serde_json::from_str(s)?;
        PriorSpec::new(raw.family, raw.priors)
    }

    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        self.priors
            .iter()
            .zip(self.family.lower_bounds())
            .map(|(p, lb)| p.sample(lb, rng))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for f in ModelFamily::ALL {
            let d = PriorSpec::default_for(f);
            assert_eq!(PriorSpec::new(f, d.priors.clone()).unwrap(), d);
        }
    }

    #[test]
    fn uniform_below_bound_rejected() {
        let mut p = PriorSpec::default_for(ModelFamily::HawkesPl).priors;
        p[3] = Prior::uniform(0.5, 4.0);
        assert!(PriorSpec::new(ModelFamily::HawkesPl, p).is_err());
    }

    #[test]
    fn json_round_trip() {
        let d = PriorSpec::default_for(ModelFamily::Hawkes2Exp);
        let s = serde_json::to_string(&d).unwrap();
        assert!(s.contains("\"dist\":\"gamma\""));
        assert_eq!(PriorSpec::from_json(&s).unwrap(), d);
    }

    #[test]
    fn gamma_density_is_exp1_at_unit_params() {
        let (lp, g) = Prior::gamma(1.0, 1.0).log_density_and_grad(0.7);
        assert!((lp + 0.7).abs() < 1e-14);
        assert!((g + 1.0).abs() < 1e-14);
    }
}
