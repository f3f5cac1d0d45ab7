//! Convergence diagnostics following the rank-normalized split-R̂ and
//! ESS definitions used by ArviZ.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TppError};
use crate::stats::{self, midranks, normal_quantile};

/// `None` entries mean the quantity is undefined (e.g. constant chains).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDiagnostics {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q5: f64,
    pub median: f64,
    pub q95: f64,
    pub r_hat: Option<f64>,
    pub ess_bulk: Option<f64>,
    pub ess_tail: Option<f64>,
    pub mcse_mean: Option<f64>,
    pub mcse_sd: Option<f64>,
}

fn split_chains(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * chains.len());
    for c in chains {
        let half = c.len() / 2;
        out.push(c[..half].to_vec());
        out.push(c[c.len() - half..].to_vec());
    }
    out
}

fn reshape(flat: &[f64], like: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(like.len());
    let mut i = 0;
    for c in like {
        out.push(flat[i..i + c.len()].to_vec());
        i += c.len();
    }
    out
}

fn z_scale(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let flat: Vec<f64> = chains.iter().flatten().copied().collect();
    let s = flat.len() as f64;
    let z: Vec<f64> = midranks(&flat)
        .into_iter()
        .map(|r| normal_quantile((r - 0.375) / (s + 0.25)))
        .collect();
    reshape(&z, chains)
}

fn rhat_basic(chains: &[Vec<f64>]) -> Option<f64> {
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| stats::mean(c)).collect();
    let b = n * stats::variance(&means);
    let w = stats::mean(&chains.iter().map(|c| stats::variance(c)).collect::<Vec<_>>());
    if !(w > 0.0) || !w.is_finite() {
        return None;
    }
    let var_hat = (n - 1.0) / n * w + b / n;
    Some((var_hat / w).sqrt())
}

/// Rank-normalized split-R̂: the larger of the bulk and folded versions.
pub fn rhat(chains: &[Vec<f64>]) -> Option<f64> {
    let split = split_chains(chains);
    let bulk = rhat_basic(&z_scale(&split))?;
    let all: Vec<f64> = chains.iter().flatten().copied().collect();
    let med = stats::median(&all);
    let folded: Vec<Vec<f64>> = split.iter().map(|c| c.iter().map(|x| (x - med).abs()).collect()).collect();
    let tail = rhat_basic(&z_scale(&folded))?;
    Some(bulk.max(tail))
}

/// Autocovariance of one chain, computed on demand per lag.
struct LazyAcov<'a> {
    x: &'a [f64],
    mean: f64,
    cache: Vec<f64>,
}

impl<'a> LazyAcov<'a> {
    fn new(x: &'a [f64]) -> Self {
        LazyAcov {
            x,
            mean: stats::mean(x),
            cache: Vec::new(),
        }
    }

    fn at(&mut self, lag: usize) -> f64 {
        while self.cache.len() <= lag {
            let l = self.cache.len();
            let n = self.x.len();
            let m = self.mean;
            let mut s = 0.0;
            for i in 0..n.saturating_sub(l) {
                s += (self.x[i] - m) * (self.x[i + l] - m);
            }
            self.cache.push(s / n as f64);
        }
        self.cache[lag]
    }
}

/// Effective sample size via Geyer's initial monotone sequence.
pub fn ess(chains: &[Vec<f64>]) -> Option<f64> {
    let m = chains.len();
    let n = chains[0].len();
    if n < 4 || chains.iter().any(|c| c.len() != n) {
        return None;
    }
    let mut acov: Vec<LazyAcov> = chains.iter().map(|c| LazyAcov::new(c)).collect();
    let mean_acov = |lag: usize, acov: &mut Vec<LazyAcov>| {
        acov.iter_mut().map(|a| a.at(lag)).sum::<f64>() / m as f64
    };
    let nf = n as f64;
    let chain_means: Vec<f64> = acov.iter().map(|a| a.mean).collect();
    let mean_var = mean_acov(0, &mut acov) * nf / (nf - 1.0);
    let mut var_plus = mean_var * (nf - 1.0) / nf;
    if m > 1 {
        var_plus += stats::variance(&chain_means);
    }
    if !(var_plus > 0.0) || !var_plus.is_finite() {
        return None;
    }

    let mut rho = vec![0.0; n];
    rho[0] = 1.0;
    let mut rho_even = 1.0;
    let mut rho_odd = 1.0 - (mean_var - mean_acov(1, &mut acov)) / var_plus;
    rho[1] = rho_odd;
    let mut t = 1;
    while t < n - 3 && rho_even + rho_odd > 0.0 {
        rho_even = 1.0 - (mean_var - mean_acov(t + 1, &mut acov)) / var_plus;
        rho_odd = 1.0 - (mean_var - mean_acov(t + 2, &mut acov)) / var_plus;
        if rho_even + rho_odd >= 0.0 {
            rho[t + 1] = rho_even;
            rho[t + 2] = rho_odd;
        }
        t += 2;
    }
    if t < 3 {
        // too few draws for even one autocorrelation pair
        return None;
    }
    let max_t = t - 2;
    if rho_even > 0.0 {
        rho[max_t + 1] = rho_even;
    }
    let mut t = 1;
    while t + 2 <= max_t {
        if rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t] {
            rho[t + 1] = (rho[t - 1] + rho[t]) / 2.0;
            rho[t + 2] = rho[t + 1];
        }
        t += 2;
    }
    let total = (m * n) as f64;
    let mut tau = -1.0 + 2.0 * rho[..=max_t].iter().sum::<f64>() + rho[max_t + 1];
    tau = tau.max(1.0 / total.log10());
    Some(total / tau)
}

pub fn ess_bulk(chains: &[Vec<f64>]) -> Option<f64> {
    ess(&z_scale(&split_chains(chains)))
}

fn ess_quantile(chains: &[Vec<f64>], prob: f64) -> Option<f64> {
    let all: Vec<f64> = chains.iter().flatten().copied().collect();
    let q = stats::quantile(&all, prob);
    let ind: Vec<Vec<f64>> = chains
        .iter()
        .map(|c| c.iter().map(|&x| if x <= q { 1.0 } else { 0.0 }).collect())
        .collect();
    ess(&split_chains(&ind))
}

pub fn ess_tail(chains: &[Vec<f64>]) -> Option<f64> {
    Some(ess_quantile(chains, 0.05)?.min(ess_quantile(chains, 0.95)?))
}

pub fn ess_mean(chains: &[Vec<f64>]) -> Option<f64> {
    ess(&split_chains(chains))
}

/// ESS for the standard deviation: the smaller of the ESS of `x` and `x²`.
pub fn ess_sd(chains: &[Vec<f64>]) -> Option<f64> {
    let sq: Vec<Vec<f64>> = chains.iter().map(|c| c.iter().map(|x| x * x).collect()).collect();
    Some(ess_mean(chains)?.min(ess_mean(&sq)?))
}

/// Summary and diagnostics for one parameter from `chains[c][d]`.
pub fn chain_diagnostics(name: &str, chains: &[Vec<f64>]) -> Result<ParamDiagnostics> {
    if chains.len() < 2 || chains.iter().any(|c| c.len() < 4) {
        return Err(TppError::invalid("diagnostics need at least 2 chains of at least 4 draws"));
    }
    let n = chains[0].len();
    if chains.iter().any(|c| c.len() != n) {
        return Err(TppError::invalid("chains must have equal length"));
    }
    let all: Vec<f64> = chains.iter().flatten().copied().collect();
    let sorted = stats::sorted(&all);
    let sd = stats::sd(&all);
    let constant = sorted.first() == sorted.last();
    let (r_hat, ess_b, ess_t, ess_s) = if constant {
        (None, None, None, None)
    } else {
        (rhat(chains), ess_bulk(chains), ess_tail(chains), ess_sd(chains))
    };
    Ok(ParamDiagnostics {
        name: name.to_string(),
        mean: stats::mean(&all),
        sd,
        q5: stats::quantile_sorted(&sorted, 0.05),
        median: stats::quantile_sorted(&sorted, 0.5),
        q95: stats::quantile_sorted(&sorted, 0.95),
        r_hat,
        ess_bulk: ess_b,
        ess_tail: ess_t,
        mcse_mean: ess_b.map(|e| sd / e.sqrt()),
        mcse_sd: ess_s.map(|e| sd / (2.0 * e).sqrt()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_chains(m: usize, n: usize, offset: impl Fn(usize) -> f64) -> Vec<Vec<f64>> {
        (0..m)
            .map(|c| {
                let mut rng = substream(42, "diag", c as u64);
                (0..n)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        z + offset(c)
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn iid_normal_diagnostics() {
        let ch = normal_chains(4, 4000, |_| 0.0);
        let d = chain_diagnostics("x", &ch).unwrap();
        let r = d.r_hat.unwrap();
        assert!((0.999..=1.01).contains(&r), "rhat {r}");
        let e = d.ess_bulk.unwrap();
        assert!((e - 16000.0).abs() < 1600.0, "ess {e}");
        assert!((d.mcse_mean.unwrap() * e.sqrt() - d.sd).abs() < 1e-12);
    }

    #[test]
    fn disjoint_chains_flagged() {
        let ch = normal_chains(2, 500, |c| if c == 0 { -10.0 } else { 10.0 });
        assert!(rhat(&ch).unwrap() > 1.1);
    }

    #[test]
    fn constant_chains_undefined() {
        let ch = vec![vec![1.5; 10]; 4];
        let d = chain_diagnostics("x", &ch).unwrap();
        assert!(d.r_hat.is_none() && d.ess_bulk.is_none() && d.mcse_mean.is_none());
        assert_eq!(d.mean, 1.5);
    }

    #[test]
    fn very_short_chains_have_no_ess() {
        let ch = vec![vec![0.3, 1.2, -0.4, 0.9, 2.0, -1.1, 0.1, 0.5]; 2];
        assert!(ess_bulk(&ch).is_none());
        assert!(chain_diagnostics("x", &ch).unwrap().mcse_mean.is_none());
    }

    #[test]
    fn autocorrelated_chain_has_lower_ess() {
        let mut rng = substream(3, "ar1", 0);
        let ch: Vec<Vec<f64>> = (0..4)
            .map(|_| {
                let mut x = 0.0;
                (0..2000)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        x = 0.9 * x + z;
                        x
                    })
                    .collect()
            })
            .collect();
        // AR(1) with φ = 0.9: ESS/N ≈ (1−φ)/(1+φ) ≈ 0.053
        let e = ess_mean(&ch).unwrap();
        assert!(e > 200.0 && e < 800.0, "ess {e}");
    }
}
