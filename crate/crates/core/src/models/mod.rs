//! Parametric conditional-intensity families.
//!
//! Every family exposes the conditional intensity `λ*(t)` (evaluated on the
//! history strictly before `t`), its exact integral `Λ*(t)`, the session
//! log-likelihood `Σ log λ*(t_j) − Λ*(T)` and its analytic gradient.
//!
//! Raw-slice entry points (`*_raw`) take parameters in [`ModelFamily::param_names`]
//! order without canonicalization, which is what the sampler needs.

mod exp_kernel;
mod poisson;
mod power_law;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, EventSequence};
use crate::error::{Result, TppError};

pub use exp_kernel::ExpKernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelFamily {
    #[serde(rename = "HPP")]
    Hpp,
    #[serde(rename = "NHPP_PL")]
    NhppPl,
    #[serde(rename = "HAWKES_EXP")]
    HawkesExp,
    #[serde(rename = "HAWKES_2EXP")]
    Hawkes2Exp,
    #[serde(rename = "HAWKES_PL")]
    HawkesPl,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 5] = [
        ModelFamily::Hpp,
        ModelFamily::NhppPl,
        ModelFamily::HawkesExp,
        ModelFamily::Hawkes2Exp,
        ModelFamily::HawkesPl,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ModelFamily::Hpp => "HPP",
            ModelFamily::NhppPl => "NHPP_PL",
            ModelFamily::HawkesExp => "HAWKES_EXP",
            ModelFamily::Hawkes2Exp => "HAWKES_2EXP",
            ModelFamily::HawkesPl => "HAWKES_PL",
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            ModelFamily::Hpp => &["mu"],
            ModelFamily::NhppPl => &["alpha", "k"],
            ModelFamily::HawkesExp => &["mu", "alpha", "beta"],
            ModelFamily::Hawkes2Exp => &["mu", "alpha1", "beta1", "alpha2", "beta2"],
            ModelFamily::HawkesPl => &["mu", "k", "c", "p"],
        }
    }

    pub fn dim(self) -> usize {
        self.param_names().len()
    }

    pub fn is_hawkes(self) -> bool {
        matches!(self, ModelFamily::HawkesExp | ModelFamily::Hawkes2Exp | ModelFamily::HawkesPl)
    }

    /// Lower bound of each parameter's support (strict for `p`).
    pub fn lower_bounds(self) -> Vec<f64> {
        self.param_names()
            .iter()
            .map(|&n| if self == ModelFamily::HawkesPl && n == "p" { 1.0 } else { 0.0 })
            .collect()
    }

    fn index_of(self, name: &str) -> Option<usize> {
        self.param_names().iter().position(|&n| n == name)
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ModelFamily {
    type Err = TppError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        ModelFamily::ALL
            .into_iter()
            .find(|f| f.tag() == norm)
            .ok_or_else(|| TppError::invalid(format!("unknown model family '{s}'")))
    }
}

/// Constraint-checked parameter vector for one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamSetRepr", into = "ParamSetRepr")]
pub struct ParamSet {
    family: ModelFamily,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ParamSetRepr {
    family: ModelFamily,
    params: BTreeMap<String, f64>,
}

impl TryFrom<ParamSetRepr> for ParamSet {
    type Error = TppError;

    fn try_from(r: ParamSetRepr) -> Result<Self> {
        ParamSet::from_named(r.family, &r.params)
    }
}

impl From<ParamSet> for ParamSetRepr {
    fn from(p: ParamSet) -> Self {
        ParamSetRepr {
            family: p.family,
            params: p.named().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }
}

impl ParamSet {
    /// Validates and canonicalizes: all values finite and ≥ 0, `p > 1` for
    /// the power-law kernel, fast exponential kernel first (`β1 ≥ β2`).
    pub fn new(family: ModelFamily, values: Vec<f64>) -> Result<Self> {
        check_values(family, &values)?;
        let mut values = values;
        canonicalize(family, &mut values);
        Ok(ParamSet { family, values })
    }

    pub fn from_named(family: ModelFamily, named: &BTreeMap<String, f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(family.dim());
        for &name in family.param_names() {
            let v = named.get(name).ok_or_else(|| TppError::InvalidParams {
                family: family.to_string(),
                reason: format!("missing parameter '{name}'"),
            })?;
            values.push(*v);
        }
        if let Some(extra) = named.keys().find(|k| family.index_of(k).is_none()) {
            return Err(TppError::InvalidParams {
                family: family.to_string(),
                reason: format!("unknown parameter '{extra}'"),
            });
        }
        ParamSet::new(family, values)
    }

    pub fn hpp(mu: f64) -> Result<Self> {
        ParamSet::new(ModelFamily::Hpp, vec![mu])
    }

    pub fn nhpp(alpha: f64, k: f64) -> Result<Self> {
        ParamSet::new(ModelFamily::NhppPl, vec![alpha, k])
    }

    pub fn hawkes_exp(mu: f64, alpha: f64, beta: f64) -> Result<Self> {
        ParamSet::new(ModelFamily::HawkesExp, vec![mu, alpha, beta])
    }

    pub fn hawkes_2exp(mu: f64, alpha1: f64, beta1: f64, alpha2: f64, beta2: f64) -> Result<Self> {
        ParamSet::new(ModelFamily::Hawkes2Exp, vec![mu, alpha1, beta1, alpha2, beta2])
    }

    pub fn hawkes_pl(mu: f64, k: f64, c: f64, p: f64) -> Result<Self> {
        ParamSet::new(ModelFamily::HawkesPl, vec![mu, k, c, p])
    }

    pub fn family(&self) -> ModelFamily {
        self.family
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.family.index_of(name).map(|i| self.values[i])
    }

    pub fn named(&self) -> Vec<(&'static str, f64)> {
        self.family.param_names().iter().copied().zip(self.values.iter().copied()).collect()
    }

    /// `λ*(t)` using onsets strictly before `t` (left limit at an onset).
    pub fn intensity(&self, seq: &EventSequence, t: f64) -> f64 {
        intensity_raw(self.family, &self.values, seq.history_before(t), t)
    }

    /// Right limit `λ*(t+)`, including any onset at exactly `t`.
    pub fn intensity_after(&self, seq: &EventSequence, t: f64) -> f64 {
        let h = seq.history_through(t);
        match self.family {
            ModelFamily::Hpp | ModelFamily::NhppPl => intensity_raw(self.family, &self.values, h, t),
            _ => {
                // Evaluate just past t with the full kernel value at lag 0.
                let base = intensity_raw(self.family, &self.values, seq.history_before(t), t);
                let at_t = h.len() - seq.history_before(t).len();
                base + at_t as f64 * self.kernel_at_zero()
            }
        }
    }

    /// Triggering kernel `φ(0)`: size of the intensity jump at an onset.
    pub fn kernel_at_zero(&self) -> f64 {
        let v = &self.values;
        match self.family {
            ModelFamily::HawkesExp => v[1] * v[2],
            ModelFamily::Hawkes2Exp => v[1] * v[2] + v[3] * v[4],
            ModelFamily::HawkesPl => v[1] * v[2].powf(-v[3]),
            ModelFamily::Hpp | ModelFamily::NhppPl => 0.0,
        }
    }

    /// `Λ*(t) = ∫₀ᵗ λ*(s) ds`.
    pub fn cumulative_intensity(&self, seq: &EventSequence, t: f64) -> f64 {
        cumulative_raw(self.family, &self.values, seq.history_before(t), t)
    }

    pub fn log_likelihood(&self, seq: &EventSequence) -> f64 {
        log_likelihood_raw(self.family, &self.values, seq)
    }

    /// Sum over independent sessions, accumulated in dataset order.
    pub fn dataset_log_likelihood(&self, ds: &Dataset) -> f64 {
        ds.sequences.iter().map(|s| self.log_likelihood(s)).sum()
    }

    /// Analytic gradient in [`ModelFamily::param_names`] order. Rejects
    /// points on the boundary of the parameter space.
    pub fn grad_log_likelihood(&self, seq: &EventSequence) -> Result<Vec<f64>> {
        check_interior(self.family, &self.values)?;
        let mut g = vec![0.0; self.family.dim()];
        value_and_grad_raw(self.family, &self.values, seq, &mut g);
        Ok(g)
    }

    pub fn branching_factor(&self) -> Result<BranchingFactor> {
        let v = &self.values;
        let value = match self.family {
            ModelFamily::HawkesExp => v[1],
            ModelFamily::Hawkes2Exp => v[1] + v[3],
            ModelFamily::HawkesPl => v[1] * v[2].powf(1.0 - v[3]) / (v[3] - 1.0),
            f => {
                return Err(TppError::Domain(format!(
                    "branching factor is undefined for non-Hawkes family {f}"
                )))
            }
        };
        Ok(BranchingFactor::new(value))
    }
}

impl fmt::Display for ParamSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.family)?;
        for (i, (n, v)) in self.named().into_iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{n}={v}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchingFactor {
    pub value: f64,
    pub regime: Regime,
}

impl BranchingFactor {
    pub fn new(value: f64) -> Self {
        let regime = if value < 1.0 {
            Regime::Subcritical
        } else if value == 1.0 {
            Regime::Critical
        } else {
            Regime::Supercritical
        };
        BranchingFactor { value, regime }
    }
}

fn check_values(family: ModelFamily, values: &[f64]) -> Result<()> {
    let err = |reason: String| TppError::InvalidParams {
        family: family.to_string(),
        reason,
    };
    if values.len() != family.dim() {
        return Err(err(format!("expected {} values, got {}", family.dim(), values.len())));
    }
    for (&name, &v) in family.param_names().iter().zip(values) {
        if !v.is_finite() {
            return Err(err(format!("{name} is not finite ({v})")));
        }
        if v < 0.0 {
            return Err(err(format!("{name} must be nonnegative ({v})")));
        }
    }
    if family == ModelFamily::HawkesPl && values[3] <= 1.0 {
        return Err(err(format!("p must exceed 1 ({})", values[3])));
    }
    Ok(())
}

fn check_interior(family: ModelFamily, values: &[f64]) -> Result<()> {
    for ((&name, &v), lo) in family.param_names().iter().zip(values).zip(family.lower_bounds()) {
        if v <= lo {
            return Err(TppError::Domain(format!(
                "gradient requested on the boundary of {family}: {name} = {v}"
            )));
        }
    }
    Ok(())
}

/// Fast exponential kernel first; the two kernels are exchangeable.
pub(crate) fn canonicalize(family: ModelFamily, values: &mut [f64]) {
    if family == ModelFamily::Hawkes2Exp && values[2] < values[4] {
        values.swap(1, 3);
        values.swap(2, 4);
    }
}

fn exp_kernels(family: ModelFamily, v: &[f64]) -> ([ExpKernel; 2], usize) {
    match family {
        ModelFamily::HawkesExp => ([ExpKernel::new(v[1], v[2]), ExpKernel::new(0.0, 1.0)], 1),
        ModelFamily::Hawkes2Exp => ([ExpKernel::new(v[1], v[2]), ExpKernel::new(v[3], v[4])], 2),
        _ => unreachable!("not an exponential-kernel family"),
    }
}

/// `λ*(t)` given the onsets strictly before `t`.
pub fn intensity_raw(family: ModelFamily, v: &[f64], history: &[f64], t: f64) -> f64 {
    match family {
        ModelFamily::Hpp => v[0],
        ModelFamily::NhppPl => poisson::nhpp_intensity(v[0], v[1], t),
        ModelFamily::HawkesExp | ModelFamily::Hawkes2Exp => {
            let (ks, n) = exp_kernels(family, v);
            exp_kernel::intensity(v[0], &ks[..n], history, t)
        }
        ModelFamily::HawkesPl => power_law::intensity(v[0], v[1], v[2], v[3], history, t),
    }
}

/// `Λ*(t)` given the onsets strictly before `t`.
pub fn cumulative_raw(family: ModelFamily, v: &[f64], history: &[f64], t: f64) -> f64 {
    match family {
        ModelFamily::Hpp => v[0] * t,
        ModelFamily::NhppPl => poisson::nhpp_cumulative(v[0], v[1], t),
        ModelFamily::HawkesExp | ModelFamily::Hawkes2Exp => {
            let (ks, n) = exp_kernels(family, v);
            exp_kernel::cumulative(v[0], &ks[..n], history, t)
        }
        ModelFamily::HawkesPl => power_law::cumulative(v[0], v[1], v[2], v[3], history, t),
    }
}

/// Expected count on `(a, b]` given every onset at or before `a`.
pub fn expected_count_between(family: ModelFamily, v: &[f64], history: &[f64], a: f64, b: f64) -> f64 {
    (cumulative_raw(family, v, history, b) - cumulative_raw(family, v, history, a)).max(0.0)
}

/// `Λ*(t_j)` at every onset with the left-limit history, in one pass.
pub fn compensator_at_onsets(family: ModelFamily, v: &[f64], onsets: &[f64]) -> Vec<f64> {
    match family {
        ModelFamily::HawkesExp | ModelFamily::Hawkes2Exp => {
            let (ks, n) = exp_kernels(family, v);
            exp_kernel::compensator_at_onsets(v[0], &ks[..n], onsets)
        }
        _ => onsets
            .iter()
            .enumerate()
            .map(|(j, &t)| cumulative_raw(family, v, &onsets[..j], t))
            .collect(),
    }
}

pub fn log_likelihood_raw(family: ModelFamily, v: &[f64], seq: &EventSequence) -> f64 {
    let t = seq.duration;
    let s = &seq.onsets;
    match family {
        ModelFamily::Hpp => poisson::hpp_loglik(v[0], s, t),
        ModelFamily::NhppPl => poisson::nhpp_loglik(v[0], v[1], s, t),
        ModelFamily::HawkesExp | ModelFamily::Hawkes2Exp => {
            let (ks, n) = exp_kernels(family, v);
            exp_kernel::loglik(v[0], &ks[..n], s, t, None)
        }
        ModelFamily::HawkesPl => power_law::loglik(v[0], v[1], v[2], v[3], s, t, None),
    }
}

/// Log-likelihood with its gradient accumulated into `grad` (overwritten).
pub fn value_and_grad_raw(family: ModelFamily, v: &[f64], seq: &EventSequence, grad: &mut [f64]) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let t = seq.duration;
    let s = &seq.onsets;
    match family {
        ModelFamily::Hpp => poisson::hpp_loglik_grad(v[0], s, t, grad),
        ModelFamily::NhppPl => poisson::nhpp_loglik_grad(v[0], v[1], s, t, grad),
        ModelFamily::HawkesExp | ModelFamily::Hawkes2Exp => {
            let (ks, n) = exp_kernels(family, v);
            exp_kernel::loglik(v[0], &ks[..n], s, t, Some(grad))
        }
        ModelFamily::HawkesPl => power_law::loglik(v[0], v[1], v[2], v[3], s, t, Some(grad)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(onsets: &[f64], t: f64) -> EventSequence {
        EventSequence::new("s", onsets.to_vec(), t).unwrap()
    }

    #[test]
    fn family_tags_round_trip() {
        for f in ModelFamily::ALL {
            assert_eq!(f.tag().parse::<ModelFamily>().unwrap(), f);
        }
        assert!("HAWKES_XYZ".parse::<ModelFamily>().is_err());
    }

    #[test]
    fn hpp_intensity_is_constant() {
        let p = ParamSet::hpp(0.163399).unwrap();
        assert_eq!(p.intensity(&seq(&[1.0], 10.0), 5.0), 0.163399);
    }

    #[test]
    fn hawkes_exp_intensity_closed_form() {
        let p = ParamSet::hawkes_exp(0.1, 0.5, 1.0).unwrap();
        let v = p.intensity(&seq(&[0.0], 10.0), 1.0);
        assert!((v - (0.1 + 0.5 * (-1f64).exp())).abs() < 1e-15);
        assert!((v - 0.2839397).abs() < 1e-7);
    }

    #[test]
    fn hawkes_pl_intensity_closed_form() {
        let p = ParamSet::hawkes_pl(0.02, 1.0, 1.0, 2.0).unwrap();
        assert!((p.intensity(&seq(&[0.0], 10.0), 1.0) - 0.27).abs() < 1e-15);
    }

    #[test]
    fn nhpp_diverges_at_zero_for_small_shape() {
        let p = ParamSet::nhpp(0.2, 0.5).unwrap();
        assert_eq!(p.intensity(&seq(&[], 10.0), 0.0), f64::INFINITY);
    }

    #[test]
    fn cumulative_closed_forms() {
        let s = seq(&[1.0, 2.0], 10.0);
        assert_eq!(ParamSet::hpp(0.5).unwrap().cumulative_intensity(&s, 10.0), 5.0);
        let h = ParamSet::hawkes_exp(0.1, 0.5, 1.0).unwrap().cumulative_intensity(&s, 3.0);
        let expected = 0.3 + 0.5 * ((1.0 - (-2f64).exp()) + (1.0 - (-1f64).exp()));
        assert!((h - expected).abs() < 1e-14);
        assert!((h - 1.0483931).abs() < 1e-6);
        let n = ParamSet::nhpp(0.2, 0.5).unwrap().cumulative_intensity(&s, 9.0);
        assert!((n - 0.6).abs() < 1e-15);
    }

    #[test]
    fn log_likelihood_closed_forms() {
        let hpp = ParamSet::hpp(0.5).unwrap();
        let l = hpp.log_likelihood(&seq(&[1.0, 2.0, 3.0], 10.0));
        assert!((l - (3.0 * 0.5f64.ln() - 5.0)).abs() < 1e-12);
        assert!((l - -7.0794415).abs() < 1e-7);

        let hx = ParamSet::hawkes_exp(0.1, 0.5, 1.0).unwrap();
        let l = hx.log_likelihood(&seq(&[1.0, 2.0], 3.0));
        let expected = 0.1f64.ln() + (0.1 + 0.5 * (-1f64).exp()).ln()
            - (0.3 + 0.5 * ((1.0 - (-2f64).exp()) + (1.0 - (-1f64).exp())));
        assert!((l - expected).abs() < 1e-12);
        assert!((l - -4.6099697).abs() < 2e-6);

        let empty = ParamSet::hpp(0.2).unwrap().log_likelihood(&seq(&[], 10.0));
        assert!((empty - -2.0).abs() < 1e-15);
    }

    #[test]
    fn hpp_gradient_closed_form() {
        let g = ParamSet::hpp(0.5).unwrap().grad_log_likelihood(&seq(&[1.0, 2.0, 3.0], 10.0)).unwrap();
        assert!((g[0] - -4.0).abs() < 1e-12);
    }

    #[test]
    fn hawkes_exp_zero_alpha_mu_gradient_matches_hpp() {
        let s = seq(&[0.5, 1.5, 4.0], 10.0);
        let hpp = ParamSet::hpp(0.3).unwrap().grad_log_likelihood(&s).unwrap();
        let mut g = vec![0.0; 3];
        value_and_grad_raw(ModelFamily::HawkesExp, &[0.3, 0.0, 1.2], &s, &mut g);
        assert_eq!(g[0], hpp[0]);
    }

    #[test]
    fn gradient_rejects_boundary() {
        let p = ParamSet::hawkes_exp(0.1, 0.5, 0.0).unwrap();
        assert!(p.grad_log_likelihood(&seq(&[1.0], 2.0)).is_err());
    }

    #[test]
    fn branching_factors() {
        let bf = ParamSet::hawkes_exp(0.02, 0.896642, 0.36).unwrap().branching_factor().unwrap();
        assert_eq!(bf.value, 0.896642);
        assert_eq!(bf.regime, Regime::Subcritical);
        let bf = ParamSet::hawkes_2exp(0.02, 0.555669, 0.77, 0.401525, 0.089).unwrap().branching_factor().unwrap();
        assert!((bf.value - 0.957194).abs() < 1e-12);
        let bf = ParamSet::hawkes_pl(0.02, 1.259888, 1.608953, 1.837775).unwrap().branching_factor().unwrap();
        let expected = 1.259888 * 1.608953f64.powf(1.0 - 1.837775) / 0.837775;
        assert!((bf.value - expected).abs() < 1e-12);
        assert!((bf.value - 1.0096).abs() < 1e-3);
        assert_eq!(bf.regime, Regime::Supercritical);
        assert!(ParamSet::hpp(1.0).unwrap().branching_factor().is_err());
    }

    #[test]
    fn two_exp_is_canonicalized() {
        let p = ParamSet::hawkes_2exp(0.1, 0.4, 0.1, 0.5, 0.8).unwrap();
        assert_eq!(p.values(), &[0.1, 0.5, 0.8, 0.4, 0.1]);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ParamSet::hpp(-1.0).is_err());
        assert!(ParamSet::hpp(f64::NAN).is_err());
        assert!(ParamSet::hawkes_pl(0.1, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn json_shape() {
        let p = ParamSet::hawkes_exp(0.1, 0.5, 1.0).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"family":"HAWKES_EXP","params":{"alpha":0.5,"beta":1.0,"mu":0.1}}"#);
        let back: ParamSet = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<ParamSet>(r#"{"family":"HPP","params":{"mu":-1}}"#).is_err());
    }

    #[test]
    fn jumps_at_onsets() {
        let s = seq(&[2.0], 10.0);
        for p in [
            ParamSet::hawkes_exp(0.1, 0.5, 1.3).unwrap(),
            ParamSet::hawkes_2exp(0.1, 0.5, 1.3, 0.2, 0.1).unwrap(),
            ParamSet::hawkes_pl(0.1, 0.7, 0.5, 1.8).unwrap(),
        ] {
            let jump = p.intensity_after(&s, 2.0) - p.intensity(&s, 2.0);
            let near = p.intensity(&s, 2.0 + 1e-12) - p.intensity(&s, 2.0);
            assert!((jump - p.kernel_at_zero()).abs() < 1e-12);
            assert!((near - jump).abs() < 1e-9 * jump.max(1.0));
        }
    }
}
