//! Predictive scoring: PSIS-LOO, the MAPE window-forecast protocol,
//! window occupancy probabilities and ROC-AUC.

use std::path::Path;

use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{Dataset, EventSequence};
use crate::error::{Result, TppError};
use crate::infer::PosteriorSamples;
use crate::models::{self, ModelFamily, ParamSet};
use crate::rng::{derive_seed, substream};
use crate::simulate::{forecast_counts, SimConfig};
use crate::stats::{self, logsumexp};

pub const MIN_LOO_DRAWS: usize = 100;
pub const DEFAULT_DTS: [f64; 6] = [1.0, 5.0, 10.0, 15.0, 20.0, 25.0];
pub const DEFAULT_MAPE_STARTS: usize = 25;
pub const DEFAULT_MAPE_TRAJ: usize = 75;
pub const DEFAULT_AUC_STARTS: usize = 100;

/// Log-likelihood of every session at every draw, `values[draw][session]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoglikMatrix {
    pub session_ids: Vec<String>,
    pub counts: Vec<usize>,
    pub values: Vec<Vec<f64>>,
    /// `(draw, session)` cells that are not finite.
    pub nonfinite: Vec<(usize, usize)>,
}

fn session_for(family: ModelFamily, s: &EventSequence) -> std::borrow::Cow<'_, EventSequence> {
    if family == ModelFamily::NhppPl && s.onsets.first() == Some(&0.0) {
        let mut c = s.clone();
        c.onsets.retain(|&t| t > 0.0);
        std::borrow::Cow::Owned(c)
    } else {
        std::borrow::Cow::Borrowed(s)
    }
}

pub fn pointwise_loglik(draws: &[ParamSet], ds: &Dataset) -> Result<LoglikMatrix> {
    if draws.is_empty() || ds.is_empty() {
        return Err(TppError::invalid("pointwise log-likelihood needs draws and sessions"));
    }
    let family = draws[0].family();
    if draws.iter().any(|d| d.family() != family) {
        return Err(TppError::invalid("draws mix model families"));
    }
    let sessions: Vec<_> = ds.sequences.iter().map(|s| session_for(family, s)).collect();
    let values: Vec<Vec<f64>> = draws
        .par_iter()
        .map(|d| sessions.iter().map(|s| d.log_likelihood(s)).collect())
        .collect();
    let mut nonfinite = Vec::new();
    for (m, row) in values.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            if !v.is_finite() {
                nonfinite.push((m, i));
            }
        }
    }
    Ok(LoglikMatrix {
        session_ids: ds.sequences.iter().map(|s| s.session_id.clone()).collect(),
        counts: ds.sequences.iter().map(EventSequence::len).collect(),
        values,
        nonfinite,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KCategory {
    Good,
    Ok,
    Bad,
    Undefined,
}

impl KCategory {
    pub fn from_khat(k: Option<f64>) -> Self {
        match k {
            None => KCategory::Undefined,
            Some(k) if k <= 0.5 => KCategory::Good,
            Some(k) if k <= 0.7 => KCategory::Ok,
            Some(_) => KCategory::Bad,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            KCategory::Good => "good",
            KCategory::Ok => "ok",
            KCategory::Bad => "bad",
            KCategory::Undefined => "undefined",
        }
    }
}

/// Zhang–Stephens estimate of the generalized Pareto `(k, σ)` for sorted
/// exceedances, with a weak prior pulling `k` toward 0.5.
fn gpd_fit(x: &[f64]) -> (f64, f64) {
    const PRIOR_BS: f64 = 3.0;
    const PRIOR_K: f64 = 10.0;
    let n = x.len();
    let nf = n as f64;
    let m = 30 + (nf.sqrt() as usize);
    let quart = x[((nf / 4.0 + 0.5) as usize).max(1) - 1];
    let last = x[n - 1];
    let mut b: Vec<f64> = (1..=m)
        .map(|j| (1.0 - (m as f64 / (j as f64 - 0.5)).sqrt()) / (PRIOR_BS * quart) + 1.0 / last)
        .collect();
    let k_of = |b: f64| x.iter().map(|&xi| (-b * xi).ln_1p()).sum::<f64>() / nf;
    let k_ary: Vec<f64> = b.iter().map(|&bj| k_of(bj)).collect();
    let len_scale: Vec<f64> = b
        .iter()
        .zip(&k_ary)
        .map(|(&bj, &kj)| nf * ((-(bj / kj)).ln() - kj - 1.0))
        .collect();
    let mut w: Vec<f64> = len_scale
        .iter()
        .map(|&li| 1.0 / len_scale.iter().map(|&lj| (lj - li).exp()).sum::<f64>())
        .collect();
    let keep: Vec<bool> = w.iter().map(|&wi| wi >= 10.0 * f64::EPSILON).collect();
    if keep.iter().any(|k| !k) {
        let mut i = 0;
        b.retain(|_| {
            i += 1;
            keep[i - 1]
        });
        w.retain(|&wi| wi >= 10.0 * f64::EPSILON);
    }
    let wsum: f64 = w.iter().sum();
    let b_post: f64 = b.iter().zip(&w).map(|(bj, wj)| bj * wj / wsum).sum();
    let k_post = k_of(b_post);
    let sigma = -k_post / b_post;
    let k = (nf * k_post + PRIOR_K * 0.5) / (nf + PRIOR_K);
    (k, sigma)
}

fn gpd_inv(p: f64, k: f64, sigma: f64) -> f64 {
    if k.abs() < f64::EPSILON {
        -sigma * (-p).ln_1p()
    } else {
        sigma * (-k * (-p).ln_1p()).exp_m1() / k
    }
}

/// Pareto-smoothed normalized log weights for one vector of log ratios.
pub fn psis_log_weights(log_ratios: &[f64]) -> (Vec<f64>, Option<f64>) {
    let n = log_ratios.len();
    let max = log_ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut x: Vec<f64> = log_ratios.iter().map(|v| v - max).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let tail_len_target = (0.2 * n as f64).min(3.0 * (n as f64).sqrt()).ceil() as usize;
    let cutoff_pos = n.saturating_sub(tail_len_target + 1);
    let cutoff = x[order[cutoff_pos]].max(f64::MIN_POSITIVE.ln());
    let exp_cutoff = cutoff.exp();
    let mut tail: Vec<usize> = (0..n).filter(|&i| x[i] > cutoff).collect();
    let k = if tail.len() <= 4 {
        None
    } else {
        tail.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
        let exceed: Vec<f64> = tail.iter().map(|&i| x[i].exp() - exp_cutoff).collect();
        let (k, sigma) = gpd_fit(&exceed);
        if k.is_finite() && sigma > 0.0 {
            let len = tail.len() as f64;
            for (r, &i) in tail.iter().enumerate() {
                let p = (r as f64 + 0.5) / len;
                x[i] = (gpd_inv(p, k, sigma) + exp_cutoff).ln();
            }
            for v in x.iter_mut() {
                if *v > 0.0 {
                    *v = 0.0;
                }
            }
        }
        Some(k)
    };
    let lse = logsumexp(&x);
    x.iter_mut().for_each(|v| *v -= lse);
    (x, k)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LooSession {
    pub session_id: String,
    pub elpd: f64,
    /// `elpd / max(1, J)`.
    pub elpd_normalized: f64,
    pub k_hat: Option<f64>,
    pub category: KCategory,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LooResult {
    pub elpd: f64,
    pub se: f64,
    pub p_loo: f64,
    pub n_draws: usize,
    pub sessions: Vec<LooSession>,
}

impl LooResult {
    pub fn n_bad(&self) -> usize {
        self.sessions.iter().filter(|s| s.category == KCategory::Bad).count()
    }
}

pub fn psis_loo(ll: &LoglikMatrix) -> Result<LooResult> {
    let m = ll.values.len();
    if m < MIN_LOO_DRAWS {
        return Err(TppError::invalid(format!(
            "PSIS-LOO needs at least {MIN_LOO_DRAWS} draws, got {m}"
        )));
    }
    if let Some(&(d, s)) = ll.nonfinite.first() {
        return Err(TppError::Domain(format!(
            "non-finite log-likelihood for session {} at draw {d}",
            ll.session_ids[s]
        )));
    }
    let n = ll.session_ids.len();
    let per: Vec<(LooSession, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let col: Vec<f64> = ll.values.iter().map(|r| r[i]).collect();
            let first = col[0];
            let (elpd, k) = if col.iter().all(|&v| v == first) {
                (first, None)
            } else {
                let neg: Vec<f64> = col.iter().map(|v| -v).collect();
                let (lw, k) = psis_log_weights(&neg);
                let terms: Vec<f64> = lw.iter().zip(&col).map(|(w, l)| w + l).collect();
                (logsumexp(&terms), k)
            };
            let lppd = logsumexp(&col) - (m as f64).ln();
            let s = LooSession {
                session_id: ll.session_ids[i].clone(),
                elpd,
                elpd_normalized: elpd / (ll.counts[i].max(1) as f64),
                k_hat: k,
                category: KCategory::from_khat(k),
            };
            (s, lppd)
        })
        .collect();
    let elpds: Vec<f64> = per.iter().map(|p| p.0.elpd).collect();
    let elpd: f64 = elpds.iter().sum();
    let lppd: f64 = per.iter().map(|p| p.1).sum();
    let mean = elpd / n as f64;
    let var_pop = elpds.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n as f64;
    Ok(LooResult {
        elpd,
        se: (n as f64 * var_pop).sqrt(),
        p_loo: lppd - elpd,
        n_draws: m,
        sessions: per.into_iter().map(|p| p.0).collect(),
    })
}

/// Probability of at least one onset on `(t_start, t_start + dt]` given the
/// onsets at or before `t_start`.
pub fn occupancy_probability(theta: &ParamSet, seq: &EventSequence, t_start: f64, dt: f64) -> f64 {
    let h = seq.history_through(t_start);
    let d = models::expected_count_between(theta.family(), theta.values(), h, t_start, t_start + dt);
    (-(-d).exp_m1()).clamp(0.0, 1.0)
}

pub fn mape(true_count: usize, predicted: f64) -> f64 {
    100.0 * (true_count as f64 - predicted).abs() / (true_count.max(1) as f64)
}

/// Area under the ROC curve by the Mann–Whitney statistic with midranks;
/// `None` when only one class is present.
pub fn roc_auc(labels: &[bool], scores: &[f64]) -> Option<f64> {
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let ranks = stats::midranks(scores);
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l).map(|(r, _)| r).sum();
    let np = n_pos as f64;
    Some((rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowSample {
    pub session_id: String,
    pub t_start: f64,
    pub dt: f64,
    pub true_count: usize,
    pub label: bool,
    pub predicted_median: Option<f64>,
    pub mape: Option<f64>,
    pub occupancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapeSummary {
    pub dt: f64,
    pub mape: f64,
    pub n_windows: usize,
    pub sessions_used: usize,
    pub sessions_skipped: usize,
    #[serde(skip)]
    pub windows: Vec<WindowSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AucSummary {
    pub dt: f64,
    pub auc: Option<f64>,
    pub n_positive: usize,
    pub n_negative: usize,
    pub sessions_used: usize,
    pub sessions_skipped: usize,
    #[serde(skip)]
    pub windows: Vec<WindowSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolConfig {
    pub seed: u64,
    pub max_events: usize,
    /// Average occupancy over all draws instead of using the posterior mean.
    pub draw_averaged: bool,
}

impl ProtocolConfig {
    pub fn new(seed: u64) -> Self {
        ProtocolConfig {
            seed,
            max_events: crate::simulate::DEFAULT_MAX_EVENTS,
            draw_averaged: false,
        }
    }
}

fn eligible(ds: &Dataset, dt: f64) -> Vec<&EventSequence> {
    ds.sequences.iter().filter(|s| s.duration >= 2.0 * dt).collect()
}

fn window_starts(seed: u64, label: &str, dt: f64, seq: &EventSequence, n: usize) -> Vec<f64> {
    let mut rng = substream(derive_seed(seed, label, dt.to_bits()), &seq.session_id, 0);
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            dt + u * (seq.duration - 2.0 * dt)
        })
        .collect()
}

fn score(theta: &ParamSet, draws: &[ParamSet], draw_averaged: bool, seq: &EventSequence, t: f64, dt: f64) -> f64 {
    if draw_averaged {
        draws.iter().map(|d| occupancy_probability(d, seq, t, dt)).sum::<f64>() / draws.len() as f64
    } else {
        occupancy_probability(theta, seq, t, dt)
    }
}

/// Median-forecast MAPE over `n_starts` random windows per eligible session.
pub fn mape_protocol(
    draws: &[ParamSet],
    ds: &Dataset,
    dt: f64,
    n_starts: usize,
    n_traj: usize,
    cfg: &ProtocolConfig,
) -> Result<MapeSummary> {
    if draws.is_empty() {
        return Err(TppError::invalid("MAPE protocol needs posterior draws"));
    }
    let used = eligible(ds, dt);
    if used.is_empty() {
        return Err(TppError::invalid(format!("no session is long enough for dt = {dt}")));
    }
    let theta = mean_param(draws)?;
    let sim = SimConfig {
        max_events: cfg.max_events,
        ..SimConfig::new(0)
    };
    let per_session: Vec<Vec<WindowSample>> = used
        .par_iter()
        .map(|seq| {
            let starts = window_starts(cfg.seed, "mape", dt, seq, n_starts);
            starts
                .iter()
                .enumerate()
                .map(|(k, &t)| {
                    let seed = derive_seed(derive_seed(cfg.seed, "mape-traj", dt.to_bits()), &seq.session_id, k as u64);
                    let f = forecast_counts(draws, seq, t, dt, n_traj, &SimConfig { seed, ..sim })?;
                    let truth = seq.count_in(t, t + dt);
                    let med = f.median();
                    Ok(WindowSample {
                        session_id: seq.session_id.clone(),
                        t_start: t,
                        dt,
                        true_count: truth,
                        label: truth >= 1,
                        predicted_median: Some(med),
                        mape: Some(mape(truth, med)),
                        occupancy: occupancy_probability(&theta, seq, t, dt),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let windows: Vec<WindowSample> = per_session.into_iter().flatten().collect();
    let vals: Vec<f64> = windows.iter().filter_map(|w| w.mape).collect();
    Ok(MapeSummary {
        dt,
        mape: if vals.is_empty() { f64::NAN } else { stats::mean(&vals) },
        n_windows: windows.len(),
        sessions_used: used.len(),
        sessions_skipped: ds.len() - used.len(),
        windows,
    })
}

/// ROC-AUC of occupancy scores against "at least one onset" labels.
pub fn rocauc_protocol(
    draws: &[ParamSet],
    ds: &Dataset,
    dt: f64,
    n_starts: usize,
    cfg: &ProtocolConfig,
) -> Result<AucSummary> {
    if draws.is_empty() {
        return Err(TppError::invalid("ROC-AUC protocol needs posterior draws"));
    }
    let used = eligible(ds, dt);
    if used.is_empty() {
        return Err(TppError::invalid(format!("no session is long enough for dt = {dt}")));
    }
    let theta = mean_param(draws)?;
    let windows: Vec<WindowSample> = used
        .par_iter()
        .map(|seq| {
            window_starts(cfg.seed, "auc", dt, seq, n_starts)
                .into_iter()
                .map(|t| {
                    let truth = seq.count_in(t, t + dt);
                    WindowSample {
                        session_id: seq.session_id.clone(),
                        t_start: t,
                        dt,
                        true_count: truth,
                        label: truth >= 1,
                        predicted_median: None,
                        mape: None,
                        occupancy: score(&theta, draws, cfg.draw_averaged, seq, t, dt),
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat();
    let labels: Vec<bool> = windows.iter().map(|w| w.label).collect();
    let scores: Vec<f64> = windows.iter().map(|w| w.occupancy).collect();
    let n_positive = labels.iter().filter(|&&l| l).count();
    Ok(AucSummary {
        dt,
        auc: roc_auc(&labels, &scores),
        n_positive,
        n_negative: labels.len() - n_positive,
        sessions_used: used.len(),
        sessions_skipped: ds.len() - used.len(),
        windows,
    })
}

/// Componentwise mean of the draws.
pub fn mean_param(draws: &[ParamSet]) -> Result<ParamSet> {
    let family = draws[0].family();
    let mut v = vec![0.0; family.dim()];
    for d in draws {
        for (a, b) in v.iter_mut().zip(d.values()) {
            *a += b;
        }
    }
    v.iter_mut().for_each(|a| *a /= draws.len() as f64);
    ParamSet::new(family, v)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalConfig {
    pub seed: u64,
    pub dts: Vec<f64>,
    pub mape_starts: usize,
    pub mape_traj: usize,
    pub auc_starts: usize,
    pub draw_averaged: bool,
    pub max_events: usize,
}

impl EvalConfig {
    pub fn new(seed: u64) -> Self {
        EvalConfig {
            seed,
            dts: DEFAULT_DTS.to_vec(),
            mape_starts: DEFAULT_MAPE_STARTS,
            mape_traj: DEFAULT_MAPE_TRAJ,
            auc_starts: DEFAULT_AUC_STARTS,
            draw_averaged: false,
            max_events: crate::simulate::DEFAULT_MAX_EVENTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub family: ModelFamily,
    pub loo: LooResult,
    pub mape: Vec<MapeSummary>,
    pub auc: Vec<AucSummary>,
}

pub fn run_evaluation(ds: &Dataset, samples: &PosteriorSamples, cfg: &EvalConfig) -> Result<EvaluationReport> {
    let draws = samples.param_sets()?;
    let loo = psis_loo(&pointwise_loglik(&draws, ds)?)?;
    let pc = ProtocolConfig {
        seed: cfg.seed,
        max_events: cfg.max_events,
        draw_averaged: cfg.draw_averaged,
    };
    let mut mape = Vec::new();
    let mut auc = Vec::new();
    for &dt in &cfg.dts {
        mape.push(mape_protocol(&draws, ds, dt, cfg.mape_starts, cfg.mape_traj, &pc)?);
        auc.push(rocauc_protocol(&draws, ds, dt, cfg.auc_starts, &pc)?);
    }
    Ok(EvaluationReport {
        family: samples.family,
        loo,
        mape,
        auc,
    })
}

impl EvaluationReport {
    /// Writes `loo.csv`, `windows.csv` and `metrics.json` into `dir`.
    pub fn write(&self, dir: &Path, extra: serde_json::Value) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("loo.csv"))?;
        w.write_record(["session_id", "elpd", "elpd_normalized", "k_hat", "category"])?;
        for s in &self.loo.sessions {
            w.write_record([
                s.session_id.clone(),
                s.elpd.to_string(),
                s.elpd_normalized.to_string(),
                s.k_hat.map(|k| k.to_string()).unwrap_or_else(|| "NA".into()),
                s.category.as_str().to_string(),
            ])?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("windows.csv"))?;
        w.write_record([
            "protocol", "session_id", "t_start", "dt", "true_count", "label", "predicted_median", "mape", "occupancy",
        ])?;
        let rows = self
            .mape
            .iter()
            .flat_map(|m| m.windows.iter().map(|w| ("mape", w)))
            .chain(self.auc.iter().flat_map(|a| a.windows.iter().map(|w| ("auc", w))));
        for (p, x) in rows {
            w.write_record([
                p.to_string(),
                x.session_id.clone(),
                x.t_start.to_string(),
                x.dt.to_string(),
                x.true_count.to_string(),
                u8::from(x.label).to_string(),
                x.predicted_median.map(|v| v.to_string()).unwrap_or_default(),
                x.mape.map(|v| v.to_string()).unwrap_or_default(),
                x.occupancy.to_string(),
            ])?;
        }
        w.flush()?;

        let metrics = serde_json::json!({
            "family": self.family,
            "elpd": { "value": self.loo.elpd, "se": self.loo.se, "p_loo": self.loo.p_loo,
                      "n_sessions": self.loo.sessions.len(), "n_bad_k": self.loo.n_bad() },
            "mape": self.mape,
            "auc": self.auc,
            "extra": extra,
        });
        let mut f = std::fs::File::create(dir.join("metrics.json"))?;
        serde_json::to_writer_pretty(&mut f, &metrics)?;
        use std::io::Write;
        writeln!(f)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mape_examples() {
        assert_eq!(mape(4, 3.0), 25.0);
        assert_eq!(mape(0, 2.0), 200.0);
        assert_eq!(mape(5, 5.0), 0.0);
    }

    #[test]
    fn occupancy_examples() {
        let s = EventSequence::new("s", vec![], 100.0).unwrap();
        let p = occupancy_probability(&ParamSet::hpp(0.1).unwrap(), &s, 10.0, 5.0);
        assert!((p - 0.393469).abs() < 1e-6);
        let h = ParamSet::hawkes_exp(0.0, 0.5, 1.0).unwrap();
        assert_eq!(occupancy_probability(&h, &s, 10.0, 5.0), 0.0);
        let hp = ParamSet::hpp(0.1).unwrap();
        let mut prev = 1.0;
        for dt in [1.0, 0.1, 0.01, 0.001] {
            let p = occupancy_probability(&hp, &s, 10.0, dt);
            assert!(p < prev);
            prev = p;
        }
    }

    #[test]
    fn occupancy_rises_after_onset_for_hawkes() {
        let h = ParamSet::hawkes_exp(0.05, 0.5, 1.0).unwrap();
        let without = EventSequence::new("s", vec![2.0], 100.0).unwrap();
        let with = EventSequence::new("s", vec![2.0, 9.9], 100.0).unwrap();
        assert!(occupancy_probability(&h, &with, 10.0, 5.0) > occupancy_probability(&h, &without, 10.0, 5.0));
    }

    #[test]
    fn auc_examples() {
        let labels = [false, false, true, true];
        assert_eq!(roc_auc(&labels, &[0.1, 0.2, 0.8, 0.9]), Some(1.0));
        assert_eq!(roc_auc(&labels, &[0.5; 4]), Some(0.5));
        assert_eq!(roc_auc(&[true, true], &[0.1, 0.2]), None);
    }

    #[test]
    fn categories() {
        assert_eq!(KCategory::from_khat(Some(0.49)), KCategory::Good);
        assert_eq!(KCategory::from_khat(Some(0.69)), KCategory::Ok);
        assert_eq!(KCategory::from_khat(Some(0.71)), KCategory::Bad);
        assert_eq!(KCategory::from_khat(None), KCategory::Undefined);
    }

    #[test]
    fn identical_draws_give_plain_loglik() {
        let ds = Dataset::new(vec![EventSequence::new("a", vec![1.0, 2.0], 10.0).unwrap()]).unwrap();
        let draws = vec![ParamSet::hpp(0.3).unwrap(); 150];
        let ll = pointwise_loglik(&draws, &ds).unwrap();
        let r = psis_loo(&ll).unwrap();
        assert!((r.elpd - draws[0].log_likelihood(&ds.sequences[0])).abs() < 1e-12);
        assert_eq!(r.sessions[0].k_hat, None);
        assert!(psis_loo(&pointwise_loglik(&draws[..50], &ds).unwrap()).is_err());
    }

    #[test]
    fn gpd_fit_recovers_shape() {
        // exact GPD quantiles with k = 0.3, σ = 2
        let n = 2000;
        let x: Vec<f64> = (0..n).map(|i| gpd_inv((i as f64 + 0.5) / n as f64, 0.3, 2.0)).collect();
        let (k, s) = gpd_fit(&x);
        assert!((k - 0.3).abs() < 0.05, "k {k}");
        assert!((s - 2.0).abs() < 0.2, "sigma {s}");
    }
}
