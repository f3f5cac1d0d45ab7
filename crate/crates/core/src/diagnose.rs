//! Goodness-of-fit: random-time-change residuals and QQ data, raw
//! residuals, count-distribution comparison, Ripley's K and the
//! inter-onset quantile/outlier audit.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{Dataset, EventSequence};
use crate::error::{Result, TppError};
use crate::models::{self, ParamSet};
use crate::simulate::{count_distribution_sample, SimConfig};
use crate::stats;

pub const KDE_MIN_BANDWIDTH: f64 = 0.5;
pub const RIPLEY_MIN_ONSETS: usize = 15;
pub const AUDIT_MIN_EVENTS: usize = 5;

/// `Λ*(t_j)` at every onset, using the left-limit history.
pub fn rtc_transform(theta: &ParamSet, seq: &EventSequence) -> Vec<f64> {
    models::compensator_at_onsets(theta.family(), theta.values(), &seq.onsets)
}

/// Transformed inter-onsets, the first measured from `τ(0) = 0`. The
/// censored interval after the last onset is not included.
pub fn rtc_gaps(theta: &ParamSet, seq: &EventSequence) -> Vec<f64> {
    let tau = rtc_transform(theta, seq);
    let mut prev = 0.0;
    tau.into_iter()
        .map(|t| {
            let g = t - prev;
            prev = t;
            g
        })
        .collect()
}

/// Transformed inter-onsets pooled over all sessions, in dataset order.
pub fn pooled_rtc_gaps(theta: &ParamSet, ds: &Dataset) -> Vec<f64> {
    ds.sequences.par_iter().map(|s| rtc_gaps(theta, s)).collect::<Vec<_>>().concat()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QQData {
    pub empirical: Vec<f64>,
    pub theoretical: Vec<f64>,
}

/// Order statistics against Exp(1) quantiles at `(i − 0.5)/n`.
pub fn qq_points(gaps: &[f64]) -> Result<QQData> {
    if gaps.len() < 2 {
        return Err(TppError::invalid("QQ data needs at least two inter-onsets"));
    }
    let n = gaps.len() as f64;
    let theoretical = (1..=gaps.len())
        .map(|i| -(-(i as f64 - 0.5) / n).ln_1p())
        .collect();
    Ok(QQData {
        empirical: stats::sorted(gaps),
        theoretical,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RawResidual {
    pub session_id: String,
    pub count: usize,
    pub compensator: f64,
    /// `N(T) − Λ*(T)`.
    pub residual: f64,
}

pub fn raw_residual(theta: &ParamSet, seq: &EventSequence) -> RawResidual {
    let compensator = theta.cumulative_intensity(seq, seq.duration);
    RawResidual {
        session_id: seq.session_id.clone(),
        count: seq.len(),
        compensator,
        residual: seq.len() as f64 - compensator,
    }
}

/// 1-D Wasserstein-1 distance between two empirical distributions.
pub fn wasserstein_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(TppError::invalid("Wasserstein distance needs two nonempty samples"));
    }
    let sa = stats::sorted(a);
    let sb = stats::sorted(b);
    if sa.len() == sb.len() {
        let s: f64 = sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).sum();
        return Ok(s / sa.len() as f64);
    }
    // ∫₀¹ |F_a⁻¹(u) − F_b⁻¹(u)| du over the merged quantile breakpoints
    let (na, nb) = (sa.len(), sb.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut u = 0.0;
    let mut total = 0.0;
    while i < na && j < nb {
        let ua = (i + 1) as f64 / na as f64;
        let ub = (j + 1) as f64 / nb as f64;
        let next = ua.min(ub);
        total += (next - u) * (sa[i] - sb[j]).abs();
        u = next;
        if ua <= ub {
            i += 1;
        }
        if ub <= ua {
            j += 1;
        }
    }
    Ok(total)
}

/// Silverman's rule of thumb, floored at [`KDE_MIN_BANDWIDTH`].
pub fn kde_bandwidth(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let s = stats::sorted(samples);
    let sd = stats::sd(samples);
    let iqr = stats::quantile_sorted(&s, 0.75) - stats::quantile_sorted(&s, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = 0.9 * spread * n.powf(-0.2);
    if h.is_finite() {
        h.max(KDE_MIN_BANDWIDTH)
    } else {
        KDE_MIN_BANDWIDTH
    }
}

/// Gaussian kernel density estimate evaluated on `grid`.
pub fn kde_curve(samples: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    if samples.len() < 2 {
        return Err(TppError::invalid("KDE needs at least two samples"));
    }
    let h = kde_bandwidth(samples);
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    Ok(grid
        .iter()
        .map(|&x| {
            norm * samples
                .iter()
                .map(|&s| {
                    let z = (x - s) / h;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
        })
        .collect())
}

/// Ripley's K with the boundary weights `w = 1` if `|t_i − t_j| ≤
/// min(t_i, T − t_i)` and 2 otherwise. The reference under a homogeneous
/// Poisson process is `2t`.
pub fn ripley_k(seq: &EventSequence, lags: &[f64]) -> Result<Vec<f64>> {
    let j = seq.len();
    if j < 2 {
        return Err(TppError::Domain(format!(
            "Ripley K needs at least 2 onsets; session {} has {j}",
            seq.session_id
        )));
    }
    let t_end = seq.duration;
    let s = &seq.onsets;
    // weighted pair distances, sorted, with cumulative weights
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(j * (j - 1));
    for (a, &ti) in s.iter().enumerate() {
        let edge = ti.min(t_end - ti);
        for (b, &tj) in s.iter().enumerate() {
            if a != b {
                let d = (ti - tj).abs();
                pairs.push((d, if d <= edge { 1.0 } else { 2.0 }));
            }
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut cum = Vec::with_capacity(pairs.len());
    let mut acc = 0.0;
    for p in &pairs {
        acc += p.1;
        cum.push(acc);
    }
    let scale = t_end / (j * j) as f64;
    Ok(lags
        .iter()
        .map(|&t| {
            let k = pairs.partition_point(|p| p.0 <= t);
            if k == 0 {
                0.0
            } else {
                scale * cum[k - 1]
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct AuditStats {
    pub n: f64,
    pub q90: f64,
    pub q95: f64,
    pub q99: f64,
    pub max: f64,
    pub ratio_95_90: f64,
    pub ratio_99_95: f64,
    pub ratio_max_90: f64,
    pub ratio_max_99: f64,
    pub outliers: f64,
}

impl AuditStats {
    pub const COLUMNS: [&'static str; 10] = [
        "n", "q90", "q95", "q99", "max", "ratio_95_90", "ratio_99_95", "ratio_max_90", "ratio_max_99", "outliers",
    ];

    pub fn values(&self) -> [f64; 10] {
        [
            self.n,
            self.q90,
            self.q95,
            self.q99,
            self.max,
            self.ratio_95_90,
            self.ratio_99_95,
            self.ratio_max_90,
            self.ratio_max_99,
            self.outliers,
        ]
    }

    fn from_values(v: [f64; 10]) -> Self {
        AuditStats {
            n: v[0],
            q90: v[1],
            q95: v[2],
            q99: v[3],
            max: v[4],
            ratio_95_90: v[5],
            ratio_99_95: v[6],
            ratio_max_90: v[7],
            ratio_max_99: v[8],
            outliers: v[9],
        }
    }
}

/// Quantiles, ratios and the count of gaps above `2·Q99` for one set of
/// inter-onset gaps.
pub fn audit_gaps(gaps: &[f64]) -> Result<AuditStats> {
    if gaps.is_empty() {
        return Err(TppError::invalid("audit needs at least one inter-onset gap"));
    }
    let s = stats::sorted(gaps);
    let q90 = stats::quantile_sorted(&s, 0.90);
    let q95 = stats::quantile_sorted(&s, 0.95);
    let q99 = stats::quantile_sorted(&s, 0.99);
    let max = *s.last().unwrap();
    Ok(AuditStats {
        n: gaps.len() as f64,
        q90,
        q95,
        q99,
        max,
        ratio_95_90: q95 / q90,
        ratio_99_95: q99 / q95,
        ratio_max_90: max / q90,
        ratio_max_99: max / q99,
        outliers: gaps.iter().filter(|&&g| g > 2.0 * q99).count() as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub source: String,
    pub n_sessions: usize,
    /// `None` when no session has enough events.
    pub mean: Option<AuditStats>,
    pub sd: Option<AuditStats>,
}

/// Per-session audit over sessions with at least [`AUDIT_MIN_EVENTS`]
/// onsets, aggregated as mean and sd across sessions.
pub fn quantile_outlier_audit(source: &str, sequences: &[EventSequence]) -> Result<AuditRow> {
    let rows: Vec<AuditStats> = sequences
        .iter()
        .filter(|s| s.len() >= AUDIT_MIN_EVENTS)
        .map(|s| {
            let gaps: Vec<f64> = s.onsets.windows(2).map(|w| w[1] - w[0]).collect();
            audit_gaps(&gaps)
        })
        .collect::<Result<_>>()?;
    if rows.is_empty() {
        return Ok(AuditRow {
            source: source.into(),
            n_sessions: 0,
            mean: None,
            sd: None,
        });
    }
    let mut mean = [0.0; 10];
    let mut sd = [0.0; 10];
    for c in 0..10 {
        let col: Vec<f64> = rows.iter().map(|r| r.values()[c]).collect();
        mean[c] = stats::mean(&col);
        sd[c] = if col.len() > 1 { stats::sd(&col) } else { 0.0 };
    }
    Ok(AuditRow {
        source: source.into(),
        n_sessions: rows.len(),
        mean: Some(AuditStats::from_values(mean)),
        sd: Some(AuditStats::from_values(sd)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RipleyCurve {
    pub session_id: String,
    pub k: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnoseConfig {
    pub seed: u64,
    pub trials: usize,
    pub ripley_min_onsets: usize,
    pub ripley_lags: Vec<f64>,
    pub kde_points: usize,
    pub max_events: usize,
}

impl DiagnoseConfig {
    pub fn new(seed: u64) -> Self {
        DiagnoseConfig {
            seed,
            trials: crate::simulate::DEFAULT_COUNT_TRIALS,
            ripley_min_onsets: RIPLEY_MIN_ONSETS,
            ripley_lags: (1..=20).map(f64::from).collect(),
            kde_points: 200,
            max_events: crate::simulate::DEFAULT_MAX_EVENTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticReport {
    /// Identifies the posterior archive and seed behind the report.
    pub source: String,
    pub seed: u64,
    pub theta: ParamSet,
    pub residuals: Vec<RawResidual>,
    pub qq: Option<QQData>,
    pub ks: Option<stats::KsResult>,
    pub counts_model: Vec<Vec<usize>>,
    pub counts_empirical: Vec<usize>,
    pub kde_grid: Vec<f64>,
    pub kde_model: Vec<f64>,
    pub kde_empirical: Vec<f64>,
    pub wd_trials: Vec<f64>,
    pub wd: MeanSd,
    pub ripley_lags: Vec<f64>,
    pub ripley: Vec<RipleyCurve>,
    pub audit: Vec<AuditRow>,
}

/// Runs the full suite. `theta` (usually the posterior mean) drives the
/// residual, RTC and simulated-audit parts; `draws` drive the count
/// distribution.
pub fn run_diagnostics(
    ds: &Dataset,
    theta: &ParamSet,
    draws: &[ParamSet],
    source: &str,
    cfg: &DiagnoseConfig,
) -> Result<DiagnosticReport> {
    if ds.is_empty() {
        return Err(TppError::invalid("diagnostics need a nonempty dataset"));
    }
    let residuals: Vec<RawResidual> = ds.sequences.par_iter().map(|s| raw_residual(theta, s)).collect();
    let gaps = pooled_rtc_gaps(theta, ds);
    let (qq, ks) = if gaps.len() >= 2 {
        (Some(qq_points(&gaps)?), Some(stats::ks_test_exp1(&gaps)))
    } else {
        (None, None)
    };

    let sim = SimConfig {
        max_events: cfg.max_events,
        ..SimConfig::new(cfg.seed)
    };
    let durations = ds.durations();
    let counts_model = count_distribution_sample(draws, &durations, cfg.trials, &sim)?;
    let counts_empirical: Vec<usize> = ds.sequences.iter().map(EventSequence::len).collect();
    let emp: Vec<f64> = counts_empirical.iter().map(|&c| c as f64).collect();
    let wd_trials: Vec<f64> = counts_model
        .iter()
        .map(|t| {
            let m: Vec<f64> = t.iter().map(|&c| c as f64).collect();
            wasserstein_1d(&m, &emp)
        })
        .collect::<Result<_>>()?;
    let wd = MeanSd {
        mean: stats::mean(&wd_trials),
        sd: if wd_trials.len() > 1 { stats::sd(&wd_trials) } else { 0.0 },
    };

    let pooled_model: Vec<f64> = counts_model.iter().flatten().map(|&c| c as f64).collect();
    let hi = pooled_model.iter().chain(&emp).copied().fold(0.0, f64::max) + 3.0;
    let lo = -3.0;
    let kde_grid: Vec<f64> = (0..cfg.kde_points)
        .map(|i| lo + (hi - lo) * i as f64 / (cfg.kde_points.max(2) - 1) as f64)
        .collect();
    let (kde_model, kde_empirical) = if pooled_model.len() >= 2 && emp.len() >= 2 {
        (kde_curve(&pooled_model, &kde_grid)?, kde_curve(&emp, &kde_grid)?)
    } else {
        (Vec::new(), Vec::new())
    };

    let ripley: Vec<RipleyCurve> = ds
        .sequences
        .iter()
        .filter(|s| s.len() >= cfg.ripley_min_onsets.max(2))
        .map(|s| {
            Ok(RipleyCurve {
                session_id: s.session_id.clone(),
                k: ripley_k(s, &cfg.ripley_lags)?,
            })
        })
        .collect::<Result<_>>()?;

    // one synthetic session per observed duration for the audit
    let mut synthetic = Vec::with_capacity(ds.len());
    for (i, s) in ds.sequences.iter().enumerate() {
        let mut rng = crate::rng::substream(cfg.seed, "audit", i as u64);
        synthetic.push(crate::simulate::simulate_session(theta, s.duration, s.session_id.clone(), &sim, &mut rng)?);
    }
    let audit = vec![
        quantile_outlier_audit("empirical", &ds.sequences)?,
        quantile_outlier_audit("model", &synthetic)?,
    ];

    Ok(DiagnosticReport {
        source: source.into(),
        seed: cfg.seed,
        theta: theta.clone(),
        residuals,
        qq,
        ks,
        counts_model,
        counts_empirical,
        kde_grid,
        kde_model,
        kde_empirical,
        wd_trials,
        wd,
        ripley_lags: cfg.ripley_lags.clone(),
        ripley,
        audit,
    })
}

impl DiagnosticReport {
    /// Writes the CSV files and `report.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;

        let mut w = csv::Writer::from_path(dir.join("qq.csv"))?;
        w.write_record(["theoretical", "empirical"])?;
        if let Some(qq) = &self.qq {
            for (t, e) in qq.theoretical.iter().zip(&qq.empirical) {
                w.write_record([t.to_string(), e.to_string()])?;
            }
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("residuals.csv"))?;
        w.write_record(["session_id", "count", "compensator", "residual"])?;
        for r in &self.residuals {
            w.write_record([
                r.session_id.clone(),
                r.count.to_string(),
                r.compensator.to_string(),
                r.residual.to_string(),
            ])?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("counts_model.csv"))?;
        w.write_record(["trial", "index", "count"])?;
        for (t, trial) in self.counts_model.iter().enumerate() {
            for (i, c) in trial.iter().enumerate() {
                w.write_record([t.to_string(), i.to_string(), c.to_string()])?;
            }
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("counts_empirical.csv"))?;
        w.write_record(["index", "count"])?;
        for (i, c) in self.counts_empirical.iter().enumerate() {
            w.write_record([i.to_string(), c.to_string()])?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("kde.csv"))?;
        w.write_record(["count", "model", "empirical"])?;
        for (i, x) in self.kde_grid.iter().enumerate() {
            let m = self.kde_model.get(i).map(f64::to_string).unwrap_or_default();
            let e = self.kde_empirical.get(i).map(f64::to_string).unwrap_or_default();
            w.write_record([x.to_string(), m, e])?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("ripley.csv"))?;
        w.write_record(["session_id", "lag", "k", "reference"])?;
        for c in &self.ripley {
            for (lag, k) in self.ripley_lags.iter().zip(&c.k) {
                w.write_record([c.session_id.clone(), lag.to_string(), k.to_string(), (2.0 * lag).to_string()])?;
            }
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("quantile_audit.csv"))?;
        let mut header = vec!["source".to_string(), "n_sessions".to_string()];
        for c in AuditStats::COLUMNS {
            header.push(format!("{c}_mean"));
            header.push(format!("{c}_sd"));
        }
        w.write_record(&header)?;
        for row in &self.audit {
            let mut rec = vec![row.source.clone(), row.n_sessions.to_string()];
            match (&row.mean, &row.sd) {
                (Some(m), Some(s)) => {
                    for (a, b) in m.values().iter().zip(s.values()) {
                        rec.push(a.to_string());
                        rec.push(b.to_string());
                    }
                }
                _ => rec.extend(std::iter::repeat_n(String::new(), 20)),
            }
            w.write_record(&rec)?;
        }
        w.flush()?;

        let summary = serde_json::json!({
            "source": self.source,
            "seed": self.seed,
            "theta": self.theta,
            "wd": self.wd,
            "wd_trials": self.wd_trials.len(),
            "ks": self.ks,
            "mean_residual": stats::mean(&self.residuals.iter().map(|r| r.residual).collect::<Vec<_>>()),
            "ripley_sessions": self.ripley.len(),
            "audit": self.audit,
        });
        let mut f = std::fs::File::create(dir.join("report.json"))?;
        serde_json::to_writer_pretty(&mut f, &summary)?;
        use std::io::Write;
        writeln!(f)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn rtc_examples() {
        let hpp = ParamSet::hpp(2.0).unwrap();
        let s = EventSequence::new("s", vec![1.0, 2.0, 3.0], 5.0).unwrap();
        assert_eq!(rtc_transform(&hpp, &s), vec![2.0, 4.0, 6.0]);
        assert_eq!(rtc_gaps(&hpp, &s), vec![2.0, 2.0, 2.0]);

        let h = ParamSet::hawkes_exp(0.1, 0.5, 1.0).unwrap();
        let s = EventSequence::new("s", vec![1.0, 2.0], 5.0).unwrap();
        let tau = rtc_transform(&h, &s);
        assert!(close(tau[0], 0.1, 1e-12));
        assert!(close(tau[1], 0.5160603, 1e-7));
    }

    #[test]
    fn qq_examples() {
        assert!(qq_points(&[2f64.ln()]).is_err());
        let q = qq_points(&[1.3863, 0.2877]).unwrap();
        assert!(close(q.theoretical[0], 0.28768, 1e-5));
        assert!(close(q.theoretical[1], 1.38629, 1e-5));
        assert_eq!(q.empirical, vec![0.2877, 1.3863]);
        let d = qq_points(&[2.0 * 1.3863, 2.0 * 0.2877]).unwrap();
        assert_eq!(d.theoretical, q.theoretical);
    }

    #[test]
    fn residual_examples() {
        let theta = ParamSet::hpp(0.163399).unwrap();
        let onsets: Vec<f64> = (1..=20).map(|i| i as f64 * 4.0).collect();
        let s = EventSequence::new("s", onsets, 100.0).unwrap();
        assert!(close(raw_residual(&theta, &s).residual, 3.6601, 1e-9));
        let e = EventSequence::new("e", vec![], 100.0).unwrap();
        assert!(raw_residual(&theta, &e).residual <= 0.0);
    }

    #[test]
    fn wasserstein_examples() {
        assert_eq!(wasserstein_1d(&[3.0, 1.0], &[1.0, 3.0]).unwrap(), 0.0);
        assert_eq!(wasserstein_1d(&[0.0, 1.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(wasserstein_1d(&[0.0, 0.0, 0.0, 4.0], &[1.0; 4]).unwrap(), 1.5);
        // unequal sizes: {0} vs {0, 2} → half the mass moves by 2
        assert!(close(wasserstein_1d(&[0.0], &[0.0, 2.0]).unwrap(), 1.0, 1e-15));
        // duplicating a sample leaves its distribution unchanged
        assert!(close(
            wasserstein_1d(&[0.0, 1.0, 5.0], &[2.0, 2.0]).unwrap(),
            wasserstein_1d(&[0.0, 1.0, 5.0, 0.0, 1.0, 5.0], &[2.0, 2.0]).unwrap(),
            1e-12
        ));
        assert!(wasserstein_1d(&[], &[1.0]).is_err());
    }

    #[test]
    fn kde_properties() {
        let grid: Vec<f64> = (0..=4000).map(|i| -20.0 + i as f64 * 0.01).collect();
        let zeros = kde_curve(&[0.0; 5], &grid).unwrap();
        for i in 0..grid.len() / 2 {
            assert!(close(zeros[i], zeros[grid.len() - 1 - i], 1e-12));
        }
        let s = [1.0, 2.0, 2.0, 3.0, 7.0, 8.0];
        let c = kde_curve(&s, &grid).unwrap();
        let integral: f64 = c.windows(2).map(|w| 0.5 * (w[0] + w[1]) * 0.01).sum();
        assert!(close(integral, 1.0, 1e-3));

        let bi: Vec<f64> = (0..200).map(|i| if i % 2 == 0 { 0.0 } else { 10.0 } + (i % 7) as f64 * 0.1 - 0.3).collect();
        let c = kde_curve(&bi, &grid).unwrap();
        let argmax = |lo: f64, hi: f64| {
            grid.iter()
                .zip(&c)
                .filter(|(x, _)| **x > lo && **x < hi)
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(x, _)| *x)
                .unwrap()
        };
        assert!(close(argmax(-5.0, 5.0), 0.0, 0.5));
        assert!(close(argmax(5.0, 15.0), 10.0, 0.5));
        let mid = c[grid.iter().position(|&x| close(x, 5.0, 1e-9)).unwrap()];
        assert!(mid < 0.1 * c.iter().copied().fold(0.0, f64::max));
    }

    #[test]
    fn ripley_examples() {
        let s = EventSequence::new("s", vec![1.0, 2.0], 10.0).unwrap();
        assert_eq!(ripley_k(&s, &[0.5]).unwrap(), vec![0.0]);
        assert!(close(ripley_k(&s, &[1.5]).unwrap()[0], 5.0, 1e-12));
        let one = EventSequence::new("s", vec![1.0], 10.0).unwrap();
        assert!(matches!(ripley_k(&one, &[1.0]), Err(TppError::Domain(_))));
    }

    #[test]
    fn audit_examples() {
        let gaps: Vec<f64> = (1..=100).map(f64::from).collect();
        let a = audit_gaps(&gaps).unwrap();
        assert!(close(a.q90, 90.1, 1e-9));
        assert!(close(a.q95, 95.05, 1e-9));
        assert!(close(a.q99, 99.01, 1e-9));
        assert!(close(a.ratio_95_90, 95.05 / 90.1, 1e-12));
        assert!(close(a.ratio_99_95, 99.01 / 95.05, 1e-12));
        assert!(close(a.ratio_95_90, 1.056, 2e-3));
        assert!(close(a.ratio_99_95, 1.040, 2e-3));
        assert_eq!(a.outliers, 0.0);

        let mut g = vec![1.0; 200];
        g[0] = 500.0;
        let a = audit_gaps(&g).unwrap();
        assert!(a.q99 < 250.0);
        assert_eq!(a.outliers, 1.0);

        let seqs = vec![EventSequence::new("s", vec![1.0, 3.0, 4.0, 8.0, 9.0, 15.0], 20.0).unwrap()];
        assert_eq!(
            quantile_outlier_audit("a", &seqs).unwrap().mean,
            quantile_outlier_audit("b", &seqs).unwrap().mean
        );
        let short = vec![EventSequence::new("s", vec![1.0, 2.0], 20.0).unwrap()];
        assert!(quantile_outlier_audit("a", &short).unwrap().mean.is_none());
    }
}
