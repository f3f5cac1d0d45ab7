//! Exact simulation by Ogata thinning, unconditional or conditioned on an
//! observed history, plus posterior-predictive count distributions.
//!
//! Hawkes intensities (and the NHPP with `k ≤ 1`) never increase between
//! onsets, so `λ*(s+)` bounds the intensity until the next acceptance. The
//! NHPP with `k > 1` grows, and is bounded by `λ(s + L)` on `(s, s + L]`.

use rand::Rng as _;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{Dataset, EventSequence};
use crate::error::{Result, TppError};
use crate::models::{ExpKernel, ModelFamily, ParamSet};
use crate::rng::{substream, Rng};
use crate::stats;

pub const DEFAULT_MAX_EVENTS: usize = 100_000;
pub const DEFAULT_LOOKAHEAD: f64 = 10.0;
pub const DEFAULT_COUNT_TRIALS: usize = 40;
pub const FORECAST_PERCENTILES: [f64; 5] = [5.0, 25.0, 50.0, 75.0, 95.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub seed: u64,
    pub max_events: usize,
    /// Bound-refresh horizon (minutes) for increasing intensities.
    pub lookahead: f64,
}

impl SimConfig {
    pub fn new(seed: u64) -> Self {
        SimConfig {
            seed,
            max_events: DEFAULT_MAX_EVENTS,
            lookahead: DEFAULT_LOOKAHEAD,
        }
    }

    fn check(&self) -> Result<()> {
        if self.max_events == 0 || !(self.lookahead > 0.0) {
            return Err(TppError::invalid("max_events and lookahead must be positive"));
        }
        Ok(())
    }
}

/// Incrementally updated conditional intensity for one trajectory.
enum IntensityState {
    Poisson { family: ModelFamily, values: Vec<f64> },
    Exp {
        mu: f64,
        kernels: Vec<ExpKernel>,
        /// Σ e^(−β (ref − t_i)) over accepted and historical onsets.
        excitation: Vec<f64>,
        reference: f64,
    },
    PowerLaw { mu: f64, k: f64, c: f64, p: f64, events: Vec<f64> },
}

impl IntensityState {
    fn new(theta: &ParamSet, history: &[f64], start: f64) -> Self {
        let v = theta.values();
        match theta.family() {
            f @ (ModelFamily::Hpp | ModelFamily::NhppPl) => IntensityState::Poisson {
                family: f,
                values: v.to_vec(),
            },
            f @ (ModelFamily::HawkesExp | ModelFamily::Hawkes2Exp) => {
                let kernels: Vec<ExpKernel> = if f == ModelFamily::HawkesExp {
                    vec![ExpKernel::new(v[1], v[2])]
                } else {
                    vec![ExpKernel::new(v[1], v[2]), ExpKernel::new(v[3], v[4])]
                };
                let excitation = kernels
                    .iter()
                    .map(|k| history.iter().map(|&t| (-k.beta * (start - t)).exp()).sum())
                    .collect();
                IntensityState::Exp {
                    mu: v[0],
                    kernels,
                    excitation,
                    reference: start,
                }
            }
            ModelFamily::HawkesPl => IntensityState::PowerLaw {
                mu: v[0],
                k: v[1],
                c: v[2],
                p: v[3],
                events: history.to_vec(),
            },
        }
    }

    /// Intensity at `s` with every accepted onset (those ≤ `s`) included.
    fn at(&self, s: f64) -> f64 {
        match self {
            IntensityState::Poisson { family, values } => {
                crate::models::intensity_raw(*family, values, &[], s)
            }
            IntensityState::Exp { mu, kernels, excitation, reference } => {
                let mut l = *mu;
                for (k, e) in kernels.iter().zip(excitation) {
                    l += k.alpha * k.beta * e * (-k.beta * (s - reference)).exp();
                }
                l
            }
            IntensityState::PowerLaw { mu, k, c, p, events } => {
                *mu + *k * events.iter().map(|&t| (*c + s - t).powf(-*p)).sum::<f64>()
            }
        }
    }

    fn accept(&mut self, s: f64) {
        match self {
            IntensityState::Poisson { .. } => {}
            IntensityState::Exp { kernels, excitation, reference, .. } => {
                for (k, e) in kernels.iter().zip(excitation.iter_mut()) {
                    *e = *e * (-k.beta * (s - *reference)).exp() + 1.0;
                }
                *reference = s;
            }
            IntensityState::PowerLaw { events, .. } => events.push(s),
        }
    }
}

fn explosion(theta: &ParamSet, max_events: usize) -> TppError {
    TppError::Explosion {
        max_events,
        branching_factor: theta
            .branching_factor()
            .map(|b| format!("{:.4}", b.value))
            .unwrap_or_else(|_| "n/a".into()),
    }
}

/// New onsets on `(start, end)` given `history` (all ≤ `start`).
pub fn thin_window(
    theta: &ParamSet,
    history: &[f64],
    start: f64,
    end: f64,
    max_events: usize,
    lookahead: f64,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    let mut state = IntensityState::new(theta, history, start);
    let mut out = Vec::new();
    let mut s = start;
    let v = theta.values();
    let increasing = theta.family() == ModelFamily::NhppPl && v[1] > 1.0;

    // The k < 1 power-law NHPP has an integrable singularity at 0; its
    // first arrival is drawn exactly from P(T₁ > t) = exp(−α t^k).
    if theta.family() == ModelFamily::NhppPl && v[1] < 1.0 && s <= 0.0 {
        if v[0] <= 0.0 {
            return Ok(out);
        }
        let e: f64 = Exp1.sample(rng);
        let first = (e / v[0]).powf(1.0 / v[1]);
        if first >= end {
            return Ok(out);
        }
        out.push(first);
        s = first;
    }

    loop {
        let (bound, horizon) = if increasing {
            (state.at(s + lookahead), s + lookahead)
        } else {
            (state.at(s), f64::INFINITY)
        };
        if !(bound > 0.0) {
            break;
        }
        let w: f64 = Exp1.sample(rng);
        let proposal = s + w / bound;
        if proposal > horizon {
            s = horizon;
            if s >= end {
                break;
            }
            continue;
        }
        s = proposal;
        if s >= end {
            break;
        }
        let u: f64 = rng.random();
        if u * bound <= state.at(s) {
            state.accept(s);
            out.push(s);
            if out.len() > max_events {
                return Err(explosion(theta, max_events));
            }
        }
    }
    Ok(out)
}

/// One unconditional session on `[0, T)`.
pub fn simulate_session(
    theta: &ParamSet,
    duration: f64,
    session_id: impl Into<String>,
    cfg: &SimConfig,
    rng: &mut Rng,
) -> Result<EventSequence> {
    cfg.check()?;
    if !(duration > 0.0) {
        return Err(TppError::invalid("duration must be positive"));
    }
    let onsets = thin_window(theta, &[], 0.0, duration, cfg.max_events, cfg.lookahead, rng)?;
    EventSequence::new(session_id, onsets, duration)
}

/// Single session seeded from `cfg.seed`.
pub fn thinning_simulate(theta: &ParamSet, duration: f64, cfg: &SimConfig) -> Result<EventSequence> {
    let mut rng = substream(cfg.seed, "simulate", 0);
    simulate_session(theta, duration, "sim-0", cfg, &mut rng)
}

/// Independent sessions, one per duration, ids `sim-00000`, `sim-00001`, ...
pub fn simulate_dataset(theta: &ParamSet, durations: &[f64], cfg: &SimConfig) -> Result<Dataset> {
    let seqs: Result<Vec<EventSequence>> = durations
        .par_iter()
        .enumerate()
        .map(|(i, &d)| {
            let mut rng = substream(cfg.seed, "session", i as u64);
            simulate_session(theta, d, format!("sim-{i:05}"), cfg, &mut rng)
        })
        .collect();
    Dataset::new(seqs?)
}

#[derive(Debug, Clone, Serialize)]
pub struct ForecastDistribution {
    pub session_id: String,
    pub t_start: f64,
    pub dt: f64,
    /// Simulated onset times inside the window, per trajectory.
    pub trajectories: Vec<Vec<f64>>,
    pub counts: Vec<usize>,
    /// Count quantiles at [`FORECAST_PERCENTILES`].
    pub quantiles: [f64; 5],
}

impl ForecastDistribution {
    pub fn median(&self) -> f64 {
        self.quantiles[2]
    }

    pub fn mean(&self) -> f64 {
        self.counts.iter().sum::<usize>() as f64 / self.counts.len() as f64
    }

    /// Quantiles of the cumulative count `N(t_start, g]` at each grid time.
    pub fn bands(&self, grid: &[f64]) -> Vec<[f64; 5]> {
        grid.iter()
            .map(|&g| {
                let c: Vec<f64> = self
                    .trajectories
                    .iter()
                    .map(|tr| tr.partition_point(|&t| t <= g) as f64)
                    .collect();
                count_quantiles(&c)
            })
            .collect()
    }
}

fn count_quantiles(counts: &[f64]) -> [f64; 5] {
    let s = stats::sorted(counts);
    FORECAST_PERCENTILES.map(|p| stats::quantile_sorted(&s, p / 100.0))
}

/// Posterior-predictive counts on `(t_start, t_start + dt]`, each trajectory
/// drawing its own parameter vector and conditioning on onsets ≤ `t_start`.
pub fn forecast_counts(
    draws: &[ParamSet],
    seq: &EventSequence,
    t_start: f64,
    dt: f64,
    n_traj: usize,
    cfg: &SimConfig,
) -> Result<ForecastDistribution> {
    cfg.check()?;
    if draws.is_empty() {
        return Err(TppError::invalid("forecast needs at least one parameter draw"));
    }
    if n_traj == 0 {
        return Err(TppError::invalid("forecast needs at least one trajectory"));
    }
    if !(dt > 0.0) || t_start < dt || t_start > seq.duration - dt {
        return Err(TppError::session(
            &seq.session_id,
            format!(
                "forecast window start {t_start} must lie in [dt, T - dt] = [{dt}, {}]",
                seq.duration - dt
            ),
        ));
    }
    let history = seq.history_through(t_start);
    let trajectories: Result<Vec<Vec<f64>>> = (0..n_traj)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(cfg.seed, &seq.session_id, r as u64);
            let theta = &draws[rng.random_range(0..draws.len())];
            thin_window(theta, history, t_start, t_start + dt, cfg.max_events, cfg.lookahead, &mut rng)
        })
        .collect();
    let trajectories = trajectories?;
    let counts: Vec<usize> = trajectories.iter().map(Vec::len).collect();
    let cf: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    Ok(ForecastDistribution {
        session_id: seq.session_id.clone(),
        t_start,
        dt,
        quantiles: count_quantiles(&cf),
        trajectories,
        counts,
    })
}

/// Simulated session counts: per trial, one session per observed duration
/// slot with `T` drawn uniformly from `durations` and θ uniformly from `draws`.
pub fn count_distribution_sample(
    draws: &[ParamSet],
    durations: &[f64],
    n_trials: usize,
    cfg: &SimConfig,
) -> Result<Vec<Vec<usize>>> {
    cfg.check()?;
    if durations.is_empty() {
        return Err(TppError::invalid("count distribution needs at least one duration"));
    }
    if draws.is_empty() {
        return Err(TppError::invalid("count distribution needs at least one parameter draw"));
    }
    (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = substream(cfg.seed, "count-trial", trial as u64);
            let mut counts = Vec::with_capacity(durations.len());
            for _ in 0..durations.len() {
                let t = durations[rng.random_range(0..durations.len())];
                let theta = &draws[rng.random_range(0..draws.len())];
                let ev = thin_window(theta, &[], 0.0, t, cfg.max_events, cfg.lookahead, &mut rng)?;
                counts.push(ev.len());
            }
            Ok(counts)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn supercritical_hawkes_explodes() {
        let theta = ParamSet::hawkes_exp(0.5, 1.5, 1.0).unwrap();
        let cfg = SimConfig { max_events: 5_000, ..SimConfig::new(3) };
        let err = thinning_simulate(&theta, 1e6, &cfg).unwrap_err();
        match err {
            TppError::Explosion { branching_factor, .. } => assert_eq!(branching_factor, "1.5000"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn zero_baseline_without_history_never_fires() {
        let theta = ParamSet::hawkes_exp(0.0, 0.8, 1.0).unwrap();
        let seq = EventSequence::new("s", vec![], 100.0).unwrap();
        let f = forecast_counts(&[theta], &seq, 10.0, 5.0, 50, &SimConfig::new(1)).unwrap();
        assert!(f.counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn forecast_is_deterministic_under_seed() {
        let theta = ParamSet::hawkes_exp(0.05, 0.7, 0.5).unwrap();
        let seq = EventSequence::new("s", vec![1.0, 2.0, 2.5], 60.0).unwrap();
        let a = forecast_counts(std::slice::from_ref(&theta), &seq, 15.0, 10.0, 40, &SimConfig::new(9)).unwrap();
        let b = forecast_counts(&[theta], &seq, 15.0, 10.0, 40, &SimConfig::new(9)).unwrap();
        assert_eq!(a.trajectories, b.trajectories);
    }

    #[test]
    fn forecast_rejects_window_outside_session() {
        let theta = ParamSet::hpp(0.1).unwrap();
        let seq = EventSequence::new("sess-7", vec![], 20.0).unwrap();
        let err = forecast_counts(std::slice::from_ref(&theta), &seq, 2.0, 5.0, 5, &SimConfig::new(1)).unwrap_err();
        assert!(err.to_string().contains("sess-7"));
        assert!(forecast_counts(&[], &seq, 5.0, 5.0, 5, &SimConfig::new(1)).is_err());
    }

    #[test]
    fn forecast_counts_grow_with_window() {
        let theta = ParamSet::hawkes_exp(0.1, 0.6, 0.4).unwrap();
        let seq = EventSequence::new("s", vec![3.0, 4.0], 200.0).unwrap();
        let mut prev = 0.0;
        for dt in [1.0, 5.0, 10.0, 25.0, 50.0] {
            let f = forecast_counts(std::slice::from_ref(&theta), &seq, 50.0, dt, 200, &SimConfig::new(4)).unwrap();
            assert!(f.mean() >= prev);
            prev = f.mean();
        }
    }

    #[test]
    fn zero_rate_counts_are_zero() {
        let counts = count_distribution_sample(&[ParamSet::hpp(0.0).unwrap()], &[10.0], 5, &SimConfig::new(2)).unwrap();
        assert!(counts.iter().flatten().all(|&c| c == 0));
    }

    #[test]
    fn count_mixture_is_reproducible() {
        let draws = [ParamSet::hpp(0.1).unwrap(), ParamSet::hpp(0.5).unwrap()];
        let a = count_distribution_sample(&draws, &[30.0, 60.0], 10, &SimConfig::new(5)).unwrap();
        let b = count_distribution_sample(&draws, &[30.0, 60.0], 10, &SimConfig::new(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nhpp_growing_intensity_mean_count() {
        // Λ(T) = α T^k
        let theta = ParamSet::nhpp(0.05, 1.5).unwrap();
        let cfg = SimConfig::new(11);
        let n = 2000;
        let total: usize = (0..n)
            .map(|i| {
                let mut rng = substream(cfg.seed, "nhpp", i);
                simulate_session(&theta, 40.0, "s", &cfg, &mut rng).unwrap().len()
            })
            .sum();
        let expected = 0.05 * 40f64.powf(1.5);
        let se = (expected / n as f64).sqrt();
        assert!((total as f64 / n as f64 - expected).abs() < 4.0 * se);
    }

    #[test]
    fn nhpp_singular_start_mean_count() {
        let theta = ParamSet::nhpp(0.8, 0.5).unwrap();
        let cfg = SimConfig::new(12);
        let n = 2000;
        let total: usize = (0..n)
            .map(|i| {
                let mut rng = substream(cfg.seed, "nhpp", i);
                simulate_session(&theta, 25.0, "s", &cfg, &mut rng).unwrap().len()
            })
            .sum();
        let expected = 0.8 * 5.0;
        let se = (expected / n as f64).sqrt();
        assert!((total as f64 / n as f64 - expected).abs() < 4.0 * se);
    }
}
