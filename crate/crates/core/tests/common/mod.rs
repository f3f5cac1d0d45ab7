#![allow(dead_code)]

use rand::Rng as _;
use tpplab::rng::substream;
use tpplab::simulate::{simulate_session, SimConfig};
use tpplab::{Dataset, EventSequence, ParamSet};

/// Independent sessions of the given durations simulated from `theta`.
pub fn simulate(theta: &ParamSet, durations: &[f64], seed: u64) -> Dataset {
    tpplab::simulate::simulate_dataset(theta, durations, &SimConfig::new(seed)).unwrap()
}

/// Sorted uniform onsets on `[0, T)`.
pub fn uniform_sequence(id: &str, n: usize, duration: f64, seed: u64) -> EventSequence {
    let mut rng = substream(seed, id, 0);
    let mut on: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * duration).collect();
    on.sort_by(f64::total_cmp);
    on.dedup();
    EventSequence::new(id, on, duration).unwrap()
}

/// Single session from a stream, for Monte Carlo loops.
pub fn one_session(theta: &ParamSet, duration: f64, seed: u64, index: u64) -> EventSequence {
    let mut rng = substream(seed, "mc", index);
    simulate_session(theta, duration, format!("mc-{index}"), &SimConfig::new(seed), &mut rng).unwrap()
}

/// Clustered synthetic cohort: bursty Hawkes sessions of mixed length.
pub fn clustered_cohort(n: usize, seed: u64) -> Dataset {
    let theta = ParamSet::hawkes_exp(0.02, 0.9, 0.36).unwrap();
    let mut rng = substream(seed, "durations", 0);
    let durations: Vec<f64> = (0..n).map(|_| 40.0 + rng.random::<f64>() * 80.0).collect();
    simulate(&theta, &durations, seed)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}
