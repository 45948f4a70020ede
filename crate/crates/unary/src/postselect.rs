use qsim::{sample_shots, NoiseModel, StateVector};
use serde::{Deserialize, Serialize};

use crate::{Result, UnaryBundle, UnaryError};

/// Shot counts of one priced run after post-selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricedRun {
    pub m: usize,
    pub shots: usize,
    pub accepted: usize,
    pub ones: usize,
    pub p_hat: f64,
    /// `p_hat * (S_max - K)`; only set for `m = 0`.
    pub payoff_estimate: Option<f64>,
}

impl PricedRun {
    pub fn acceptance(&self) -> f64 {
        self.accepted as f64 / self.shots as f64
    }
}

/// True when exactly one of the low `n` bits is set.
pub fn is_one_hot(outcome: usize, n: usize) -> bool {
    (outcome & ((1usize << n) - 1)).count_ones() == 1
}

/// Samples the full circuit with `m` Grover steps and keeps only shots whose price
/// register is one-hot.
pub fn run_priced(
    bundle: &UnaryBundle,
    m: usize,
    shots: usize,
    noise: Option<&NoiseModel>,
    seed: u64,
) -> Result<PricedRun> {
    let circuit = bundle.full(m);
    let res = sample_shots(&circuit, &StateVector::zero(bundle.width()), shots, noise, seed)?;
    let n = bundle.n;
    let (mut accepted, mut ones) = (0, 0);
    for (&outcome, &count) in &res.counts {
        if is_one_hot(outcome, n) {
            accepted += count;
            if outcome >> n & 1 == 1 {
                ones += count;
            }
        }
    }
    if accepted == 0 {
        return Err(UnaryError::AllShotsRejected { shots });
    }
    let p_hat = ones as f64 / accepted as f64;
    Ok(PricedRun {
        m,
        shots,
        accepted,
        ones,
        p_hat,
        payoff_estimate: (m == 0).then(|| p_hat * bundle.payoff_scale()),
    })
}

/// Bin frequencies from per-bin counts; empty bins get a pseudo-count of `1 / (2 shots)`
/// before renormalizing.
pub fn smoothed_histogram(counts: &[usize]) -> Vec<f64> {
    let shots: usize = counts.iter().sum();
    if shots == 0 {
        return vec![1.0 / counts.len() as f64; counts.len()];
    }
    let pseudo = 1.0 / (2.0 * shots as f64);
    let raw: Vec<f64> = counts
        .iter()
        .map(|&c| if c == 0 { pseudo } else { c as f64 })
        .collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / z).collect()
}

/// Measures the distributor alone and returns KL(target || smoothed histogram) over
/// the one-hot outcomes.
pub fn distributor_kl(
    bundle: &UnaryBundle,
    target: &[f64],
    shots: usize,
    noise: Option<&NoiseModel>,
    seed: u64,
) -> Result<f64> {
    let res = sample_shots(&bundle.distributor(), &StateVector::zero(bundle.width()), shots, noise, seed)?;
    let n = bundle.n;
    let mut counts = vec![0usize; n];
    for (&outcome, &c) in &res.counts {
        if is_one_hot(outcome, n) {
            counts[(outcome & ((1 << n) - 1)).trailing_zeros() as usize] += c;
        }
    }
    Ok(market::kl_divergence(target, &smoothed_histogram(&counts)))
}
