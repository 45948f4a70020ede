//! Iterative amplitude estimation: per-round arcsin disambiguation and
//! inverse-variance fusion of angle estimates from several Grover powers.

mod bounds;

pub use bounds::{
    advantage_bound, advantage_threshold, classical_sigma_theta, iqae_sigma_theta, optimal_sigma_theta,
    precision_law, sum_sq_powers, total_applications, unary_gate_coeffs,
};

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use qsim::{NoiseModel, SimError};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unary::{run_priced, UnaryBundle, UnaryError};

#[derive(Debug, Error)]
pub enum IqaeError {
    #[error("first round must use m = 0, got {0}")]
    FirstRoundPower(usize),
    #[error("a_hat = {0} outside [0, 1]")]
    BadFraction(f64),
    #[error("shots must be positive")]
    NoShots,
    #[error("alpha = {0} outside (0, 1)")]
    BadAlpha(f64),
    #[error("round {round} (m = {m}) kept no shots")]
    RoundRejected { round: usize, m: usize, partial: Box<EstimationRecord> },
    #[error(transparent)]
    Unary(UnaryError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, IqaeError>;

/// Two-sided normal quantile for confidence `1 - alpha`.
pub fn z_score(alpha: f64) -> f64 {
    market::normal_quantile(1.0 - alpha / 2.0)
}

/// Every angle in [0, pi/2] compatible with `sin^2((2m+1) theta) = a`.
pub fn multiple_values_arcsin(a: f64, m: usize) -> Vec<f64> {
    let t0 = a.clamp(0.0, 1.0).sqrt().asin();
    let mut out = vec![0.0; 2 * m + 1];
    out[0] = t0;
    for k in 1..=m {
        out[2 * k - 1] = k as f64 * PI - t0;
        out[2 * k] = k as f64 * PI + t0;
    }
    let d = (2 * m + 1) as f64;
    out.iter_mut().for_each(|t| *t /= d);
    out
}

/// Candidate closest to `prev`; on an exact tie the smaller candidate wins and the
/// second value is true.
pub fn select_candidate(candidates: &[f64], prev: f64) -> (f64, bool) {
    let mut best = candidates[0];
    let mut tie = false;
    for &c in &candidates[1..] {
        let (d, db) = ((c - prev).abs(), (best - prev).abs());
        if d < db {
            best = c;
            tie = false;
        } else if d == db && c != best {
            tie = true;
            best = best.min(c);
        }
    }
    (best, tie)
}

/// Per-round angle uncertainty `z / (2 (2m+1) sqrt(N))`.
pub fn round_uncertainty(m: usize, shots: usize, z: f64) -> f64 {
    z / (2.0 * (2 * m + 1) as f64 * (shots as f64).sqrt())
}

/// Inverse-variance combination of two estimates.
pub fn fuse(t1: f64, d1: f64, t2: f64, d2: f64) -> (f64, f64) {
    let (w1, w2) = (d1.powi(-2), d2.powi(-2));
    ((t1 * w1 + t2 * w2) / (w1 + w2), (w1 + w2).powf(-0.5))
}

/// Batch form of [`fuse`] over all estimates.
pub fn fuse_all(estimates: &[(f64, f64)]) -> (f64, f64) {
    let w: f64 = estimates.iter().map(|(_, d)| d.powi(-2)).sum();
    let t: f64 = estimates.iter().map(|(t, d)| t * d.powi(-2)).sum();
    (t / w, w.powf(-0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundUpdate {
    pub theta: f64,
    pub dtheta: f64,
    pub fused_theta: f64,
    pub fused_dtheta: f64,
    pub tie: bool,
}

fn check(a_hat: f64, shots: usize, alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&a_hat) {
        return Err(IqaeError::BadFraction(a_hat));
    }
    if shots == 0 {
        return Err(IqaeError::NoShots);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(IqaeError::BadAlpha(alpha));
    }
    Ok(())
}

/// Round 0, which must sample `A` alone.
pub fn first_round(a_hat: f64, m: usize, shots: usize, alpha: f64) -> Result<RoundUpdate> {
    if m != 0 {
        return Err(IqaeError::FirstRoundPower(m));
    }
    check(a_hat, shots, alpha)?;
    let theta = a_hat.sqrt().asin();
    let dtheta = round_uncertainty(0, shots, z_score(alpha));
    Ok(RoundUpdate { theta, dtheta, fused_theta: theta, fused_dtheta: dtheta, tie: false })
}

/// Picks the branch of `a_hat` nearest the running estimate and fuses it in.
pub fn round_update(
    prev_theta: f64,
    prev_dtheta: f64,
    a_hat: f64,
    m: usize,
    shots: usize,
    alpha: f64,
) -> Result<RoundUpdate> {
    check(a_hat, shots, alpha)?;
    let (theta, tie) = select_candidate(&multiple_values_arcsin(a_hat, m), prev_theta);
    if tie {
        log::warn!("equidistant arcsin candidates at m = {m}; took {theta}");
    }
    let dtheta = round_uncertainty(m, shots, z_score(alpha));
    let (fused_theta, fused_dtheta) = fuse(prev_theta, prev_dtheta, theta, dtheta);
    Ok(RoundUpdate { theta, dtheta, fused_theta, fused_dtheta, tie })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Linear,
    Exponential,
}

/// Grover powers for rounds `0..=j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchedulePolicy {
    pub kind: ScheduleKind,
    pub j: usize,
}

impl SchedulePolicy {
    pub fn linear(j: usize) -> Self {
        SchedulePolicy { kind: ScheduleKind::Linear, j }
    }

    pub fn exponential(j: usize) -> Self {
        SchedulePolicy { kind: ScheduleKind::Exponential, j }
    }

    /// Linear: 0, 1, .., J. Exponential: 0, 1, 2, 4, .., 2^(J-1).
    pub fn powers(&self) -> Vec<usize> {
        (0..=self.j)
            .map(|j| match self.kind {
                ScheduleKind::Linear => j,
                ScheduleKind::Exponential if j == 0 => 0,
                ScheduleKind::Exponential => 1 << (j - 1),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub m: usize,
    pub shots: usize,
    pub accepted: usize,
    pub a_hat: f64,
    pub theta: f64,
    pub dtheta: f64,
    pub fused_theta: f64,
    pub fused_dtheta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationRecord {
    pub rounds: Vec<Round>,
    pub fused_theta: f64,
    pub fused_dtheta: f64,
    pub fused_a: f64,
    pub fused_da: f64,
    pub alpha: f64,
    pub ties: usize,
}

#[derive(Serialize)]
struct CsvRow {
    round: usize,
    m: usize,
    shots: usize,
    accepted: usize,
    theta: f64,
    dtheta: f64,
}

impl EstimationRecord {
    fn new(alpha: f64) -> Self {
        EstimationRecord {
            rounds: Vec::new(),
            fused_theta: f64::NAN,
            fused_dtheta: f64::NAN,
            fused_a: f64::NAN,
            fused_da: f64::NAN,
            alpha,
            ties: 0,
        }
    }

    fn push(&mut self, r: Round) {
        self.fused_theta = r.fused_theta;
        self.fused_dtheta = r.fused_dtheta;
        let t = r.fused_theta.clamp(0.0, FRAC_PI_2);
        self.fused_a = t.sin().powi(2);
        self.fused_da = (2.0 * t).sin() * r.fused_dtheta;
        self.rounds.push(r);
    }

    /// Fused estimate and uncertainty scaled to a payoff.
    pub fn payoff(&self, scale: f64) -> (f64, f64) {
        (self.fused_a * scale, self.fused_da * scale)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per round: round, m, shots, accepted, theta, dtheta.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for (i, r) in self.rounds.iter().enumerate() {
            wr.serialize(CsvRow { round: i, m: r.m, shots: r.shots, accepted: r.accepted, theta: r.theta, dtheta: r.dtheta })?;
        }
        wr.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Runs the schedule against any sampler returning `(accepted, ones)` for a round.
/// Uncertainties use the accepted count as the shot number.
pub fn estimate_with<F>(policy: &SchedulePolicy, alpha: f64, mut sample: F) -> Result<EstimationRecord>
where
    F: FnMut(usize, usize) -> Result<(usize, usize, usize)>,
{
    let mut rec = EstimationRecord::new(alpha);
    for (round, m) in policy.powers().into_iter().enumerate() {
        let (shots, accepted, ones) = sample(round, m)?;
        if accepted == 0 {
            return Err(IqaeError::RoundRejected { round, m, partial: Box::new(rec) });
        }
        let a_hat = ones as f64 / accepted as f64;
        let up = if round == 0 {
            first_round(a_hat, m, accepted, alpha)?
        } else {
            round_update(rec.fused_theta, rec.fused_dtheta, a_hat, m, accepted, alpha)?
        };
        rec.ties += up.tie as usize;
        rec.push(Round {
            m,
            shots,
            accepted,
            a_hat,
            theta: up.theta,
            dtheta: up.dtheta,
            fused_theta: up.fused_theta,
            fused_dtheta: up.fused_dtheta,
        });
    }
    Ok(rec)
}

fn round_seed(seed: u64, round: usize) -> u64 {
    seed.wrapping_add((round as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Samples every scheduled power of the unary circuits with post-selection and fuses
/// the rounds.
pub fn estimate(
    bundle: &UnaryBundle,
    policy: &SchedulePolicy,
    shots: usize,
    noise: Option<&NoiseModel>,
    alpha: f64,
    seed: u64,
) -> Result<EstimationRecord> {
    estimate_with(policy, alpha, |round, m| match run_priced(bundle, m, shots, noise, round_seed(seed, round)) {
        Ok(r) => Ok((shots, r.accepted, r.ones)),
        Err(UnaryError::AllShotsRejected { .. }) => Ok((shots, 0, 0)),
        Err(e) => Err(IqaeError::Unary(e)),
    })
}
