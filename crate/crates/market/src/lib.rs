//! Black-Scholes market layer: the log-normal terminal price, its binned form,
//! and the exact and Monte Carlo payoff oracles.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarketError {
    #[error("invalid option spec: {0}")]
    Spec(String),
    #[error("price must be positive, got {0}")]
    NonPositivePrice(f64),
    #[error("need at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("window width must be positive, got {0}")]
    BadWidth(f64),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("paths must be at least 1")]
    NoPaths,
    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, MarketError>;

pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionSpec {
    pub s0: f64,
    pub r: f64,
    pub sigma: f64,
    pub t: f64,
    pub k: f64,
}

impl OptionSpec {
    pub fn new(s0: f64, r: f64, sigma: f64, t: f64, k: f64) -> Result<Self> {
        let spec = OptionSpec { s0, r, sigma, t, k };
        spec.validate()?;
        Ok(spec)
    }

    /// S0 = 2, r = 0.05, sigma = 0.4, T = 0.1, K = 1.9.
    pub fn reference() -> Self {
        OptionSpec { s0: 2.0, r: 0.05, sigma: 0.4, t: 0.1, k: 1.9 }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.s0, self.r, self.sigma, self.t, self.k];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(MarketError::Spec("all fields must be finite".into()));
        }
        for (name, v) in [("s0", self.s0), ("sigma", self.sigma), ("t", self.t), ("k", self.k)] {
            if v <= 0.0 {
                return Err(MarketError::Spec(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Mean of ln S_T.
    pub fn log_mean(&self) -> f64 {
        self.s0.ln() + (self.r - 0.5 * self.sigma * self.sigma) * self.t
    }

    /// Standard deviation of ln S_T.
    pub fn log_std(&self) -> f64 {
        self.sigma * self.t.sqrt()
    }

    pub fn mean(&self) -> f64 {
        self.s0 * (self.r * self.t).exp()
    }

    pub fn stddev(&self) -> f64 {
        let v = self.log_std().powi(2);
        self.mean() * v.exp_m1().sqrt()
    }

    pub fn discount(&self) -> f64 {
        (-self.r * self.t).exp()
    }
}

pub fn lognormal_pdf(spec: &OptionSpec, s: f64) -> Result<f64> {
    if s <= 0.0 {
        return Err(MarketError::NonPositivePrice(s));
    }
    let (m, sd) = (spec.log_mean(), spec.log_std());
    let z = (s.ln() - m) / sd;
    Ok((-0.5 * z * z).exp() / (s * sd * (2.0 * std::f64::consts::PI).sqrt()))
}

pub fn lognormal_cdf(spec: &OptionSpec, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    normal_cdf((s.ln() - spec.log_mean()) / spec.log_std())
}

/// Black-Scholes call value, discounted.
pub fn analytic_payoff(spec: &OptionSpec) -> f64 {
    let sd = spec.log_std();
    let d1 = ((spec.s0 / spec.k).ln() + (spec.r + 0.5 * spec.sigma * spec.sigma) * spec.t) / sd;
    let d2 = d1 - sd;
    spec.s0 * normal_cdf(d1) - spec.k * spec.discount() * normal_cdf(d2)
}

/// E[max(0, S_T - K)] without discounting.
pub fn undiscounted_payoff(spec: &OptionSpec) -> f64 {
    analytic_payoff(spec) / spec.discount()
}

/// E[max(0, S_T - K) | lo < S_T < hi], the payoff of the log-normal truncated to a window.
pub fn window_payoff(spec: &OptionSpec, lo: f64, hi: f64) -> f64 {
    let mass = lognormal_cdf(spec, hi) - lognormal_cdf(spec, lo);
    let a = lo.max(spec.k);
    if a >= hi || mass <= 0.0 {
        return 0.0;
    }
    let (m, sd) = (spec.log_mean(), spec.log_std());
    let za = (a.ln() - m) / sd;
    let zb = (hi.ln() - m) / sd;
    let first = (m + 0.5 * sd * sd).exp() * (normal_cdf(zb - sd) - normal_cdf(za - sd));
    let second = spec.k * (normal_cdf(zb) - normal_cdf(za));
    (first - second) / mass
}

/// Equal-width price bins with centers `prices` and masses `probs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceGrid {
    pub prices: Vec<f64>,
    pub probs: Vec<f64>,
}

impl PriceGrid {
    pub fn new(prices: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if prices.len() < 2 {
            return Err(MarketError::TooFewBins(prices.len()));
        }
        if prices.len() != probs.len() {
            return Err(MarketError::Grid("prices and probs differ in length".into()));
        }
        if prices.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(MarketError::Grid("prices must be strictly increasing".into()));
        }
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(MarketError::Grid("probabilities must be finite and non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(MarketError::Grid(format!("probabilities sum to {total}")));
        }
        Ok(PriceGrid { prices, probs })
    }

    pub fn bins(&self) -> usize {
        self.prices.len()
    }

    pub fn s_max(&self) -> f64 {
        self.prices[self.bins() - 1]
    }

    pub fn bin_width(&self) -> f64 {
        self.prices[1] - self.prices[0]
    }

    /// Lower and upper window edges.
    pub fn window(&self) -> (f64, f64) {
        let h = self.bin_width() / 2.0;
        (self.prices[0] - h, self.s_max() + h)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let err = |e: csv::Error| MarketError::Csv(e.to_string());
        wr.write_record(["bin", "price", "prob"]).map_err(err)?;
        for (i, (s, p)) in self.prices.iter().zip(&self.probs).enumerate() {
            wr.write_record([i.to_string(), s.to_string(), p.to_string()]).map_err(err)?;
        }
        wr.flush().map_err(|e| MarketError::Csv(e.to_string()))
    }
}

/// Where the strike sits relative to the bin grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrikeAlignment {
    /// Window exactly mean +- width * stddev.
    None,
    /// Window shifted by less than one bin so K is a bin center.
    Center,
    /// Window shifted by less than one bin so K is a bin edge.
    Edge,
}

fn grid_from_window(spec: &OptionSpec, n: usize, lo: f64, h: f64) -> Result<PriceGrid> {
    let edges: Vec<f64> = (0..=n).map(|i| lo + h * i as f64).collect();
    let cdf: Vec<f64> = edges.iter().map(|&e| lognormal_cdf(spec, e)).collect();
    let mut probs: Vec<f64> = cdf.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
    let total: f64 = probs.iter().sum();
    if !(total > 0.0) {
        return Err(MarketError::Grid("window carries no probability mass".into()));
    }
    probs.iter_mut().for_each(|p| *p /= total);
    let prices = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    PriceGrid::new(prices, probs)
}

/// `n` equal-width bins over mean +- `width` standard deviations of S_T, floored at 0+.
pub fn discretize(spec: &OptionSpec, n: usize, width: f64) -> Result<PriceGrid> {
    discretize_aligned(spec, n, width, StrikeAlignment::None)
}

pub fn discretize_aligned(spec: &OptionSpec, n: usize, width: f64, align: StrikeAlignment) -> Result<PriceGrid> {
    spec.validate()?;
    if n < 2 {
        return Err(MarketError::TooFewBins(n));
    }
    if !(width > 0.0) {
        return Err(MarketError::BadWidth(width));
    }
    let (mean, sd) = (spec.mean(), spec.stddev());
    let floor = mean * 1e-12;
    let lo = (mean - width * sd).max(floor);
    let hi = mean + width * sd;
    let h = (hi - lo) / n as f64;
    let mut lo = match align {
        StrikeAlignment::None => lo,
        StrikeAlignment::Center => spec.k - h * (((spec.k - lo) / h - 0.5).round() + 0.5),
        StrikeAlignment::Edge => spec.k - h * ((spec.k - lo) / h).round(),
    };
    while lo <= 0.0 {
        lo += h;
    }
    grid_from_window(spec, n, lo, h)
}

/// sum_i p_i max(0, S_i - k), undiscounted.
pub fn binned_payoff(grid: &PriceGrid, k: f64) -> f64 {
    grid.prices.iter().zip(&grid.probs).map(|(s, p)| p * (s - k).max(0.0)).sum()
}

/// Exact payoff of the log-normal restricted to the grid's window; the n -> infinity
/// limit of `binned_payoff` for that window.
pub fn grid_reference_payoff(spec: &OptionSpec, grid: &PriceGrid) -> f64 {
    let (lo, hi) = grid.window();
    window_payoff(spec, lo, hi)
}

/// KL(p || q) in nats. Terms with p_i = 0 contribute 0; q_i = 0 with p_i > 0 gives infinity.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&pi, &qi)| {
            if pi <= 0.0 {
                0.0
            } else if qi <= 0.0 {
                f64::INFINITY
            } else {
                pi * (pi / qi).ln()
            }
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    /// Sample mean of max(0, S_T - K), undiscounted.
    pub estimate: f64,
    pub std_error: f64,
    pub paths: usize,
}

impl McEstimate {
    pub fn discounted(&self, spec: &OptionSpec) -> (f64, f64) {
        (self.estimate * spec.discount(), self.std_error * spec.discount())
    }
}

const MC_CHUNK: usize = 1 << 16;

pub fn monte_carlo_payoff(spec: &OptionSpec, paths: usize, seed: u64) -> Result<McEstimate> {
    spec.validate()?;
    if paths == 0 {
        return Err(MarketError::NoPaths);
    }
    let (m, sd) = (spec.log_mean(), spec.log_std());
    let n_chunks = paths.div_ceil(MC_CHUNK);
    // (count, mean, m2) per chunk, merged in chunk order
    let parts: Vec<(f64, f64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = MC_CHUNK.min(paths - c * MC_CHUNK);
            let (mut mean, mut m2) = (0.0, 0.0);
            for i in 0..len {
                let z: f64 = StandardNormal.sample(&mut rng);
                let x = ((m + sd * z).exp() - spec.k).max(0.0);
                let d = x - mean;
                mean += d / (i + 1) as f64;
                m2 += d * (x - mean);
            }
            (len as f64, mean, m2)
        })
        .collect();
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for (nb, mb, m2b) in parts {
        let tot = n + nb;
        let d = mb - mean;
        mean += d * nb / tot;
        m2 += m2b + d * d * n * nb / tot;
        n = tot;
    }
    let var = if paths > 1 { m2 / (n - 1.0) } else { 0.0 };
    Ok(McEstimate { estimate: mean, std_error: (var / n).sqrt(), paths })
}
