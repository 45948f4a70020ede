use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Budget, OptimError, OptimProblem, OptimResult, Result, TracePoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvoOptions {
    pub population: usize,
    /// Initial mutation step size.
    pub sigma0: f64,
    pub max_evals: usize,
    pub seed: u64,
}

impl Default for EvoOptions {
    fn default() -> Self {
        EvoOptions { population: 16, sigma0: 0.5, max_evals: 4000, seed: 0 }
    }
}

/// Covariance-adapting evolution strategy: each generation samples Gaussian offspring
/// around the mean, recombines the better half with log weights, and adapts the
/// covariance and the global step size from the selected offspring.
///
/// Offspring falling outside the bounds are clamped onto them before evaluation.
/// The trace holds the best-so-far loss after each generation.
pub fn minimize_evolutionary(problem: &OptimProblem, start: &[f64], opts: &EvoOptions) -> Result<OptimResult> {
    if opts.population < 4 {
        return Err(OptimError::Population(opts.population));
    }
    let n = problem.dim;
    let mut mean = DVector::from_vec(problem.check_start(start)?);
    let budget = Budget::new(opts.max_evals);
    if !budget.take(1) {
        return Err(OptimError::Budget(opts.max_evals));
    }
    let mut best_loss = (problem.loss)(mean.as_slice());
    let mut best = mean.as_slice().to_vec();
    if !best_loss.is_finite() {
        best_loss = f64::INFINITY;
    }
    let mut trace = vec![TracePoint { iteration: 0, evals: 1, loss: best_loss }];
    let done = |best: Vec<f64>, best_loss: f64, trace: Vec<TracePoint>, used: usize| OptimResult {
        best_params: best,
        best_loss,
        evaluations: used,
        trace,
        seed: opts.seed,
    };
    if n == 0 || !(opts.sigma0 > 0.0) {
        return Ok(done(best, best_loss, trace, budget.used.get()));
    }

    let lambda = opts.population;
    let mu = lambda / 2;
    let raw: Vec<f64> = (0..mu).map(|i| (mu as f64 + 0.5).ln() - ((i + 1) as f64).ln()).collect();
    let wsum: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|v| v / wsum).collect();
    let mueff = 1.0 / w.iter().map(|v| v * v).sum::<f64>();
    let nf = n as f64;
    let cs = (mueff + 2.0) / (nf + mueff + 5.0);
    let ds = 1.0 + 2.0 * (((mueff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + cs;
    let cc = (4.0 + mueff / nf) / (nf + 4.0 + 2.0 * mueff / nf);
    let c1 = 2.0 / ((nf + 1.3).powi(2) + mueff);
    let cmu = (1.0 - c1).min(2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nf + 2.0).powi(2) + mueff));
    let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

    let mut sigma = opts.sigma0;
    let mut cov = DMatrix::<f64>::identity(n, n);
    let mut ps = DVector::<f64>::zeros(n);
    let mut pc = DVector::<f64>::zeros(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut gen = 0usize;

    while budget.remaining() >= lambda {
        let eig = SymmetricEigen::new(cov.clone());
        let b = eig.eigenvectors;
        let d = eig.eigenvalues.map(|v| v.max(1e-300).sqrt());
        if sigma * d.max() < 1e-14 {
            break;
        }
        let mut xs = Vec::with_capacity(lambda);
        let mut ys = Vec::with_capacity(lambda);
        for _ in 0..lambda {
            let z = DVector::<f64>::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
            let y = &b * d.component_mul(&z);
            let mut x = (&mean + sigma * &y).as_slice().to_vec();
            problem.project(&mut x);
            let y_eff = (DVector::from_column_slice(&x) - &mean) / sigma;
            xs.push(x);
            ys.push(y_eff);
        }
        budget.take(lambda);
        let losses: Vec<f64> = xs
            .par_iter()
            .map(|x| {
                let f = (problem.loss)(x);
                if f.is_nan() {
                    f64::INFINITY
                } else {
                    f
                }
            })
            .collect();
        let mut order: Vec<usize> = (0..lambda).collect();
        order.sort_by(|&i, &j| losses[i].total_cmp(&losses[j]));
        if losses[order[0]] < best_loss {
            best_loss = losses[order[0]];
            best = xs[order[0]].clone();
        }
        gen += 1;
        trace.push(TracePoint { iteration: gen, evals: budget.used.get(), loss: best_loss });

        let mut yw = DVector::<f64>::zeros(n);
        for (k, &i) in order.iter().take(mu).enumerate() {
            yw += w[k] * &ys[i];
        }
        mean += sigma * &yw;
        let inv_sqrt = &b * DMatrix::from_diagonal(&d.map(|v| 1.0 / v)) * b.transpose();
        ps = (1.0 - cs) * &ps + (cs * (2.0 - cs) * mueff).sqrt() * (inv_sqrt * &yw);
        let hs_norm = ps.norm() / (1.0 - (1.0 - cs).powi(2 * gen as i32)).sqrt();
        let hsig = if hs_norm < (1.4 + 2.0 / (nf + 1.0)) * chi_n { 1.0 } else { 0.0 };
        pc = (1.0 - cc) * &pc + hsig * (cc * (2.0 - cc) * mueff).sqrt() * &yw;
        let mut rank_mu = DMatrix::<f64>::zeros(n, n);
        for (k, &i) in order.iter().take(mu).enumerate() {
            rank_mu += w[k] * &ys[i] * ys[i].transpose();
        }
        cov = (1.0 - c1 - cmu) * &cov
            + c1 * (&pc * pc.transpose() + (1.0 - hsig) * cc * (2.0 - cc) * &cov)
            + cmu * rank_mu;
        cov = 0.5 * (&cov + cov.transpose());
        sigma *= ((cs / ds) * (ps.norm() / chi_n - 1.0)).exp();
        if !sigma.is_finite() {
            break;
        }
    }
    Ok(done(best, best_loss, trace, budget.used.get()))
}
