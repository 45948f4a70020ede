use std::f64::consts::PI;

use optim::{best_of_restarts, minimize_evolutionary, minimize_quasi_newton, minimize_two_stage, EvoOptions, OptimProblem, OptimResult, QnOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::loss::Objective;
use crate::{ReuploadModel, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    QuasiNewton,
    Evolutionary,
    TwoStage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainOptions {
    pub method: Method,
    pub restarts: usize,
    pub seed: u64,
    /// Evaluation budget per restart and stage.
    pub max_evals: usize,
    pub population: usize,
    pub sigma0: f64,
    pub tol: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions { method: Method::QuasiNewton, restarts: 10, seed: 0, max_evals: 300, population: 16, sigma0: 0.5, tol: 1e-7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    /// Circuit parameters followed by any class weights.
    pub params: Vec<f64>,
    pub loss: f64,
    pub restart_losses: Vec<f64>,
    pub evaluations: usize,
    pub best: OptimResult,
}

impl TrainOutcome {
    pub fn model(&self, obj: &Objective) -> Result<ReuploadModel> {
        obj.template.clone().with_params(self.params[..obj.n_circuit()].to_vec())
    }

    pub fn weights<'a>(&'a self, obj: &Objective) -> &'a [f64] {
        &self.params[obj.n_circuit()..]
    }
}

/// Random circuit parameters in `[-π, π)` and unit weights.
pub fn random_start(obj: &Objective, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p: Vec<f64> = (0..obj.n_circuit()).map(|_| rng.random_range(-PI..PI)).collect();
    p.extend(std::iter::repeat_n(1.0, obj.n_extra()));
    p
}

/// Best of `restarts` runs from independent random starts.
pub fn train(obj: &Objective, opts: &TrainOptions) -> Result<TrainOutcome> {
    let problem = OptimProblem::new(obj.n_params(), |p| obj.value(p).unwrap_or(f64::INFINITY))
        .with_grad(|p| obj.value_grad(p).map(|r| r.1).unwrap_or_else(|_| vec![f64::NAN; p.len()]));
    let qn = QnOptions { max_evals: opts.max_evals, tol: opts.tol, ..QnOptions::default() };
    let (best, all) = best_of_restarts(opts.restarts.max(1), opts.seed, |s| {
        let start = random_start(obj, s);
        let evo = EvoOptions { population: opts.population, sigma0: opts.sigma0, max_evals: opts.max_evals, seed: s };
        match opts.method {
            Method::QuasiNewton => minimize_quasi_newton(&problem, &start, &qn).map(|r| OptimResult { seed: s, ..r }),
            Method::Evolutionary => minimize_evolutionary(&problem, &start, &evo),
            Method::TwoStage => minimize_two_stage(&problem, &start, &evo, &qn),
        }
    })?;
    Ok(TrainOutcome {
        params: best.best_params.clone(),
        loss: best.best_loss,
        restart_losses: all.iter().map(|r| r.best_loss).collect(),
        evaluations: all.iter().map(|r| r.evaluations).sum(),
        best,
    })
}
