//! Budgeted minimizers for the re-uploading models.
//!
//! Every evaluation of the loss (and every gradient call) counts against `max_evals`,
//! and no point outside the bounds is ever evaluated.

mod evo;
mod qn;

use std::cell::Cell;
use std::io::Write;

use serde::{Deserialize, Serialize};

pub use evo::{minimize_evolutionary, EvoOptions};
pub use qn::{minimize_quasi_newton, QnOptions};

#[derive(Debug, thiserror::Error)]
pub enum OptimError {
    #[error("loss is not finite at the start point")]
    NonFiniteStart,
    #[error("start has {got} entries, problem has dimension {dim}")]
    StartDimension { dim: usize, got: usize },
    #[error("population must be at least 4, got {0}")]
    Population(usize),
    #[error("budget of {0} evaluations is too small")]
    Budget(usize),
    #[error("bounds: {0}")]
    Bounds(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, OptimError>;

pub type LossFn<'a> = Box<dyn Fn(&[f64]) -> f64 + Sync + 'a>;
pub type GradFn<'a> = Box<dyn Fn(&[f64]) -> Vec<f64> + Sync + 'a>;

/// A scalar minimization problem.
pub struct OptimProblem<'a> {
    pub dim: usize,
    pub loss: LossFn<'a>,
    pub grad: Option<GradFn<'a>>,
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl<'a> OptimProblem<'a> {
    pub fn new(dim: usize, loss: impl Fn(&[f64]) -> f64 + Sync + 'a) -> Self {
        OptimProblem { dim, loss: Box::new(loss), grad: None, bounds: None }
    }

    pub fn with_grad(mut self, grad: impl Fn(&[f64]) -> Vec<f64> + Sync + 'a) -> Self {
        self.grad = Some(Box::new(grad));
        self
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.len() != self.dim {
            return Err(OptimError::Bounds(format!("{} intervals for dimension {}", bounds.len(), self.dim)));
        }
        if let Some((lo, hi)) = bounds.iter().find(|(lo, hi)| !(lo <= hi)) {
            return Err(OptimError::Bounds(format!("empty interval [{lo}, {hi}]")));
        }
        self.bounds = Some(bounds);
        Ok(self)
    }

    /// Clamps `x` into the box in place.
    pub fn project(&self, x: &mut [f64]) {
        if let Some(b) = &self.bounds {
            for (xi, &(lo, hi)) in x.iter_mut().zip(b) {
                *xi = xi.clamp(lo, hi);
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match &self.bounds {
            Some(b) => x.iter().zip(b).all(|(&xi, &(lo, hi))| xi >= lo && xi <= hi),
            None => true,
        }
    }

    fn check_start(&self, start: &[f64]) -> Result<Vec<f64>> {
        if start.len() != self.dim {
            return Err(OptimError::StartDimension { dim: self.dim, got: start.len() });
        }
        let mut x = start.to_vec();
        self.project(&mut x);
        Ok(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    /// Evaluations used when this point was recorded.
    pub evals: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub best_params: Vec<f64>,
    pub best_loss: f64,
    pub evaluations: usize,
    pub trace: Vec<TracePoint>,
    pub seed: u64,
}

impl OptimResult {
    /// Writes `eval_index,loss` rows.
    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["eval_index", "loss"])?;
        for t in &self.trace {
            wr.write_record([t.evals.to_string(), format!("{:e}", t.loss)])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Counts evaluations against a hard budget.
struct Budget {
    used: Cell<usize>,
    max: usize,
}

impl Budget {
    fn new(max: usize) -> Self {
        Budget { used: Cell::new(0), max }
    }

    fn remaining(&self) -> usize {
        self.max - self.used.get()
    }

    fn take(&self, n: usize) -> bool {
        if self.remaining() < n {
            return false;
        }
        self.used.set(self.used.get() + n);
        true
    }
}

/// Evolutionary warm start followed by a quasi-Newton polish from its best point.
pub fn minimize_two_stage(
    problem: &OptimProblem,
    start: &[f64],
    evo: &EvoOptions,
    qn: &QnOptions,
) -> Result<OptimResult> {
    let first = minimize_evolutionary(problem, start, evo)?;
    let second = minimize_quasi_newton(problem, &first.best_params, qn)?;
    let offset = first.evaluations;
    let mut trace = first.trace;
    let last_iter = trace.last().map_or(0, |t| t.iteration + 1);
    trace.extend(second.trace.iter().map(|t| TracePoint {
        iteration: t.iteration + last_iter,
        evals: t.evals + offset,
        loss: t.loss,
    }));
    let (best_params, best_loss) = if second.best_loss <= first.best_loss {
        (second.best_params, second.best_loss)
    } else {
        (first.best_params, first.best_loss)
    };
    Ok(OptimResult { best_params, best_loss, evaluations: offset + second.evaluations, trace, seed: evo.seed })
}

/// Runs `restarts` independent minimizations with seeds `seed, seed + 1, ...` and keeps
/// the lowest loss. Ties go to the earliest restart.
pub fn best_of_restarts<F>(restarts: usize, seed: u64, mut run: F) -> Result<(OptimResult, Vec<OptimResult>)>
where
    F: FnMut(u64) -> Result<OptimResult>,
{
    let mut all = Vec::with_capacity(restarts);
    for r in 0..restarts as u64 {
        all.push(run(seed.wrapping_add(r))?);
    }
    let best = all
        .iter()
        .min_by(|a, b| a.best_loss.total_cmp(&b.best_loss))
        .cloned()
        .ok_or(OptimError::Budget(0))?;
    Ok((best, all))
}

/// Central differences with a step scaled to each coordinate; stays inside the bounds by
/// switching to a one-sided stencil at the edges.
pub fn central_difference(problem: &OptimProblem, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let step = h * x[i].abs().max(1.0);
        let (mut lo, mut hi) = (x[i] - step, x[i] + step);
        if let Some(b) = &problem.bounds {
            lo = lo.max(b[i].0);
            hi = hi.min(b[i].1);
        }
        if hi <= lo {
            continue;
        }
        xp[i] = hi;
        let fp = (problem.loss)(&xp);
        xp[i] = lo;
        let fm = (problem.loss)(&xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (hi - lo);
    }
    g
}
