use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::{central_difference, Budget, OptimError, OptimProblem, OptimResult, Result, TracePoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QnOptions {
    pub max_evals: usize,
    /// Stop once the projected gradient norm drops below this.
    pub tol: f64,
    /// Number of stored curvature pairs.
    pub memory: usize,
    /// Relative step for the finite-difference fallback.
    pub fd_step: f64,
}

impl Default for QnOptions {
    fn default() -> Self {
        QnOptions { max_evals: 2000, tol: 1e-8, memory: 10, fd_step: 1e-6 }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Gradient with components that point out of an active bound removed.
fn projected(problem: &OptimProblem, x: &[f64], g: &[f64]) -> Vec<f64> {
    let mut pg = g.to_vec();
    if let Some(b) = &problem.bounds {
        for i in 0..x.len() {
            if (x[i] <= b[i].0 && g[i] > 0.0) || (x[i] >= b[i].1 && g[i] < 0.0) {
                pg[i] = 0.0;
            }
        }
    }
    pg
}

fn two_loop(mem: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, g: &[f64]) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(mem.len());
    for (s, y, rho) in mem.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = mem.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in mem.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Limited-memory BFGS with backtracking Armijo steps projected onto the bounds.
///
/// Uses the problem's gradient when present (one evaluation per call), otherwise central
/// differences (`2 dim` evaluations per call). Accepted losses never increase.
pub fn minimize_quasi_newton(problem: &OptimProblem, start: &[f64], opts: &QnOptions) -> Result<OptimResult> {
    let mut x = problem.check_start(start)?;
    let budget = Budget::new(opts.max_evals);
    let grad_cost = if problem.grad.is_some() { 1 } else { 2 * problem.dim };
    if !budget.take(1) {
        return Err(OptimError::Budget(opts.max_evals));
    }
    let mut f = (problem.loss)(&x);
    if !f.is_finite() {
        return Err(OptimError::NonFiniteStart);
    }
    let mut trace = vec![TracePoint { iteration: 0, evals: 1, loss: f }];
    let gradient = |x: &[f64]| -> Option<Vec<f64>> {
        if !budget.take(grad_cost) {
            return None;
        }
        Some(match &problem.grad {
            Some(gf) => gf(x),
            None => central_difference(problem, x, opts.fd_step),
        })
    };

    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut g = gradient(&x);
    let mut iteration = 0;
    'outer: while let Some(gk) = g.take() {
        let pg = projected(problem, &x, &gk);
        if norm(&pg) < opts.tol {
            break;
        }
        let mut d = two_loop(&mem, &pg);
        let blocked = projected(problem, &x, &d.iter().map(|v| -v).collect::<Vec<_>>());
        d.iter_mut().zip(&blocked).for_each(|(di, bi)| *di = -bi);
        let mut slope = dot(&gk, &d);
        if !(slope < 0.0) {
            mem.clear();
            d = pg.iter().map(|v| -v).collect();
            slope = dot(&gk, &d);
            if !(slope < 0.0) {
                break;
            }
        }
        let mut t = if mem.is_empty() { (1.0 / norm(&d)).min(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..50 {
            if !budget.take(1) {
                break 'outer;
            }
            let mut xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            problem.project(&mut xn);
            let fnew = (problem.loss)(&xn);
            let step: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            if fnew.is_finite() && fnew <= f + 1e-4 * dot(&gk, &step).min(0.0) {
                accepted = Some((xn, fnew, step));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew, s)) = accepted else {
            if mem.is_empty() {
                break;
            }
            mem.clear();
            g = Some(gk);
            continue;
        };
        iteration += 1;
        let stalled = norm(&s) <= 1e-16 * norm(&x).max(1.0);
        x = xn;
        f = fnew;
        trace.push(TracePoint { iteration, evals: budget.used.get(), loss: f });
        if stalled {
            break;
        }
        g = gradient(&x);
        if let Some(gn) = &g {
            let y: Vec<f64> = gn.iter().zip(&gk).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-12 * norm(&s) * norm(&y) {
                mem.push_back((s, y, 1.0 / sy));
                if mem.len() > opts.memory {
                    mem.pop_front();
                }
            }
        }
    }
    Ok(OptimResult { best_params: x, best_loss: f, evaluations: budget.used.get(), trace, seed: 0 })
}
