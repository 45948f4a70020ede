use std::f64::consts::PI;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use optim::{best_of_restarts, minimize_evolutionary, minimize_quasi_newton, EvoOptions, OptimProblem, QnOptions};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rastrigin(x: &[f64]) -> f64 {
    10.0 * x.len() as f64 + x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>()
}

#[test]
fn rastrigin_escapes_local_minima() {
    let p = OptimProblem::new(2, rastrigin);
    let mut hits = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let start = [rng.random_range(-5.12..5.12), rng.random_range(-5.12..5.12)];
        let opts = EvoOptions { population: 20, sigma0: 2.0, max_evals: 2000, seed };
        let r = minimize_evolutionary(&p, &start, &opts).unwrap();
        if r.best_loss < 1.0 {
            hits += 1;
        }
    }
    println!("rastrigin hits {hits}/20");
    assert!(hits >= 10, "{hits}/20");
}

fn boxed_quadratic<'a>(
    dim: usize,
    center: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    outside: &'a AtomicBool,
    calls: &'a AtomicUsize,
) -> OptimProblem<'a> {
    let b2 = bounds.clone();
    OptimProblem::new(dim, move |x| {
        calls.fetch_add(1, Ordering::Relaxed);
        if x.iter().zip(&b2).any(|(&v, &(lo, hi))| v < lo || v > hi) {
            outside.store(true, Ordering::Relaxed);
        }
        x.iter().zip(&center).map(|(a, c)| (a - c).powi(2) + (3.0 * a).sin()).sum()
    })
    .with_bounds(bounds)
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bounds_and_budget_respected(
        center in prop::collection::vec(-4.0f64..4.0, 3),
        start in prop::collection::vec(-3.0f64..3.0, 3),
        budget in 5usize..300,
        seed in 0u64..1000,
    ) {
        let bounds = vec![(-1.0, 1.5), (-2.0, 0.5), (0.0, 2.0)];
        let outside = AtomicBool::new(false);
        let calls = AtomicUsize::new(0);
        let p = boxed_quadratic(3, center, bounds, &outside, &calls);
        let r = minimize_evolutionary(&p, &start, &EvoOptions { population: 6, sigma0: 1.0, max_evals: budget, seed }).unwrap();
        prop_assert!(r.evaluations <= budget);
        prop_assert_eq!(calls.load(Ordering::Relaxed), r.evaluations);
        prop_assert!(p.contains(&r.best_params));
        let before = calls.load(Ordering::Relaxed);
        let q = minimize_quasi_newton(&p, &start, &QnOptions { max_evals: budget, ..Default::default() }).unwrap();
        prop_assert!(q.evaluations <= budget);
        prop_assert_eq!(calls.load(Ordering::Relaxed) - before, q.evaluations);
        prop_assert!(p.contains(&q.best_params));
        prop_assert!(!outside.load(Ordering::Relaxed));
        prop_assert!(q.trace.windows(2).all(|w| w[1].loss <= w[0].loss));
        prop_assert!(((p.loss)(&q.best_params) - q.best_loss).abs() <= 1e-12);
        prop_assert!(((p.loss)(&r.best_params) - r.best_loss).abs() <= 1e-12);
    }

    #[test]
    fn best_of_restarts_dominates(seed in 0u64..1000) {
        let p = OptimProblem::new(2, rastrigin);
        let (best, all) = best_of_restarts(4, seed, |s| {
            minimize_evolutionary(&p, &[3.0, -2.0], &EvoOptions { population: 8, sigma0: 1.0, max_evals: 200, seed: s })
        }).unwrap();
        prop_assert!(all.iter().all(|r| best.best_loss <= r.best_loss));
        prop_assert!(all.windows(2).all(|w| w[0].trace != w[1].trace));
    }
}

#[test]
fn trace_csv_has_header() {
    let p = OptimProblem::new(1, |x| (x[0] - 2.0).powi(2));
    let r = minimize_quasi_newton(&p, &[0.0], &QnOptions::default()).unwrap();
    let mut buf = Vec::new();
    r.write_trace_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("eval_index,loss\n"));
    assert_eq!(text.lines().count(), r.trace.len() + 1);
}
