use market::{binned_payoff, PriceGrid};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use qsim::{Circuit, StateVector, C64};
use unary::{build_bundle, run_priced, Native};

fn arb_grid(max_n: usize) -> impl Strategy<Value = (PriceGrid, f64)> {
    (2..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(0.01f64..1.0, n),
            0.5f64..3.0,
            0.01f64..0.5,
            0.0f64..1.0,
        )
            .prop_map(move |(w, lo, step, kf)| {
                let z: f64 = w.iter().sum();
                let probs = w.iter().map(|x| x / z).collect();
                let prices: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
                let k = prices[0] + kf * (prices[n - 1] - prices[0]);
                (PriceGrid::new(prices, probs).unwrap(), k)
            })
    })
}

fn leak(s: &StateVector, n: usize) -> f64 {
    s.amps()
        .iter()
        .enumerate()
        .filter(|(i, _)| (i & ((1 << n) - 1)).count_ones() != 1)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn stays_in_unary_subspace((grid, k) in arb_grid(12)) {
        let b = build_bundle(&grid, k, Native::Abstract).unwrap();
        let d = b.distributor().run_exact(&StateVector::zero(b.width())).unwrap();
        prop_assert!(leak(&d, b.n) < 1e-10);
        prop_assert!(leak(&b.exact_state(0).unwrap(), b.n) < 1e-10);
    }

    #[test]
    fn grover_phase_law((grid, k) in arb_grid(8)) {
        let b = build_bundle(&grid, k, Native::Abstract).unwrap();
        let th = b.exact_prob_one(0).unwrap().sqrt().asin();
        for m in 0..=4usize {
            let want = ((2 * m + 1) as f64 * th).sin().powi(2);
            prop_assert!((b.exact_prob_one(m).unwrap() - want).abs() < 1e-8);
        }
    }

    #[test]
    fn grover_is_unitary((grid, k) in arb_grid(6), seed in prop::collection::vec(-1.0f64..1.0, 24)) {
        let b = build_bundle(&grid, k, Native::Abstract).unwrap();
        let mut amps = vec![C64::new(0.0, 0.0); 1 << b.width()];
        for q in 0..b.n {
            for anc in 0..2 {
                let j = 2 * q + anc;
                amps[(1 << q) | (anc << b.n)] = C64::new(seed[j % 24], seed[(j + 7) % 24]);
            }
        }
        let z = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(z > 1e-3);
        let psi = StateVector::from_amps(amps.iter().map(|a| a / z).collect()).unwrap();
        let mut qq: Circuit = b.grover.clone();
        qq.append(&b.grover.adjoint()).unwrap();
        let back = qq.run_exact(&psi).unwrap();
        prop_assert!(back.distance(&psi) < 1e-9);
        let fwd = b.grover.run_exact(&psi).unwrap();
        prop_assert!((fwd.norm_sqr() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn payoff_identity_random_grids() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    for _ in 0..100 {
        let (grid, k) = arb_grid(10).new_tree(&mut runner).unwrap().current();
        let b = build_bundle(&grid, k, Native::Abstract).unwrap();
        let est = b.exact_prob_one(0).unwrap() * b.payoff_scale();
        assert!((est - binned_payoff(&grid, k)).abs() < 1e-10);
    }
}

#[test]
fn native_sets_agree() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    for _ in 0..10 {
        let (grid, k) = arb_grid(7).new_tree(&mut runner).unwrap().current();
        let a = build_bundle(&grid, k, Native::Abstract).unwrap();
        for native in [Native::Cnot, Native::PartialIswap, Native::Best] {
            let b = build_bundle(&grid, k, native).unwrap();
            for m in 0..=2 {
                assert!((a.exact_prob_one(m).unwrap() - b.exact_prob_one(m).unwrap()).abs() < 1e-9);
            }
        }
    }
}

/// At zero noise every shot is one-hot, so the accepted-shot estimate is the all-shot
/// estimate, and its spread across seeds is binomial.
#[test]
fn postselection_unbiased_without_noise() {
    let spec = market::OptionSpec::reference();
    let grid = market::discretize(&spec, 8, 3.0).unwrap();
    let b = build_bundle(&grid, spec.k, Native::Abstract).unwrap();
    let a = b.exact_prob_one(0).unwrap();
    let shots = 2000;
    let mut z = Vec::new();
    for seed in 0..100 {
        let r = run_priced(&b, 0, shots, None, seed).unwrap();
        assert_eq!(r.accepted, shots);
        z.push((r.p_hat - a) / (a * (1.0 - a) / shots as f64).sqrt());
    }
    // Kolmogorov-Smirnov against the standard normal
    z.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let n = z.len() as f64;
    let d = z
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = market::normal_cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(d < 1.63 / n.sqrt(), "KS statistic {d}");
}

#[test]
fn acceptance_falls_with_noise() {
    let spec = market::OptionSpec::reference();
    let grid = market::discretize(&spec, 8, 3.0).unwrap();
    let b = build_bundle(&grid, spec.k, Native::Cnot).unwrap();
    let acc: Vec<f64> = [0.0, 0.002, 0.005]
        .iter()
        .map(|&e| {
            let noise = qsim::NoiseModel::new(e).unwrap();
            run_priced(&b, 0, 20_000, Some(&noise), 11).unwrap().acceptance()
        })
        .collect();
    assert!(acc[0] > acc[1] && acc[1] > acc[2], "{acc:?}");
}
