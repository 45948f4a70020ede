use iqae::{classical_sigma_theta, estimate, iqae_sigma_theta, optimal_sigma_theta, SchedulePolicy};
use market::{analytic_payoff, binned_payoff, discretize, discretize_aligned, grid_reference_payoff, undiscounted_payoff, OptionSpec};
use qsim::{NoiseModel, StateVector, C64};
use rayon::prelude::*;
use reupload::{
    accuracy, best_lambda, guesses, make_dataset, random_start, sample_inputs, train, ComplexTarget, Cost, Entangling, Initial, LabelSet,
    Normalized, Objective, ReuploadModel,
};
use serde::Serialize;
use unary::gatecount::{compare_totals, constructed_counts, crossover, full_counts, table_mismatches, GateCountModel, Representation};
use unary::{build_bundle, Native};

use crate::config::{Benchmark, ClassifyConfig, FitConfig, FitTarget, GatecountConfig, LambdaRule, PriceConfig};
use crate::{CliError, OutputDir, Result, RunRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Price,
    Gatecount,
    Fit,
    Classify,
}

/// Seed for one sweep point, decorrelated from its neighbours.
fn point_seed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(seed, |s, &p| {
        let mut z = s.wrapping_add(p.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    })
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

// ---------------------------------------------------------------- price

#[derive(Debug, Clone, Serialize)]
pub struct PriceRun {
    pub eps: f64,
    pub iterations: usize,
    pub repetition: usize,
    pub seed: u64,
    pub payoff: f64,
    pub uncertainty: f64,
    pub acceptance: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PriceRow {
    pub seed: u64,
    pub eps: f64,
    pub iterations: usize,
    pub series: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PriceResults {
    pub bins: usize,
    pub s_max: f64,
    pub binned_payoff: f64,
    pub window_payoff: f64,
    pub undiscounted_payoff: f64,
    pub black_scholes: f64,
    pub exact_prob_one: f64,
    pub summary: Vec<PriceRow>,
}

pub fn run_price(cfg: &PriceConfig, seed: u64, out: &OutputDir) -> Result<RunRecord<PriceConfig, PriceResults>> {
    cfg.validate()?;
    let spec: OptionSpec = cfg.market;
    let grid = discretize_aligned(&spec, cfg.bins, cfg.width, cfg.alignment)?;
    let bundle = build_bundle(&grid, spec.k, cfg.native)?;
    let exact = binned_payoff(&grid, spec.k);
    let scale = bundle.payoff_scale();
    let a = bundle.exact_prob_one(0)?;
    let theta = a.sqrt().asin();

    let points: Vec<(usize, usize, usize)> = (0..cfg.eps.len())
        .flat_map(|e| cfg.iterations.iter().enumerate().flat_map(move |(i, _)| (0..cfg.repetitions).map(move |r| (e, i, r))))
        .collect();
    let runs: Vec<PriceRun> = points
        .par_iter()
        .map(|&(e, i, r)| {
            let (eps, m) = (cfg.eps[e], cfg.iterations[i]);
            let s = point_seed(seed, &[e as u64, m as u64, r as u64]);
            let noise = if eps > 0.0 { Some(NoiseModel::new(eps)?) } else { None };
            let rec = estimate(&bundle, &SchedulePolicy::linear(m), cfg.shots, noise.as_ref(), cfg.alpha, s)?;
            let (payoff, uncertainty) = rec.payoff(scale);
            let shots: usize = rec.rounds.iter().map(|r| r.shots).sum();
            let accepted: usize = rec.rounds.iter().map(|r| r.accepted).sum();
            Ok(PriceRun {
                eps,
                iterations: m,
                repetition: r,
                seed: s,
                payoff,
                uncertainty,
                acceptance: accepted as f64 / shots as f64,
                rel_error: (payoff - exact).abs() / exact,
            })
        })
        .collect::<Result<_>>()?;

    let to_payoff = |sigma_theta: f64| scale * (2.0 * theta).sin() * sigma_theta;
    let mut summary = Vec::new();
    for &eps in &cfg.eps {
        for &m in &cfg.iterations {
            let sel: Vec<&PriceRun> = runs.iter().filter(|r| r.eps == eps && r.iterations == m).collect();
            let pay: Vec<f64> = sel.iter().map(|r| r.payoff).collect();
            let mut err: Vec<f64> = sel.iter().map(|r| r.rel_error).collect();
            let mut acc: Vec<f64> = sel.iter().map(|r| r.acceptance).collect();
            let unc: Vec<f64> = sel.iter().map(|r| r.uncertainty).collect();
            let policy = SchedulePolicy::linear(m);
            let (pay_mean, pay_std) = mean_std(&pay);
            let (err_mean, err_std) = mean_std(&err);
            let rows = [
                ("payoff_mean", pay_mean),
                ("payoff_std", pay_std),
                ("rel_error_mean", err_mean),
                ("rel_error_std", err_std),
                ("rel_error_median", median(&mut err)),
                ("uncertainty_mean", mean_std(&unc).0),
                ("acceptance_median", median(&mut acc)),
                ("sigma_classical", to_payoff(classical_sigma_theta(&policy, cfg.shots))),
                ("sigma_optimal", to_payoff(optimal_sigma_theta(&policy, cfg.shots))),
                ("sigma_predicted", to_payoff(iqae_sigma_theta(&policy, cfg.shots))),
            ];
            summary.extend(rows.into_iter().map(|(series, value)| PriceRow { seed, eps, iterations: m, series, value }));
        }
    }

    let mut files = vec![
        out.write_csv("price.csv", &summary)?,
        out.write_csv("price_runs.csv", &runs)?,
    ];
    let mut grid_csv = Vec::new();
    grid.write_csv(&mut grid_csv)?;
    files.push(out.write_bytes("price_grid.csv", &grid_csv)?);

    let results = PriceResults {
        bins: cfg.bins,
        s_max: grid.s_max(),
        binned_payoff: exact,
        window_payoff: grid_reference_payoff(&spec, &grid),
        undiscounted_payoff: undiscounted_payoff(&spec),
        black_scholes: analytic_payoff(&spec),
        exact_prob_one: a,
        summary,
    };
    finish("price", seed, cfg.clone(), results, files, out)
}

// ---------------------------------------------------------------- gatecount

#[derive(Debug, Clone, Serialize)]
pub struct GatecountRow {
    pub seed: u64,
    pub bins: usize,
    pub series: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Crossover {
    pub native: Native,
    pub bins: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableCheck {
    pub native: Native,
    pub bins: usize,
    pub matches: bool,
    /// Block, table tally, constructed tally.
    pub mismatches: Vec<(unary::gatecount::Block, qsim::Tally, qsim::Tally)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GatecountResults {
    pub crossover: Vec<Crossover>,
    pub table_check: Vec<TableCheck>,
}

fn native_name(n: Native) -> &'static str {
    match n {
        Native::Abstract => "abstract",
        Native::Cnot => "cnot",
        Native::PartialIswap => "partial_iswap",
        Native::Best => "best",
    }
}

pub fn run_gatecount(cfg: &GatecountConfig, seed: u64, out: &OutputDir) -> Result<RunRecord<GatecountConfig, GatecountResults>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &native in &cfg.natives {
        for &bins in &cfg.bins {
            let (nb, l) = unary::gatecount::binary_params(bins);
            let u = GateCountModel { representation: Representation::Unary, native, n: bins as f64, kappa: cfg.kappa, l: 0.0 };
            let b = GateCountModel { representation: Representation::Binary, native, n: nb, kappa: cfg.kappa, l };
            let (uc, bc) = (full_counts(&u, cfg.m), full_counts(&b, cfg.m));
            let (ut, bt) = compare_totals(bins, native, cfg.kappa, cfg.m);
            let name = native_name(native);
            for (rep, c, t) in [("unary", uc, ut), ("binary", bc, bt)] {
                for (what, v) in [("one_qubit", c.one_qubit), ("two_qubit", c.two_qubit), ("depth", c.depth), ("total", t)] {
                    rows.push(GatecountRow { seed, bins, series: format!("{rep}_{name}_{what}"), value: v });
                }
            }
        }
    }
    let crossover_list =
        cfg.natives.iter().map(|&native| Crossover { native, bins: crossover(native, cfg.kappa, cfg.m, cfg.max_bins) }).collect();

    let spec = OptionSpec::reference();
    let mut table_check = Vec::new();
    for &native in cfg.natives.iter().filter(|n| matches!(n, Native::Cnot | Native::PartialIswap)) {
        for bins in [4, 8, 16] {
            let grid = discretize(&spec, bins, 3.0)?;
            let c = constructed_counts(&grid, spec.k, native)?;
            let mismatches = table_mismatches(&c, native);
            table_check.push(TableCheck { native, bins, matches: mismatches.is_empty(), mismatches });
        }
    }

    let files = vec![out.write_csv("gatecount.csv", &rows)?];
    finish("gatecount", seed, cfg.clone(), GatecountResults { crossover: crossover_list, table_check }, files, out)
}

// ---------------------------------------------------------------- fit

#[derive(Debug, Clone, Serialize)]
pub struct FitRow {
    pub seed: u64,
    pub target: String,
    pub layers: usize,
    pub series: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveRow {
    pub seed: u64,
    pub target: String,
    pub layers: usize,
    pub x: f64,
    pub series: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitPoint {
    pub target: String,
    pub layers: usize,
    pub chi2: f64,
    pub restart_losses: Vec<f64>,
    pub evaluations: usize,
    /// Largest gradient discrepancy relative to the largest finite-difference component, at a
    /// random parameter point.
    pub gradient_audit: Option<f64>,
    pub model: ReuploadModel,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResults {
    pub points: Vec<FitPoint>,
}

enum Data {
    Z(Vec<f64>),
    Xy(Vec<C64>),
}

fn fit_data(t: FitTarget, xs: &[Vec<f64>]) -> Result<Data> {
    Ok(match t {
        FitTarget::Real(t) => {
            let n = Normalized::new(t);
            Data::Z(xs.iter().map(|x| n.eval(x)).collect())
        }
        FitTarget::Complex(a, b) => {
            let c = ComplexTarget::new(a, b)?;
            Data::Xy(xs.iter().map(|x| c.eval(x[0])).collect())
        }
    })
}

/// Model output: `⟨Z⟩` from |0⟩, or `⟨X⟩ + i⟨Y⟩` from |+⟩.
pub fn model_output(model: &ReuploadModel, benchmark: Benchmark, x: &[f64]) -> Result<C64> {
    let initial = if benchmark == Benchmark::Z { Initial::Zero } else { Initial::Plus };
    let s: StateVector = model.state(x, initial)?;
    let a = s.amps();
    Ok(match benchmark {
        Benchmark::Z => C64::new(a[0].norm_sqr() - a[1].norm_sqr(), 0.0),
        Benchmark::Xy => 2.0 * a[0].conj() * a[1],
    })
}

/// `max_k |g_k - fd_k| / max_k |fd_k|` with central differences of step `h`.
pub fn gradient_discrepancy(obj: &Objective, theta: &[f64], h: f64) -> Result<f64> {
    let (_, g) = obj.value_grad(theta)?;
    let fd: Vec<f64> = (0..theta.len())
        .map(|k| {
            let mut p = theta.to_vec();
            p[k] += h;
            let up = obj.value(&p)?;
            p[k] -= 2.0 * h;
            Ok((up - obj.value(&p)?) / (2.0 * h))
        })
        .collect::<Result<_>>()?;
    let scale = fd.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-12);
    Ok(g.iter().zip(&fd).fold(0.0f64, |a, (x, y)| a.max((x - y).abs())) / scale)
}

pub fn run_fit(cfg: &FitConfig, seed: u64, out: &OutputDir) -> Result<RunRecord<FitConfig, FitResults>> {
    cfg.validate()?;
    let targets = cfg.parsed_targets()?;
    let mut cfg = cfg.clone();
    cfg.train.seed = seed;
    let jobs: Vec<(FitTarget, usize)> = targets.iter().flat_map(|&t| cfg.layers.iter().map(move |&k| (t, k))).collect();
    let points: Vec<FitPoint> = jobs
        .par_iter()
        .map(|&(t, k)| {
            let d = t.dim();
            let xs = sample_inputs(d, cfg.points, seed);
            let template = ReuploadModel::new(cfg.family, 1, k, Entangling::None, d)?;
            let obj = match fit_data(t, &xs)? {
                Data::Z(ys) => Objective::z_regression(&template, &xs, &ys)?,
                Data::Xy(zs) => Objective::xy_regression(&template, &xs, &zs)?,
            };
            let res = train(&obj, &cfg.train)?;
            if !res.loss.is_finite() {
                return Err(CliError::Numerical(format!("{} with {k} layers: non-finite loss", t.name())));
            }
            let gradient_audit = if cfg.gradient_audit {
                Some(gradient_discrepancy(&obj, &random_start(&obj, point_seed(seed, &[k as u64])), 1e-5)?)
            } else {
                None
            };
            Ok(FitPoint {
                target: t.name(),
                layers: k,
                chi2: res.loss,
                restart_losses: res.restart_losses.clone(),
                evaluations: res.evaluations,
                gradient_audit,
                model: res.model(&obj)?,
            })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut curves = Vec::new();
    let mut files = Vec::new();
    for (p, &(t, _)) in points.iter().zip(&jobs) {
        rows.push(FitRow { seed, target: p.target.clone(), layers: p.layers, series: "chi2", value: p.chi2 });
        rows.push(FitRow { seed, target: p.target.clone(), layers: p.layers, series: "evaluations", value: p.evaluations as f64 });
        if let Some(g) = p.gradient_audit {
            rows.push(FitRow { seed, target: p.target.clone(), layers: p.layers, series: "gradient_audit", value: g });
        }
        if t.dim() == 1 {
            let grid = sample_inputs(1, 201, 0);
            let want = match fit_data(t, &grid)? {
                Data::Z(ys) => ys.into_iter().map(|y| C64::new(y, 0.0)).collect(),
                Data::Xy(zs) => zs,
            };
            for (x, w) in grid.iter().zip(want) {
                let got = model_output(&p.model, cfg.benchmark, x)?;
                let row = |series, value| CurveRow { seed, target: p.target.clone(), layers: p.layers, x: x[0], series, value };
                curves.push(row("target_re", w.re));
                curves.push(row("model_re", got.re));
                if cfg.benchmark == Benchmark::Xy {
                    curves.push(row("target_im", w.im));
                    curves.push(row("model_im", got.im));
                }
            }
        }
        let name = format!("fit_models/{}_k{}.json", p.target.replace(':', "_"), p.layers);
        files.push(out.write_json(&name, &p.model)?);
    }
    files.insert(0, out.write_csv("fit.csv", &rows)?);
    if !curves.is_empty() {
        files.insert(1, out.write_csv("fit_curves.csv", &curves)?);
    }
    finish("fit", seed, cfg, FitResults { points }, files, out)
}

// ---------------------------------------------------------------- classify

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyRow {
    pub seed: u64,
    pub layers: usize,
    pub series: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyPoint {
    pub layers: usize,
    pub loss: f64,
    pub restart_losses: Vec<f64>,
    pub evaluations: usize,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    /// Threshold picked on the training split and the test accuracy it gives.
    pub lambda: Option<f64>,
    pub test_accuracy_lambda: Option<f64>,
    pub model: ReuploadModel,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyResults {
    pub n_train: usize,
    pub n_test: usize,
    pub points: Vec<ClassifyPoint>,
}

pub fn run_classify(cfg: &ClassifyConfig, seed: u64, out: &OutputDir) -> Result<RunRecord<ClassifyConfig, ClassifyResults>> {
    cfg.validate()?;
    let mut cfg = cfg.clone();
    cfg.train.seed = seed;
    let n_train = cfg.n_train.unwrap_or_else(|| cfg.problem.default_train());
    cfg.n_train = Some(n_train);
    let ds = make_dataset(cfg.problem, n_train, cfg.n_test, seed);
    let labels = LabelSet::for_classes(ds.classes)?;
    let readout = cfg.cost.readout(cfg.qubits);
    if cfg.cost == Cost::Fidelity && cfg.qubits > 1 && ds.classes > 1 << cfg.qubits {
        return Err(CliError::Config(format!("{} classes do not fit in {} basis states", ds.classes, 1 << cfg.qubits)));
    }

    let points: Vec<ClassifyPoint> = cfg
        .layers
        .par_iter()
        .map(|&k| {
            let template = ReuploadModel::new(cfg.family, cfg.qubits, k, cfg.entangling, ds.dim)?;
            let obj = Objective::classification(&template, cfg.cost, &ds.train, &labels)?;
            let res = train(&obj, &cfg.train)?;
            if !res.loss.is_finite() {
                return Err(CliError::Numerical(format!("{k} layers: non-finite loss")));
            }
            let model = res.model(&obj)?;
            let train_accuracy = accuracy(&model, &labels, readout, &ds.train, None)?;
            let test_accuracy = accuracy(&model, &labels, readout, &ds.test, None)?;
            let (lambda, test_accuracy_lambda) = match cfg.lambda {
                LambdaRule::Argmax => (None, None),
                LambdaRule::Optimal => {
                    let (l, _) = best_lambda(&model, &labels, readout, &ds.train)?;
                    (Some(l), Some(accuracy(&model, &labels, readout, &ds.test, Some(l))?))
                }
            };
            Ok(ClassifyPoint {
                layers: k,
                loss: res.loss,
                restart_losses: res.restart_losses.clone(),
                evaluations: res.evaluations,
                train_accuracy,
                test_accuracy,
                lambda,
                test_accuracy_lambda,
                weights: res.weights(&obj).to_vec(),
                model,
            })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for p in &points {
        let mut push = |series, value| rows.push(ClassifyRow { seed, layers: p.layers, series, value });
        push("loss", p.loss);
        push("train_accuracy", p.train_accuracy);
        push("test_accuracy", p.test_accuracy);
        if let (Some(l), Some(a)) = (p.lambda, p.test_accuracy_lambda) {
            push("lambda", l);
            push("test_accuracy_lambda", a);
        }
    }
    let mut files = vec![out.write_csv("classify.csv", &rows)?];
    let mut data_csv = Vec::new();
    ds.write_csv(&mut data_csv)?;
    files.push(out.write_bytes("classify_data.csv", &data_csv)?);

    if cfg.dump_points {
        let mut header = vec!["layers".to_string()];
        header.extend((1..=ds.dim).map(|i| format!("x{i}")));
        header.extend(["label".into(), "guess".into()]);
        let mut table = Vec::new();
        for p in &points {
            let g = guesses(&p.model, &labels, readout, &ds.test, p.lambda)?;
            for ((x, y), g) in ds.test.points.iter().zip(&ds.test.labels).zip(g) {
                let mut r = vec![p.layers.to_string()];
                r.extend(x.iter().map(|v| v.to_string()));
                r.extend([y.to_string(), g.to_string()]);
                table.push(r);
            }
        }
        files.push(out.write_table("classify_points.csv", &header, &table)?);
    }
    for p in &points {
        files.push(out.write_json(&format!("classify_models/{}_k{}.json", cfg.problem.name(), p.layers), &(&p.model, &p.weights))?);
    }
    finish("classify", seed, cfg, ClassifyResults { n_train, n_test: ds.test.len(), points }, files, out)
}

fn finish<C: Serialize, R: Serialize>(
    command: &'static str,
    seed: u64,
    cfg: C,
    results: R,
    files: Vec<std::path::PathBuf>,
    out: &OutputDir,
) -> Result<RunRecord<C, R>> {
    let mut rec = RunRecord::new(command, seed, cfg, results);
    rec.files = files
        .iter()
        .map(|f| f.strip_prefix(out.path()).unwrap_or(f).display().to_string())
        .chain(std::iter::once(format!("{command}.json")))
        .collect();
    out.write_json(&format!("{command}.json"), &rec)?;
    Ok(rec)
}
