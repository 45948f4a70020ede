use std::path::Path;

use market::{OptionSpec, StrikeAlignment};
use reupload::{Cost, Entangling, Family, Problem, Target, TrainOptions};
use serde::{Deserialize, Serialize};
use unary::Native;

use crate::{CliError, Result};

/// Whole config file. Each subcommand reads its own section; missing sections fall
/// back to defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub price: Option<PriceConfig>,
    pub gatecount: Option<GatecountConfig>,
    pub fit: Option<FitConfig>,
    pub classify: Option<ClassifyConfig>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("line {}, column {}: {e}", e.line(), e.column())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriceConfig {
    pub market: OptionSpec,
    pub bins: usize,
    /// Window half-width in standard deviations of S_T.
    pub width: f64,
    pub alignment: StrikeAlignment,
    pub native: Native,
    pub eps: Vec<f64>,
    /// Last Grover power M of the linear schedule 0, 1, .., M.
    pub iterations: Vec<usize>,
    pub shots: usize,
    pub alpha: f64,
    pub repetitions: usize,
}

impl Default for PriceConfig {
    fn default() -> Self {
        PriceConfig {
            market: OptionSpec::reference(),
            bins: 8,
            width: 3.0,
            alignment: StrikeAlignment::None,
            native: Native::Cnot,
            eps: vec![0.0, 0.001, 0.003, 0.005],
            iterations: vec![0, 1, 2, 3, 4],
            shots: 10_000,
            alpha: 0.05,
            repetitions: 10,
        }
    }
}

impl PriceConfig {
    pub fn validate(&self) -> Result<()> {
        self.market.validate().map_err(|e| CliError::Config(e.to_string()))?;
        check(self.bins >= 2, "price.bins must be at least 2")?;
        check(self.width > 0.0, "price.width must be positive")?;
        check(!self.eps.is_empty() && self.eps.iter().all(|e| (0.0..=1.0).contains(e)), "price.eps must be a non-empty list in [0, 1]")?;
        check(!self.iterations.is_empty(), "price.iterations must not be empty")?;
        check(self.shots > 0, "price.shots must be positive")?;
        check(self.alpha > 0.0 && self.alpha < 1.0, "price.alpha must lie in (0, 1)")?;
        check(self.repetitions > 0, "price.repetitions must be positive")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GatecountConfig {
    pub bins: Vec<usize>,
    pub natives: Vec<Native>,
    pub kappa: f64,
    /// Grover steps included in the totals.
    pub m: usize,
    /// Upper limit of the crossover search.
    pub max_bins: usize,
}

impl Default for GatecountConfig {
    fn default() -> Self {
        GatecountConfig {
            bins: (1..=10).map(|p| 1usize << p).collect(),
            natives: vec![Native::Cnot, Native::PartialIswap, Native::Best],
            kappa: 0.5,
            m: 1,
            max_bins: 4096,
        }
    }
}

impl GatecountConfig {
    pub fn validate(&self) -> Result<()> {
        check(!self.bins.is_empty() && self.bins.iter().all(|&b| b >= 2), "gatecount.bins must be a non-empty list of values >= 2")?;
        check(!self.natives.is_empty(), "gatecount.natives must not be empty")?;
        check(!self.natives.contains(&Native::Abstract), "gatecount.natives: `abstract` has no table row")?;
        check((0.0..=1.0).contains(&self.kappa), "gatecount.kappa must lie in [0, 1]")?;
        check(self.max_bins >= 2, "gatecount.max_bins must be at least 2")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    Z,
    Xy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub family: Family,
    pub benchmark: Benchmark,
    /// Target names. For the X-Y benchmark each entry is `real:imag`, e.g. `tanh:relu`.
    pub targets: Vec<String>,
    pub layers: Vec<usize>,
    pub points: usize,
    pub train: TrainOptions,
    /// Compare parameter-shift and finite-difference gradients at a seeded random point.
    pub gradient_audit: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            family: Family::Uat,
            benchmark: Benchmark::Z,
            targets: vec!["relu".into(), "tanh".into(), "step".into(), "poly".into()],
            layers: (1..=6).collect(),
            points: 100,
            train: TrainOptions::default(),
            gradient_audit: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitTarget {
    Real(Target),
    Complex(Target, Target),
}

impl FitTarget {
    pub fn name(&self) -> String {
        match self {
            FitTarget::Real(t) => t.name().to_string(),
            FitTarget::Complex(a, b) => format!("{}:{}", a.name(), b.name()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FitTarget::Real(t) => t.dim(),
            FitTarget::Complex(..) => 1,
        }
    }
}

impl FitConfig {
    pub fn parsed_targets(&self) -> Result<Vec<FitTarget>> {
        let parse = |s: &str| s.parse::<Target>().map_err(|e| CliError::Config(format!("fit.targets: {e}")));
        self.targets
            .iter()
            .map(|s| match (self.benchmark, s.split_once(':')) {
                (Benchmark::Z, None) => Ok(FitTarget::Real(parse(s)?)),
                (Benchmark::Xy, Some((a, b))) => {
                    let (a, b) = (parse(a)?, parse(b)?);
                    if a.dim() != 1 || b.dim() != 1 {
                        return Err(CliError::Config(format!("fit.targets: `{s}` must use one-dimensional targets")));
                    }
                    Ok(FitTarget::Complex(a, b))
                }
                (Benchmark::Z, Some(_)) => Err(CliError::Config(format!("fit.targets: `{s}` is complex but benchmark is `z`"))),
                (Benchmark::Xy, None) => Err(CliError::Config(format!("fit.targets: `{s}` must be `real:imag` for benchmark `xy`"))),
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        check(!self.targets.is_empty(), "fit.targets must not be empty")?;
        let targets = self.parsed_targets()?;
        check(!self.layers.is_empty(), "fit.layers must not be empty")?;
        check(self.layers.iter().all(|&k| k > 0), "fit.layers: zero layers is not a circuit")?;
        check(self.points > 0, "fit.points must be positive")?;
        if self.family == Family::Fourier {
            check(targets.iter().all(|t| t.dim() == 1), "fit: the FOURIER family takes one-dimensional inputs only")?;
        }
        check_train(&self.train, "fit.train")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaRule {
    /// Plain argmax over fidelities.
    #[default]
    Argmax,
    /// Binary problems: threshold chosen on the training split.
    Optimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyConfig {
    pub problem: Problem,
    pub family: Family,
    pub qubits: usize,
    pub layers: Vec<usize>,
    pub entangling: Entangling,
    pub cost: Cost,
    /// Defaults to the problem's usual training size.
    pub n_train: Option<usize>,
    pub n_test: usize,
    pub lambda: LambdaRule,
    pub train: TrainOptions,
    /// Write every test point with its label and guess.
    pub dump_points: bool,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            problem: Problem::Circle,
            family: Family::ClassifierU3,
            qubits: 1,
            layers: vec![1, 2, 3, 4, 5],
            entangling: Entangling::None,
            cost: Cost::WeightedFidelity,
            n_train: None,
            n_test: 4000,
            lambda: LambdaRule::Argmax,
            train: TrainOptions::default(),
            dump_points: true,
        }
    }
}

impl ClassifyConfig {
    pub fn validate(&self) -> Result<()> {
        check(!self.layers.is_empty(), "classify.layers must not be empty")?;
        check(self.layers.iter().all(|&k| k > 0), "classify.layers: zero layers is not a circuit")?;
        check(matches!(self.qubits, 1 | 2 | 4), "classify.qubits must be 1, 2 or 4")?;
        check(
            self.qubits > 1 || self.entangling == Entangling::None,
            "classify.entangling needs more than one qubit",
        )?;
        check(self.family != Family::Fourier, "classify: the FOURIER family takes one-dimensional inputs only")?;
        check(
            matches!(self.cost, Cost::Fidelity | Cost::WeightedFidelity),
            "classify.cost must be `fidelity` or `weighted_fidelity`",
        )?;
        check(self.n_train.is_none_or(|n| n > 0), "classify.n_train must be positive")?;
        check(self.n_test > 0, "classify.n_test must be positive")?;
        check(
            self.lambda == LambdaRule::Argmax || self.problem.classes() == 2,
            "classify.lambda `optimal` needs a binary problem",
        )?;
        check_train(&self.train, "classify.train")
    }
}

fn check_train(t: &TrainOptions, at: &str) -> Result<()> {
    check(t.restarts > 0, &format!("{at}.restarts must be positive"))?;
    check(t.max_evals > 0, &format!("{at}.max_evals must be positive"))?;
    check(t.population >= 4, &format!("{at}.population must be at least 4"))?;
    check(t.sigma0 >= 0.0, &format!("{at}.sigma0 must be non-negative"))
}

fn check(ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(msg.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        PriceConfig::default().validate().unwrap();
        GatecountConfig::default().validate().unwrap();
        FitConfig::default().validate().unwrap();
        ClassifyConfig::default().validate().unwrap();
    }

    #[test]
    fn partial_sections_fill_defaults() {
        let cfg = ExperimentConfig::parse(r#"{"seed": 7, "price": {"bins": 16}}"#).unwrap();
        assert_eq!(cfg.seed, Some(7));
        let p = cfg.price.unwrap();
        assert_eq!(p.bins, 16);
        assert_eq!(p.shots, PriceConfig::default().shots);
        assert!(cfg.classify.is_none());
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = ExperimentConfig::parse("{\n\"fit\": {\n\"layerz\": [1]}}").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn targets_follow_benchmark() {
        let mut f = FitConfig { targets: vec!["tanh".into(), "himmelblau".into()], ..FitConfig::default() };
        let t = f.parsed_targets().unwrap();
        assert_eq!(t[0], FitTarget::Real(Target::Tanh));
        assert_eq!(t[1].dim(), 2);
        f.benchmark = Benchmark::Xy;
        assert!(f.parsed_targets().is_err());
        f.targets = vec!["relu:step".into()];
        assert_eq!(f.parsed_targets().unwrap()[0].name(), "relu:step");
        f.targets = vec!["relu:himmelblau".into()];
        assert!(f.parsed_targets().is_err());
    }

    #[test]
    fn classify_rejections() {
        let base = ClassifyConfig::default();
        for bad in [
            ClassifyConfig { qubits: 3, ..base.clone() },
            ClassifyConfig { layers: vec![], ..base.clone() },
            ClassifyConfig { entangling: Entangling::CzAlternating, ..base.clone() },
            ClassifyConfig { family: Family::Fourier, ..base.clone() },
            ClassifyConfig { problem: Problem::ThreeCircles, lambda: LambdaRule::Optimal, ..base.clone() },
            ClassifyConfig { n_test: 0, ..base.clone() },
        ] {
            assert_eq!(bad.validate().unwrap_err().exit_code(), 2);
        }
        ClassifyConfig { qubits: 2, entangling: Entangling::CzAlternating, ..base }.validate().unwrap();
    }
}
