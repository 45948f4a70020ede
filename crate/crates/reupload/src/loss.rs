use std::f64::consts::FRAC_PI_2;

use qsim::{StateVector, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Part;
use crate::labels::LabelSet;
use crate::model::{Initial, Op, Program, ReuploadModel};
use crate::{ReuploadError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cost {
    /// Mean of `(⟨Z⟩ - f)^2`.
    Z,
    /// Mean of `|⟨X⟩ + i⟨Y⟩ - z|^2`, starting from |+⟩.
    Xy,
    /// Sum of `1 - F_y^2`.
    Fidelity,
    /// `1/2 Σ (α F - Y)^2` with trainable weights.
    WeightedFidelity,
}

/// How class fidelities are read from the output state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    /// Label-state fidelities of each qubit, averaged over qubits.
    LabelStates,
    /// Probabilities of the computational basis states `|0…0⟩, |0…01⟩, …`.
    Basis,
}

impl Cost {
    pub fn readout(self, n_qubits: usize) -> Readout {
        if self == Cost::Fidelity && n_qubits > 1 {
            Readout::Basis
        } else {
            Readout::LabelStates
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Targets {
    Real(Vec<f64>),
    Complex(Vec<C64>),
    Classes(Vec<usize>),
}

fn bloch(state: &StateVector, q: usize) -> [f64; 3] {
    let rho = state.reduced_density(&[q]).expect("qubit in range");
    let off = rho.get(0, 1);
    [2.0 * off.re, -2.0 * off.im, rho.get(0, 0).re - rho.get(1, 1).re]
}

/// A training loss over a fixed set of points, differentiable by parameter shifts.
///
/// The flat parameter vector is the circuit parameters followed by the class weights
/// (weighted fidelity only, laid out class-major: `α[j * Q + q]`).
#[derive(Debug, Clone)]
pub struct Objective {
    pub template: ReuploadModel,
    pub cost: Cost,
    pub labels: Option<LabelSet>,
    programs: Vec<Program>,
    targets: Targets,
}

impl Objective {
    fn programs(model: &ReuploadModel, xs: &[Vec<f64>], initial: Initial) -> Result<Vec<Program>> {
        model.validate()?;
        xs.iter().map(|x| model.program(x, initial)).collect()
    }

    pub fn z_regression(model: &ReuploadModel, xs: &[Vec<f64>], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(ReuploadError::Dimension(format!("{} inputs, {} targets", xs.len(), ys.len())));
        }
        Ok(Objective {
            template: model.clone(),
            cost: Cost::Z,
            labels: None,
            programs: Self::programs(model, xs, Initial::Zero)?,
            targets: Targets::Real(ys.to_vec()),
        })
    }

    pub fn xy_regression(model: &ReuploadModel, xs: &[Vec<f64>], zs: &[C64]) -> Result<Self> {
        if xs.len() != zs.len() {
            return Err(ReuploadError::Dimension(format!("{} inputs, {} targets", xs.len(), zs.len())));
        }
        Ok(Objective {
            template: model.clone(),
            cost: Cost::Xy,
            labels: None,
            programs: Self::programs(model, xs, Initial::Plus)?,
            targets: Targets::Complex(zs.to_vec()),
        })
    }

    pub fn classification(model: &ReuploadModel, cost: Cost, part: &Part, labels: &LabelSet) -> Result<Self> {
        if !matches!(cost, Cost::Fidelity | Cost::WeightedFidelity) {
            return Err(ReuploadError::Config(format!("{cost:?} is not a classification cost")));
        }
        let c = labels.classes();
        if let Some(&y) = part.labels.iter().find(|&&y| y >= c) {
            return Err(ReuploadError::Labels(format!("label {y} with {c} label states")));
        }
        if cost.readout(model.n_qubits) == Readout::Basis && c > 1usize << model.n_qubits {
            return Err(ReuploadError::Labels(format!("{c} classes exceed the computational basis")));
        }
        Ok(Objective {
            template: model.clone(),
            cost,
            labels: Some(labels.clone()),
            programs: Self::programs(model, &part.points, Initial::Zero)?,
            targets: Targets::Classes(part.labels.clone()),
        })
    }

    pub fn n_points(&self) -> usize {
        self.programs.len()
    }

    pub fn n_circuit(&self) -> usize {
        self.template.n_params()
    }

    pub fn n_extra(&self) -> usize {
        match (&self.cost, &self.labels) {
            (Cost::WeightedFidelity, Some(l)) => l.classes() * self.template.n_qubits,
            _ => 0,
        }
    }

    pub fn n_params(&self) -> usize {
        self.n_circuit() + self.n_extra()
    }

    /// Circuit parameters of the template, then unit weights.
    pub fn initial_params(&self) -> Vec<f64> {
        let mut p = self.template.params.clone();
        p.extend(std::iter::repeat_n(1.0, self.n_extra()));
        p
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(ReuploadError::ParamCount { expected: self.n_params(), got: theta.len() });
        }
        Ok(())
    }

    fn observables(&self, state: &StateVector) -> Vec<f64> {
        let nq = self.template.n_qubits;
        match (self.cost, self.cost.readout(nq)) {
            (Cost::Z, _) => vec![state.expectation_z(0).expect("qubit 0")],
            (Cost::Xy, _) => {
                let b = bloch(state, 0);
                vec![b[0], b[1]]
            }
            (_, Readout::Basis) => {
                let c = self.labels.as_ref().map_or(0, |l| l.classes());
                state.amps()[..c].iter().map(|a| a.norm_sqr()).collect()
            }
            (_, Readout::LabelStates) => (0..nq).flat_map(|q| bloch(state, q)).collect(),
        }
    }

    /// Loss of point `i` with its derivatives by the observables and by the weights.
    fn point(&self, i: usize, obs: &[f64], extra: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let m = self.n_points() as f64;
        match (&self.targets, self.cost) {
            (Targets::Real(ys), _) => {
                let e = obs[0] - ys[i];
                (e * e / m, vec![2.0 * e / m], vec![])
            }
            (Targets::Complex(zs), _) => {
                let (ex, ey) = (obs[0] - zs[i].re, obs[1] - zs[i].im);
                ((ex * ex + ey * ey) / m, vec![2.0 * ex / m, 2.0 * ey / m], vec![])
            }
            (Targets::Classes(ys), Cost::Fidelity) => {
                let y = ys[i];
                let labels = self.labels.as_ref().expect("classification has labels");
                match self.cost.readout(self.template.n_qubits) {
                    Readout::Basis => {
                        let f = obs[y];
                        let mut d = vec![0.0; obs.len()];
                        d[y] = -2.0 * f;
                        (1.0 - f * f, d, vec![])
                    }
                    Readout::LabelStates => {
                        let n = labels.bloch[y];
                        let f = labels.fidelity(y, &[obs[0], obs[1], obs[2]]);
                        (1.0 - f * f, n.iter().map(|v| -f * v).collect(), vec![])
                    }
                }
            }
            (Targets::Classes(ys), _) => {
                let labels = self.labels.as_ref().expect("classification has labels");
                let target = labels.target(ys[i]);
                let nq = self.template.n_qubits;
                let mut loss = 0.0;
                let mut d_obs = vec![0.0; obs.len()];
                let mut d_alpha = vec![0.0; extra.len()];
                for (j, tj) in target.iter().enumerate() {
                    let n = labels.bloch[j];
                    for q in 0..nq {
                        let r = [obs[3 * q], obs[3 * q + 1], obs[3 * q + 2]];
                        let f = labels.fidelity(j, &r);
                        let a = extra[j * nq + q];
                        let e = a * f - tj;
                        loss += 0.5 * e * e;
                        d_alpha[j * nq + q] = e * f;
                        for k in 0..3 {
                            d_obs[3 * q + k] += e * a * n[k] / 2.0;
                        }
                    }
                }
                (loss, d_obs, d_alpha)
            }
        }
    }

    pub fn value(&self, theta: &[f64]) -> Result<f64> {
        self.check(theta)?;
        let (circ, extra) = theta.split_at(self.n_circuit());
        Ok((0..self.n_points())
            .into_par_iter()
            .map(|i| {
                let obs = self.observables(&self.programs[i].run(circ, None));
                self.point(i, &obs, extra).0
            })
            .collect::<Vec<_>>()
            .iter()
            .sum())
    }

    /// Loss and its exact gradient: each rotation is shifted by ±π/2 and the chain rule
    /// maps rotation-angle derivatives onto parameters.
    pub fn value_grad(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check(theta)?;
        let nc = self.n_circuit();
        let (circ, extra) = theta.split_at(nc);
        let per_point: Vec<(f64, Vec<f64>)> = (0..self.n_points())
            .into_par_iter()
            .map(|i| {
                let mut grad = vec![0.0; theta.len()];
                let prog = &self.programs[i];
                let obs = self.observables(&prog.run(circ, None));
                let (l, d_obs, d_alpha) = self.point(i, &obs, extra);
                for (k, d) in d_alpha.iter().enumerate() {
                    grad[nc + k] += d;
                }
                for (op_i, op) in prog.ops.iter().enumerate() {
                    let Op::Rot { angle, .. } = op else { continue };
                    if angle.terms.is_empty() {
                        continue;
                    }
                    let plus = self.observables(&prog.run(circ, Some((op_i, FRAC_PI_2))));
                    let minus = self.observables(&prog.run(circ, Some((op_i, -FRAC_PI_2))));
                    let d_angle: f64 = d_obs.iter().zip(plus.iter().zip(&minus)).map(|(g, (p, m))| g * (p - m) / 2.0).sum();
                    for &(k, c) in &angle.terms {
                        grad[k] += c * d_angle;
                    }
                }
                (l, grad)
            })
            .collect();
        let mut loss = 0.0;
        let mut grad = vec![0.0; theta.len()];
        for (l, g) in &per_point {
            loss += l;
            grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
        }
        Ok((loss, grad))
    }
}

/// Derivative of `observable(state)` with respect to parameter `index` at input `x`,
/// from shifted circuits only.
pub fn parameter_shift(
    model: &ReuploadModel,
    x: &[f64],
    initial: Initial,
    index: usize,
    observable: impl Fn(&StateVector) -> f64,
) -> Result<f64> {
    model.validate()?;
    if index >= model.n_params() {
        return Err(ReuploadError::ParamCount { expected: model.n_params(), got: index + 1 });
    }
    let prog = model.program(x, initial)?;
    let mut d = 0.0;
    for (i, op) in prog.ops.iter().enumerate() {
        let Op::Rot { angle, .. } = op else { continue };
        for &(k, c) in &angle.terms {
            if k == index {
                let p = observable(&prog.run(&model.params, Some((i, FRAC_PI_2))));
                let m = observable(&prog.run(&model.params, Some((i, -FRAC_PI_2))));
                d += c * (p - m) / 2.0;
            }
        }
    }
    Ok(d)
}

pub fn z_benchmark_loss(model: &ReuploadModel, xs: &[Vec<f64>], ys: &[f64]) -> Result<f64> {
    Objective::z_regression(model, xs, ys)?.value(&model.params)
}

pub fn xy_benchmark_loss(model: &ReuploadModel, xs: &[Vec<f64>], zs: &[C64]) -> Result<f64> {
    Objective::xy_regression(model, xs, zs)?.value(&model.params)
}

pub fn fidelity_cost(model: &ReuploadModel, part: &Part, labels: &LabelSet) -> Result<f64> {
    Objective::classification(model, Cost::Fidelity, part, labels)?.value(&model.params)
}

/// `alphas` are class-major, `α[j * Q + q]`.
pub fn weighted_fidelity_cost(model: &ReuploadModel, part: &Part, labels: &LabelSet, alphas: &[f64]) -> Result<f64> {
    let obj = Objective::classification(model, Cost::WeightedFidelity, part, labels)?;
    if alphas.len() != obj.n_extra() {
        return Err(ReuploadError::Dimension(format!("{} weights, expected {}", alphas.len(), obj.n_extra())));
    }
    let mut theta = model.params.clone();
    theta.extend_from_slice(alphas);
    obj.value(&theta)
}

/// Class fidelities of the output state for input `x`.
pub fn fidelities(model: &ReuploadModel, labels: &LabelSet, readout: Readout, x: &[f64]) -> Result<Vec<f64>> {
    let state = model.state(x, Initial::Zero)?;
    let c = labels.classes();
    Ok(match readout {
        Readout::Basis => {
            if c > state.amps().len() {
                return Err(ReuploadError::Labels(format!("{c} classes exceed the computational basis")));
            }
            state.amps()[..c].iter().map(|a| a.norm_sqr()).collect()
        }
        Readout::LabelStates => {
            let nq = model.n_qubits;
            let rs: Vec<[f64; 3]> = (0..nq).map(|q| bloch(&state, q)).collect();
            (0..c).map(|j| rs.iter().map(|r| labels.fidelity(j, r)).sum::<f64>() / nq as f64).collect()
        }
    })
}

/// Largest fidelity wins; ties go to the lowest class id.
pub fn classify(model: &ReuploadModel, labels: &LabelSet, readout: Readout, x: &[f64]) -> Result<(usize, Vec<f64>)> {
    let f = fidelities(model, labels, readout, x)?;
    let mut best = 0;
    for j in 1..f.len() {
        if f[j] > f[best] {
            best = j;
        }
    }
    if f.iter().enumerate().any(|(j, &v)| j != best && v == f[best]) {
        log::debug!("fidelity tie at {x:?}, picking class {best}");
    }
    Ok((best, f))
}

/// Fraction of correct guesses. With `lambda` (two classes only) a point is class 0
/// when its class-0 fidelity exceeds `lambda`.
pub fn accuracy(model: &ReuploadModel, labels: &LabelSet, readout: Readout, part: &Part, lambda: Option<f64>) -> Result<f64> {
    if let Some(l) = lambda {
        if !(0.0..=1.0).contains(&l) {
            return Err(ReuploadError::Lambda(l));
        }
        if labels.classes() != 2 {
            return Err(ReuploadError::Labels("a threshold needs exactly two classes".into()));
        }
    }
    if part.is_empty() {
        return Ok(0.0);
    }
    let guesses = guesses(model, labels, readout, part, lambda)?;
    let correct = guesses.iter().zip(&part.labels).filter(|(g, y)| g == y).count();
    Ok(correct as f64 / part.len() as f64)
}

pub fn guesses(model: &ReuploadModel, labels: &LabelSet, readout: Readout, part: &Part, lambda: Option<f64>) -> Result<Vec<usize>> {
    part.points
        .par_iter()
        .map(|x| {
            let (c, f) = classify(model, labels, readout, x)?;
            Ok(match lambda {
                Some(l) => usize::from(f[0] <= l),
                None => c,
            })
        })
        .collect()
}

/// Sweeps `λ = 0, 0.01, …, 1` and returns the best threshold with its accuracy; ties
/// keep the threshold closest to 1/2.
pub fn best_lambda(model: &ReuploadModel, labels: &LabelSet, readout: Readout, part: &Part) -> Result<(f64, f64)> {
    let f0: Vec<f64> = part
        .points
        .par_iter()
        .map(|x| fidelities(model, labels, readout, x).map(|f| f[0]))
        .collect::<Result<_>>()?;
    if labels.classes() != 2 {
        return Err(ReuploadError::Labels("a threshold needs exactly two classes".into()));
    }
    let mut best = (0.5, -1.0);
    for i in 0..=100 {
        let l = i as f64 / 100.0;
        let correct = f0.iter().zip(&part.labels).filter(|(f, &y)| usize::from(**f <= l) == y).count();
        let acc = correct as f64 / part.len().max(1) as f64;
        if acc > best.1 || (acc == best.1 && (l - 0.5).abs() < (best.0 - 0.5f64).abs()) {
            best = (l, acc);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Entangling, Family};

    fn ansatz(params: Vec<f64>) -> ReuploadModel {
        ReuploadModel::new(Family::AnsatzA, 1, 1, Entangling::None, 1).unwrap().with_params(params).unwrap()
    }

    #[test]
    fn shift_rule_on_ry() {
        let z = |s: &StateVector| s.expectation_z(0).unwrap();
        assert!(parameter_shift(&ansatz(vec![0.0, 0.0, 0.0]), &[0.0], Initial::Zero, 1, z).unwrap().abs() < 1e-15);
        let d = parameter_shift(&ansatz(vec![0.0, FRAC_PI_2, 0.0]), &[0.0], Initial::Zero, 1, z).unwrap();
        assert!((d + 1.0).abs() < 1e-14);
    }

    #[test]
    fn z_loss_examples() {
        let m = ansatz(vec![0.0; 3]);
        assert_eq!(z_benchmark_loss(&m, &[vec![0.3]], &[-1.0]).unwrap(), 4.0);
        assert!(z_benchmark_loss(&m, &[vec![0.3], vec![-0.2]], &[1.0, 1.0]).unwrap() < 1e-15);
    }

    #[test]
    fn xy_loss_examples() {
        // identity circuit leaves |+⟩, so ⟨X⟩ = 1
        let m = ansatz(vec![0.0; 3]);
        assert!(xy_benchmark_loss(&m, &[vec![0.1]], &[C64::new(1.0, 0.0)]).unwrap() < 1e-15);
        // Ry(π/2) on |+⟩ gives |1⟩: ⟨X⟩ = ⟨Y⟩ = 0
        let m = ansatz(vec![0.0, FRAC_PI_2, 0.0]);
        assert!((xy_benchmark_loss(&m, &[vec![0.0]], &[C64::new(0.0, 1.0)]).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fidelity_cost_examples() {
        let labels = LabelSet::for_classes(2).unwrap();
        let plus = ansatz(vec![0.0, FRAC_PI_2, 0.0]);
        let part = Part { points: vec![vec![0.0]], labels: vec![0] };
        assert!((fidelity_cost(&plus, &part, &labels).unwrap() - 0.75).abs() < 1e-14);
        let zero = ansatz(vec![0.0; 3]);
        let part = Part { points: vec![vec![0.0], vec![0.5]], labels: vec![0, 0] };
        assert!(fidelity_cost(&zero, &part, &labels).unwrap() < 1e-15);
        let part = Part { points: vec![vec![0.0], vec![0.5]], labels: vec![1, 1] };
        assert!((fidelity_cost(&zero, &part, &labels).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn weighted_fidelity_examples() {
        let labels = LabelSet::for_classes(2).unwrap();
        let zero = ansatz(vec![0.0; 3]);
        let part = Part { points: vec![vec![0.0]], labels: vec![0] };
        assert!(weighted_fidelity_cost(&zero, &part, &labels, &[1.0, 1.0]).unwrap() < 1e-15);
        let part = Part { points: vec![vec![0.0], vec![0.3]], labels: vec![0, 1] };
        assert!((weighted_fidelity_cost(&zero, &part, &labels, &[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(weighted_fidelity_cost(&zero, &part, &labels, &[1.0]).is_err());
    }

    #[test]
    fn classify_and_ties() {
        let zero = ansatz(vec![0.0; 3]);
        let tri = LabelSet::for_classes(3).unwrap();
        let (c, f) = classify(&zero, &tri, Readout::LabelStates, &[0.2]).unwrap();
        assert_eq!(c, 0);
        assert!(f.iter().all(|v| (v - 0.5).abs() < 1e-14));
        let two = LabelSet::for_classes(2).unwrap();
        let one = ansatz(vec![0.0, std::f64::consts::PI, 0.0]);
        let (c, f) = classify(&one, &two, Readout::LabelStates, &[0.0]).unwrap();
        assert_eq!(c, 1);
        assert!((f[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn accuracy_threshold() {
        let two = LabelSet::for_classes(2).unwrap();
        let m = ansatz(vec![0.0, 0.0, 2.0]);
        let part = Part { points: vec![vec![-0.5], vec![0.1], vec![1.2]], labels: vec![0, 0, 1] };
        let plain = accuracy(&m, &two, Readout::LabelStates, &part, None).unwrap();
        let half = accuracy(&m, &two, Readout::LabelStates, &part, Some(0.5)).unwrap();
        assert_eq!(plain, half);
        assert_eq!(plain, 1.0);
        assert!(accuracy(&m, &two, Readout::LabelStates, &part, Some(1.5)).is_err());
        let (l, acc) = best_lambda(&m, &two, Readout::LabelStates, &part).unwrap();
        assert_eq!(acc, 1.0);
        assert!((0.0..=1.0).contains(&l));
    }
}
