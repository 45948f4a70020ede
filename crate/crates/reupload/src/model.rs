use qsim::{Circuit, GateOp, StateVector};
use serde::{Deserialize, Serialize};

use crate::{ReuploadError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Family {
    /// `[ω, α, β, φ, λ]` per layer, scalar input.
    Fourier,
    /// `[ω_1..ω_d, α, φ]` per layer.
    Uat,
    /// `[θ_1, θ_2, θ_3, w_1, w_2, w_3]` per sub-gate, `⌈d/3⌉` sub-gates per layer.
    #[serde(rename = "CLASSIFIER_U3")]
    ClassifierU3,
    /// `[θ_z, θ_y, w_1..w_d]` per layer.
    #[serde(rename = "ANSATZ_A")]
    AnsatzA,
}

impl Family {
    /// Sub-gates per layer and qubit.
    pub fn split_factor(self, d: usize) -> usize {
        match self {
            Family::ClassifierU3 => d.div_ceil(3).max(1),
            _ => 1,
        }
    }

    /// Parameters per layer and qubit.
    pub fn params_per_gate(self, d: usize) -> usize {
        match self {
            Family::Fourier => 5,
            Family::Uat | Family::AnsatzA => d + 2,
            Family::ClassifierU3 => 6 * self.split_factor(d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entangling {
    #[default]
    None,
    CzAlternating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initial {
    #[default]
    Zero,
    /// H on every qubit first.
    Plus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReuploadModel {
    pub family: Family,
    pub n_qubits: usize,
    pub layers: usize,
    #[serde(default)]
    pub entangling: Entangling,
    pub data_dim: usize,
    pub params: Vec<f64>,
}

/// `offset + Σ coef · params[index]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Angle {
    pub offset: f64,
    pub terms: Vec<(usize, f64)>,
}

impl Angle {
    fn new(terms: impl IntoIterator<Item = (usize, f64)>) -> Self {
        Angle { offset: 0.0, terms: terms.into_iter().filter(|t| t.1 != 0.0).collect() }
    }

    pub fn eval(&self, params: &[f64]) -> f64 {
        self.terms.iter().fold(self.offset, |acc, &(k, c)| acc + c * params[k])
    }

    fn absorb(&mut self, other: Angle) {
        self.offset += other.offset;
        for (k, c) in other.terms {
            match self.terms.iter_mut().find(|t| t.0 == k) {
                Some(t) => t.1 += c,
                None => self.terms.push((k, c)),
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Y,
    Z,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Rot { axis: Axis, qubit: usize, angle: Angle },
    Cz(usize, usize),
    H(usize),
}

/// A model circuit for one data point with every rotation angle affine in the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub n_qubits: usize,
    pub ops: Vec<Op>,
}

impl Program {
    fn gate(op: &Op, params: &[f64], shift: f64) -> GateOp {
        match op {
            Op::Rot { axis: Axis::Y, qubit, angle } => GateOp::ry(*qubit, angle.eval(params) + shift),
            Op::Rot { axis: Axis::Z, qubit, angle } => GateOp::rz(*qubit, angle.eval(params) + shift),
            Op::Cz(a, b) => GateOp::cz(*a, *b),
            Op::H(q) => GateOp::h(*q),
        }
    }

    /// Output state, optionally adding `delta` to the angle of op `shift.0`.
    pub fn run(&self, params: &[f64], shift: Option<(usize, f64)>) -> StateVector {
        let mut s = StateVector::zero(self.n_qubits);
        for (i, op) in self.ops.iter().enumerate() {
            let d = match shift {
                Some((j, d)) if j == i => d,
                _ => 0.0,
            };
            s.apply(&Self::gate(op, params, d)).expect("program ops fit the register");
        }
        s
    }

    pub fn circuit(&self, params: &[f64]) -> Result<Circuit> {
        let mut c = Circuit::new(self.n_qubits);
        for op in &self.ops {
            c.push(Self::gate(op, params, 0.0))?;
        }
        Ok(c)
    }

    /// `(axis, qubit, angle)` of every rotation in time order.
    pub fn rotations(&self, params: &[f64]) -> Vec<(Axis, usize, f64)> {
        self.ops
            .iter()
            .filter_map(|op| match op {
                Op::Rot { axis, qubit, angle } => Some((*axis, *qubit, angle.eval(params))),
                _ => None,
            })
            .collect()
    }

    pub fn cz_count(&self) -> usize {
        self.ops.iter().filter(|op| matches!(op, Op::Cz(..))).count()
    }
}

/// Collects ops and fuses an Rz into the preceding Rz on the same qubit.
struct Builder {
    ops: Vec<Op>,
    last: Vec<Option<usize>>,
}

impl Builder {
    fn rot(&mut self, axis: Axis, qubit: usize, angle: Angle) {
        if axis == Axis::Z {
            if let Some(i) = self.last[qubit] {
                if let Op::Rot { axis: Axis::Z, angle: prev, .. } = &mut self.ops[i] {
                    prev.absorb(angle);
                    return;
                }
            }
        }
        self.last[qubit] = Some(self.ops.len());
        self.ops.push(Op::Rot { axis, qubit, angle });
    }

    fn other(&mut self, op: Op) {
        let qs = match op {
            Op::Cz(a, b) => vec![a, b],
            Op::H(q) => vec![q],
            Op::Rot { qubit, .. } => vec![qubit],
        };
        for q in qs {
            self.last[q] = Some(self.ops.len());
        }
        self.ops.push(op);
    }
}

/// CZ pairs after layer `layer`: (0,1)(2,3).. on even layers, (1,2)(3,0).. on odd ones.
pub fn cz_pairs(n_qubits: usize, layer: usize) -> Vec<(usize, usize)> {
    (0..n_qubits / 2)
        .map(|i| if layer % 2 == 0 { (2 * i, 2 * i + 1) } else { (2 * i + 1, (2 * i + 2) % n_qubits) })
        .collect()
}

impl ReuploadModel {
    /// A model with all parameters zero.
    pub fn new(family: Family, n_qubits: usize, layers: usize, entangling: Entangling, data_dim: usize) -> Result<Self> {
        let n = family.params_per_gate(data_dim) * n_qubits * layers;
        let m = ReuploadModel { family, n_qubits, layers, entangling, data_dim, params: vec![0.0; n] };
        m.validate()?;
        Ok(m)
    }

    pub fn with_params(mut self, params: Vec<f64>) -> Result<Self> {
        self.params = params;
        self.validate()?;
        Ok(self)
    }

    pub fn n_params(&self) -> usize {
        self.family.params_per_gate(self.data_dim) * self.n_qubits * self.layers
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(ReuploadError::Config("a model needs at least one layer".into()));
        }
        if self.n_qubits == 0 || self.n_qubits > 16 {
            return Err(ReuploadError::Config(format!("unsupported qubit count {}", self.n_qubits)));
        }
        if self.data_dim == 0 {
            return Err(ReuploadError::Config("data dimension must be positive".into()));
        }
        if self.family == Family::Fourier && self.data_dim != 1 {
            return Err(ReuploadError::Config("the Fourier family takes scalar inputs".into()));
        }
        if self.entangling == Entangling::CzAlternating && (self.n_qubits < 2 || self.n_qubits % 2 == 1) {
            return Err(ReuploadError::Config("CZ entangling needs an even number of qubits".into()));
        }
        if self.params.len() != self.n_params() {
            return Err(ReuploadError::ParamCount { expected: self.n_params(), got: self.params.len() });
        }
        Ok(())
    }

    /// Gate layout for input `x`; angles stay symbolic in the parameters.
    pub fn program(&self, x: &[f64], initial: Initial) -> Result<Program> {
        if x.len() != self.data_dim {
            return Err(ReuploadError::DataDim { expected: self.data_dim, got: x.len() });
        }
        let nq = self.n_qubits;
        let ppg = self.family.params_per_gate(self.data_dim);
        let mut b = Builder { ops: Vec::new(), last: vec![None; nq] };
        if initial == Initial::Plus {
            for q in 0..nq {
                b.other(Op::H(q));
            }
        }
        let d = self.data_dim;
        for layer in 0..self.layers {
            for q in 0..nq {
                let p = (layer * nq + q) * ppg;
                match self.family {
                    Family::Fourier => {
                        let xv = x[0];
                        b.rot(Axis::Y, q, Angle::new([(p + 3, 2.0)]));
                        b.rot(Axis::Z, q, Angle::new([(p, -2.0 * xv), (p + 1, -1.0), (p + 2, 1.0)]));
                        b.rot(Axis::Y, q, Angle::new([(p + 4, 2.0)]));
                        b.rot(Axis::Z, q, Angle::new([(p + 1, -1.0), (p + 2, -1.0)]));
                    }
                    Family::Uat => {
                        b.rot(Axis::Y, q, Angle::new([(p + d + 1, 2.0)]));
                        let terms = (0..d).map(|i| (p + i, -2.0 * x[i])).chain([(p + d, -2.0)]);
                        b.rot(Axis::Z, q, Angle::new(terms));
                    }
                    Family::ClassifierU3 => {
                        for s in 0..self.family.split_factor(d) {
                            let ps = p + 6 * s;
                            let xs = |i: usize| x.get(3 * s + i).copied().unwrap_or(0.0);
                            b.rot(Axis::Z, q, Angle::new([(ps + 2, 1.0), (ps + 5, xs(2))]));
                            b.rot(Axis::Y, q, Angle::new([(ps + 1, 1.0), (ps + 4, xs(1))]));
                            b.rot(Axis::Z, q, Angle::new([(ps, 1.0), (ps + 3, xs(0))]));
                        }
                    }
                    Family::AnsatzA => {
                        let terms = [(p + 1, 1.0)].into_iter().chain((0..d).map(|i| (p + 2 + i, x[i])));
                        b.rot(Axis::Y, q, Angle::new(terms));
                        b.rot(Axis::Z, q, Angle::new([(p, 1.0)]));
                    }
                }
            }
            if self.entangling == Entangling::CzAlternating && layer + 1 < self.layers {
                for (a, c) in cz_pairs(nq, layer) {
                    b.other(Op::Cz(a, c));
                }
            }
        }
        Ok(Program { n_qubits: nq, ops: b.ops })
    }

    /// Bound circuit for input `x` starting from |0…0⟩.
    pub fn build_circuit(&self, x: &[f64]) -> Result<Circuit> {
        self.validate()?;
        self.program(x, Initial::Zero)?.circuit(&self.params)
    }

    pub fn state(&self, x: &[f64], initial: Initial) -> Result<StateVector> {
        self.validate()?;
        Ok(self.program(x, initial)?.run(&self.params, None))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: ReuploadModel = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }
}

/// `(A_N, B_N)` of a single-qubit scalar-input UAT model acting on |0⟩, by the two-term
/// amplitude update of one layer at a time.
pub fn uat_recursion(model: &ReuploadModel, x: f64) -> Result<(qsim::C64, qsim::C64)> {
    if model.family != Family::Uat || model.n_qubits != 1 || model.data_dim != 1 {
        return Err(ReuploadError::Config("recursion needs a one-qubit scalar UAT model".into()));
    }
    model.validate()?;
    let (mut a, mut b) = (qsim::C64::new(1.0, 0.0), qsim::C64::new(0.0, 0.0));
    for l in model.params.chunks(3) {
        let (w, alpha, phi) = (l[0], l[1], l[2]);
        let g = qsim::C64::from_polar(1.0, w * x + alpha);
        let (c, s) = (phi.cos(), phi.sin());
        (a, b) = ((a * c - b * s) * g, (a * s + b * c) * g.conj());
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use qsim::C64;

    fn mat(model: &ReuploadModel, x: &[f64]) -> Vec<Vec<C64>> {
        let c = model.build_circuit(x).unwrap();
        let cols: Vec<StateVector> = (0..2).map(|i| c.run_exact(&StateVector::basis(1, i)).unwrap()).collect();
        (0..2).map(|r| (0..2).map(|k| cols[k].amps()[r]).collect()).collect()
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(Family::Fourier.params_per_gate(1), 5);
        assert_eq!(Family::Uat.params_per_gate(3), 5);
        assert_eq!(Family::ClassifierU3.params_per_gate(2), 6);
        assert_eq!(Family::ClassifierU3.params_per_gate(4), 12);
        assert_eq!(Family::AnsatzA.params_per_gate(2), 4);
        let m = ReuploadModel::new(Family::ClassifierU3, 4, 3, Entangling::CzAlternating, 2).unwrap();
        assert_eq!(m.n_params(), 72);
        assert!(m.clone().with_params(vec![0.0; 5]).is_err());
        assert!(ReuploadModel::new(Family::Uat, 1, 0, Entangling::None, 1).is_err());
    }

    #[test]
    fn uat_zero_params_is_identity() {
        let m = ReuploadModel::new(Family::Uat, 1, 1, Entangling::None, 1).unwrap();
        let u = mat(&m, &[0.7]);
        assert!((u[0][0] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((u[1][1] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(u[0][1].norm() < 1e-15);
    }

    #[test]
    fn uat_gate_matrix() {
        let (w, alpha, phi, x) = (0.8, -0.3, 1.1, 0.45);
        let m = ReuploadModel::new(Family::Uat, 1, 1, Entangling::None, 1).unwrap().with_params(vec![w, alpha, phi]).unwrap();
        let u = mat(&m, &[x]);
        let g = C64::from_polar(1.0, w * x + alpha);
        let want = [[g * phi.cos(), -g * phi.sin()], [g.conj() * phi.sin(), g.conj() * phi.cos()]];
        for r in 0..2 {
            for c in 0..2 {
                assert!((u[r][c] - want[r][c]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn fourier_gate_matrix() {
        let (w, al, be, ph, la, x) = (1.3, 0.4, -0.9, 0.6, 1.2, -0.35);
        let m = ReuploadModel::new(Family::Fourier, 1, 1, Entangling::None, 1)
            .unwrap()
            .with_params(vec![w, al, be, ph, la])
            .unwrap();
        let u = mat(&m, &[x]);
        let (ea, eb) = (C64::from_polar(1.0, al), C64::from_polar(1.0, be));
        let ap = la.cos() * ph.cos() * ea;
        let am = -la.sin() * ph.sin() * eb;
        let bp = -la.cos() * ph.sin() * ea;
        let bm = -la.sin() * ph.cos() * eb;
        let (ep, em) = (C64::from_polar(1.0, w * x), C64::from_polar(1.0, -w * x));
        let want = [
            [ap * ep + am * em, bp * ep + bm * em],
            [-bm.conj() * ep - bp.conj() * em, am.conj() * ep + ap.conj() * em],
        ];
        for r in 0..2 {
            for c in 0..2 {
                assert!((u[r][c] - want[r][c]).norm() < 1e-14, "{r}{c}");
            }
        }
    }

    #[test]
    fn fourier_zero_frequency_ignores_x() {
        let m = ReuploadModel::new(Family::Fourier, 1, 1, Entangling::None, 1)
            .unwrap()
            .with_params(vec![0.0, 0.3, 0.2, 0.9, -0.4])
            .unwrap();
        let a = mat(&m, &[-0.8]);
        let b = mat(&m, &[0.6]);
        for r in 0..2 {
            for c in 0..2 {
                assert!((a[r][c] - b[r][c]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn classifier_layer_is_u3() {
        let p = vec![0.3, 1.1, -0.7, 0.5, -1.5, 2.0];
        let m = ReuploadModel::new(Family::ClassifierU3, 1, 1, Entangling::None, 2).unwrap().with_params(p.clone()).unwrap();
        let x = [0.4, -0.6];
        let c = m.build_circuit(&x).unwrap();
        let mut u3 = Circuit::new(1);
        u3.push(GateOp::u3(0, p[0] + p[3] * x[0], p[1] + p[4] * x[1], p[2])).unwrap();
        let s = StateVector::basis(1, 1);
        assert!(c.run_exact(&s).unwrap().distance(&u3.run_exact(&s).unwrap()) < 1e-14);
    }

    #[test]
    fn classifier_z_rotations_fuse() {
        let m = ReuploadModel::new(Family::ClassifierU3, 1, 3, Entangling::None, 2).unwrap();
        let prog = m.program(&[0.1, 0.2], Initial::Zero).unwrap();
        assert_eq!(prog.ops.len(), 7);
    }

    #[test]
    fn cz_layout() {
        assert_eq!(cz_pairs(4, 0), vec![(0, 1), (2, 3)]);
        assert_eq!(cz_pairs(4, 1), vec![(1, 2), (3, 0)]);
        assert_eq!(cz_pairs(2, 1), vec![(1, 0)]);
        let m = ReuploadModel::new(Family::ClassifierU3, 4, 3, Entangling::CzAlternating, 2).unwrap();
        assert_eq!(m.program(&[0.0, 0.0], Initial::Zero).unwrap().cz_count(), 4);
        assert!(matches!(m.program(&[0.0], Initial::Zero), Err(ReuploadError::DataDim { .. })));
    }

    #[test]
    fn json_roundtrip() {
        let m = ReuploadModel::new(Family::AnsatzA, 2, 2, Entangling::CzAlternating, 1)
            .unwrap()
            .with_params((0..12).map(|i| i as f64 * 0.1).collect())
            .unwrap();
        let s = m.to_json().unwrap();
        assert!(s.contains("\"ANSATZ_A\"") && s.contains("cz_alternating"));
        assert_eq!(ReuploadModel::from_json(&s).unwrap(), m);
        assert!(ReuploadModel::from_json(&s.replace("\"layers\"", "\"layer\"")).is_err());
    }

    #[test]
    fn relu_rotation_table() {
        let p = [-2.501, 1.685, 1.757, 2.105, 3.822, -1.788, -1.507, -4.640, 0.430, 1.875, 5.038, -1.906];
        let params: Vec<f64> = p.chunks(3).flat_map(|c| [c[1] / 2.0, c[0] / 2.0, c[2] / 2.0]).collect();
        let m = ReuploadModel::new(Family::Uat, 1, 4, Entangling::None, 1).unwrap().with_params(params).unwrap();
        let rows = [
            (-0.5, [2.939, 0.194, 0.813, 5.639]),
            (0.0, [3.782, 2.105, 4.776, 1.875]),
            (1.0, [5.467, 5.927, 0.136, 0.630]),
        ];
        let tau = 2.0 * std::f64::consts::PI;
        for (x, want) in rows {
            let rots = m.program(&[x], Initial::Zero).unwrap().rotations(&m.params);
            let z: Vec<f64> = rots.iter().filter(|r| r.0 == Axis::Z).map(|r| (-r.2).rem_euclid(tau)).collect();
            for (g, w) in z.iter().zip(want) {
                assert!((g - w).abs() < 2e-3, "x={x}: {g} vs {w}");
            }
        }
        let y: Vec<f64> = m.program(&[0.0], Initial::Zero).unwrap().rotations(&m.params).iter()
            .filter(|r| r.0 == Axis::Y)
            .map(|r| r.2.rem_euclid(tau))
            .collect();
        for (g, w) in y.iter().zip([1.757, 4.495, 0.430, 4.377]) {
            assert!((g - w).abs() < 2e-3, "{g} vs {w}");
        }
    }

    #[test]
    fn recursion_matches_simulation() {
        let m = ReuploadModel::new(Family::Uat, 1, 3, Entangling::None, 1)
            .unwrap()
            .with_params(vec![0.3, -1.0, 0.7, 2.0, 0.4, -0.2, -1.1, 0.9, 1.6])
            .unwrap();
        let (a, b) = uat_recursion(&m, 0.37).unwrap();
        let s = m.state(&[0.37], Initial::Zero).unwrap();
        assert!((s.amps()[0] - a).norm() < 1e-12 && (s.amps()[1] - b).norm() < 1e-12);
    }
}
