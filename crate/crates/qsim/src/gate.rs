use serde::{Deserialize, Serialize};

use crate::{Result, SimError, StateVector, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    X,
    Z,
    H,
    U3,
    Cnot,
    Cz,
    Cry,
    PartialSwap,
    PartialIswap,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rx => "RX",
            GateKind::Ry => "RY",
            GateKind::Rz => "RZ",
            GateKind::X => "X",
            GateKind::Z => "Z",
            GateKind::H => "H",
            GateKind::U3 => "U3",
            GateKind::Cnot => "CNOT",
            GateKind::Cz => "CZ",
            GateKind::Cry => "CRY",
            GateKind::PartialSwap => "PARTIAL_SWAP",
            GateKind::PartialIswap => "PARTIAL_ISWAP",
        }
    }

    pub fn n_params(self) -> usize {
        match self {
            GateKind::X | GateKind::Z | GateKind::H | GateKind::Cnot | GateKind::Cz => 0,
            GateKind::U3 => 3,
            _ => 1,
        }
    }

    pub fn n_targets(self) -> usize {
        match self {
            GateKind::PartialSwap | GateKind::PartialIswap => 2,
            _ => 1,
        }
    }

    pub fn n_controls(self) -> usize {
        match self {
            GateKind::Cnot | GateKind::Cz | GateKind::Cry => 1,
            _ => 0,
        }
    }

    /// Where parameter `pos` lands in the adjoint gate, and its sign.
    pub fn adjoint_param(self, pos: usize) -> (usize, f64) {
        match self {
            GateKind::U3 => (2 - pos, -1.0),
            _ => (pos, -1.0),
        }
    }

    /// 2x2 matrix acting on the target of a one-target gate.
    pub fn matrix_1q(self, p: &[f64]) -> [[C64; 2]; 2] {
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        match self {
            GateKind::Rx => {
                let (s, c) = (p[0] / 2.0).sin_cos();
                [[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]]
            }
            GateKind::Ry | GateKind::Cry => {
                let (s, c) = (p[0] / 2.0).sin_cos();
                [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]]
            }
            GateKind::Rz => {
                let h = p[0] / 2.0;
                [[C64::from_polar(1.0, -h), z], [z, C64::from_polar(1.0, h)]]
            }
            GateKind::X | GateKind::Cnot => [[z, one], [one, z]],
            GateKind::Z | GateKind::Cz => [[one, z], [z, -one]],
            GateKind::H => {
                let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                [[r, r], [r, -r]]
            }
            GateKind::U3 => {
                // Rz(a) Ry(b) Rz(c)
                let (a, b, cc) = (p[0], p[1], p[2]);
                let (s, c) = (b / 2.0).sin_cos();
                [
                    [C64::from_polar(c, -(a + cc) / 2.0), C64::from_polar(-s, -(a - cc) / 2.0)],
                    [C64::from_polar(s, (a - cc) / 2.0), C64::from_polar(c, (a + cc) / 2.0)],
                ]
            }
            GateKind::PartialSwap | GateKind::PartialIswap => {
                panic!("{} is a two-target gate", self.name())
            }
        }
    }

    /// 4x4 matrix of a two-target gate. Local basis index is `2*bit(t0) + bit(t1)`.
    pub fn matrix_2q(self, p: &[f64]) -> [[C64; 4]; 4] {
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let (s, c) = (p[0] / 2.0).sin_cos();
        let c = C64::new(c, 0.0);
        let (lo, hi) = match self {
            GateKind::PartialSwap => (C64::new(s, 0.0), C64::new(-s, 0.0)),
            GateKind::PartialIswap => (C64::new(0.0, -s), C64::new(0.0, -s)),
            _ => panic!("{} is not a two-target gate", self.name()),
        };
        [[one, z, z, z], [z, c, hi, z], [z, lo, c, z], [z, z, z, one]]
    }
}

/// One gate application: `kind` on `targets`, conditioned on every qubit in `controls` being 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    #[serde(default)]
    pub controls: Vec<usize>,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl GateOp {
    pub fn new(kind: GateKind, targets: Vec<usize>, controls: Vec<usize>, params: Vec<f64>) -> Self {
        GateOp { kind, targets, controls, params }
    }

    pub fn rx(q: usize, theta: f64) -> Self {
        Self::new(GateKind::Rx, vec![q], vec![], vec![theta])
    }
    pub fn ry(q: usize, theta: f64) -> Self {
        Self::new(GateKind::Ry, vec![q], vec![], vec![theta])
    }
    pub fn rz(q: usize, theta: f64) -> Self {
        Self::new(GateKind::Rz, vec![q], vec![], vec![theta])
    }
    pub fn x(q: usize) -> Self {
        Self::new(GateKind::X, vec![q], vec![], vec![])
    }
    pub fn z(q: usize) -> Self {
        Self::new(GateKind::Z, vec![q], vec![], vec![])
    }
    pub fn h(q: usize) -> Self {
        Self::new(GateKind::H, vec![q], vec![], vec![])
    }
    pub fn u3(q: usize, a: f64, b: f64, c: f64) -> Self {
        Self::new(GateKind::U3, vec![q], vec![], vec![a, b, c])
    }
    pub fn cnot(control: usize, target: usize) -> Self {
        Self::new(GateKind::Cnot, vec![target], vec![control], vec![])
    }
    pub fn cz(a: usize, b: usize) -> Self {
        Self::new(GateKind::Cz, vec![b], vec![a], vec![])
    }
    pub fn cry(control: usize, target: usize, theta: f64) -> Self {
        Self::new(GateKind::Cry, vec![target], vec![control], vec![theta])
    }
    pub fn partial_swap(a: usize, b: usize, theta: f64) -> Self {
        Self::new(GateKind::PartialSwap, vec![a, b], vec![], vec![theta])
    }
    pub fn partial_iswap(a: usize, b: usize, theta: f64) -> Self {
        Self::new(GateKind::PartialIswap, vec![a, b], vec![], vec![theta])
    }

    /// All qubits the gate touches, targets first.
    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.targets.iter().chain(self.controls.iter()).copied()
    }

    pub fn arity(&self) -> usize {
        self.targets.len() + self.controls.len()
    }

    /// Structural checks against a register width. Parameters are not checked.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let k = self.kind;
        let checks = [
            ("targets", k.n_targets(), self.targets.len()),
            ("controls", k.n_controls(), self.controls.len()),
            ("params", k.n_params(), self.params.len()),
        ];
        for (what, expected, got) in checks {
            if expected != got {
                return Err(SimError::Arity { kind: k.name(), what, expected, got });
            }
        }
        let mut seen = 0u64;
        for q in self.qubits() {
            if q >= n_qubits {
                return Err(SimError::QubitOutOfRange { qubit: q, n_qubits });
            }
            if seen & (1 << q) != 0 {
                return Err(SimError::RepeatedQubit(q));
            }
            seen |= 1 << q;
        }
        Ok(())
    }

    pub fn check_params(&self) -> Result<()> {
        match self.params.iter().find(|p| !p.is_finite()) {
            Some(&p) => Err(SimError::NonFiniteParam(p)),
            None => Ok(()),
        }
    }

    pub fn adjoint(&self) -> GateOp {
        let mut params = vec![0.0; self.params.len()];
        for (pos, &v) in self.params.iter().enumerate() {
            let (to, sign) = self.kind.adjoint_param(pos);
            params[to] = sign * v;
        }
        GateOp { params, ..self.clone() }
    }

    /// Dense unitary over the gate's own qubits, ordered targets then controls,
    /// with list position j as bit j of the local index.
    pub fn matrix(&self) -> Result<Vec<Vec<C64>>> {
        let k = self.arity();
        let local = GateOp {
            kind: self.kind,
            targets: (0..self.targets.len()).collect(),
            controls: (self.targets.len()..k).collect(),
            params: self.params.clone(),
        };
        let dim = 1usize << k;
        let mut m = vec![vec![C64::new(0.0, 0.0); dim]; dim];
        for col in 0..dim {
            let mut s = StateVector::basis(k, col);
            s.apply(&local)?;
            for (row, a) in s.amps().iter().enumerate() {
                m[row][col] = *a;
            }
        }
        Ok(m)
    }
}
