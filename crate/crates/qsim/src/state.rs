use rayon::prelude::*;

use crate::{GateKind, GateOp, Result, SimError, C64};

const PAR_THRESHOLD: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0...0>` on `n_qubits`.
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        amps[index] = C64::new(1.0, 0.0);
        StateVector { n_qubits, amps }
    }

    /// Wraps raw amplitudes. The caller is responsible for normalization.
    pub fn from_amps(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(SimError::NotPowerOfTwo(len));
        }
        Ok(StateVector { n_qubits: len.trailing_zeros() as usize, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// Max-norm distance between amplitude arrays.
    pub fn distance(&self, other: &StateVector) -> f64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn apply(&mut self, op: &GateOp) -> Result<()> {
        op.validate(self.n_qubits)?;
        op.check_params()?;
        self.apply_unchecked(op);
        Ok(())
    }

    pub(crate) fn apply_unchecked(&mut self, op: &GateOp) {
        let ctrl = op.controls.iter().fold(0usize, |m, &c| m | (1 << c));
        match op.kind {
            GateKind::PartialSwap | GateKind::PartialIswap => {
                let m = op.kind.matrix_2q(&op.params);
                apply_2q(&mut self.amps, op.targets[0], op.targets[1], &m, ctrl);
            }
            kind => {
                let m = kind.matrix_1q(&op.params);
                apply_1q(&mut self.amps, op.targets[0], &m, ctrl);
            }
        }
    }

    /// Applies a Pauli (1 = X, 2 = Y, 3 = Z, 0 = identity) on one qubit.
    pub(crate) fn apply_pauli(&mut self, q: usize, which: u8) {
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let m = match which {
            1 => [[z, one], [one, z]],
            2 => [[z, -i], [i, z]],
            3 => [[one, z], [z, -one]],
            _ => return,
        };
        apply_1q(&mut self.amps, q, &m, 0);
    }

    /// Marginal probability that `qubit` reads 1.
    pub fn prob_one(&self, qubit: usize) -> f64 {
        let bit = 1 << qubit;
        self.amps.iter().enumerate().filter(|(i, _)| i & bit != 0).map(|(_, a)| a.norm_sqr()).sum()
    }

    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        Ok(1.0 - 2.0 * self.prob_one(qubit))
    }

    pub fn expectation_x(&self, qubit: usize) -> Result<f64> {
        Ok(2.0 * self.reduced_density(&[qubit])?.get(0, 1).re)
    }

    pub fn expectation_y(&self, qubit: usize) -> Result<f64> {
        Ok(-2.0 * self.reduced_density(&[qubit])?.get(0, 1).im)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(SimError::QubitOutOfRange { qubit, n_qubits: self.n_qubits });
        }
        Ok(())
    }

    /// Partial trace onto `keep`; bit j of the local index is `keep[j]`.
    pub fn reduced_density(&self, keep: &[usize]) -> Result<DensityMatrix> {
        if keep.len() > 4 {
            return Err(SimError::TooManyKept(keep.len()));
        }
        let mut mask = 0usize;
        for &q in keep {
            self.check_qubit(q)?;
            if mask & (1 << q) != 0 {
                return Err(SimError::RepeatedQubit(q));
            }
            mask |= 1 << q;
        }
        let dim = 1 << keep.len();
        let spread = |local: usize| -> usize {
            keep.iter().enumerate().filter(|(j, _)| local >> j & 1 == 1).fold(0, |acc, (_, &q)| acc | (1 << q))
        };
        let offsets: Vec<usize> = (0..dim).map(spread).collect();
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        for rest in 0..self.amps.len() {
            if rest & mask != 0 {
                continue;
            }
            for i in 0..dim {
                let ai = self.amps[rest | offsets[i]];
                if ai.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..dim {
                    data[i * dim + j] += ai * self.amps[rest | offsets[j]].conj();
                }
            }
        }
        Ok(DensityMatrix { dim, data })
    }
}

fn apply_1q(amps: &mut [C64], t: usize, m: &[[C64; 2]; 2], ctrl: usize) {
    let stride = 1 << t;
    let kernel = |base: usize, chunk: &mut [C64]| {
        for i in 0..stride {
            if (base + i) & ctrl != ctrl {
                continue;
            }
            let a0 = chunk[i];
            let a1 = chunk[i + stride];
            chunk[i] = m[0][0] * a0 + m[0][1] * a1;
            chunk[i + stride] = m[1][0] * a0 + m[1][1] * a1;
        }
    };
    if amps.len() >= PAR_THRESHOLD && amps.len() / (2 * stride) >= 8 {
        amps.par_chunks_mut(2 * stride).enumerate().for_each(|(k, c)| kernel(k * 2 * stride, c));
    } else {
        amps.chunks_mut(2 * stride).enumerate().for_each(|(k, c)| kernel(k * 2 * stride, c));
    }
}

fn apply_2q(amps: &mut [C64], a: usize, b: usize, m: &[[C64; 4]; 4], ctrl: usize) {
    let (ba, bb) = (1usize << a, 1usize << b);
    let hi = a.max(b);
    let block = 2usize << hi;
    let kernel = |base: usize, chunk: &mut [C64]| {
        for i in 0..chunk.len() {
            if i & (ba | bb) != 0 || (base + i) & ctrl != ctrl {
                continue;
            }
            let idx = [i, i | bb, i | ba, i | ba | bb];
            let v = [chunk[idx[0]], chunk[idx[1]], chunk[idx[2]], chunk[idx[3]]];
            for (r, &ix) in idx.iter().enumerate() {
                chunk[ix] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2] + m[r][3] * v[3];
            }
        }
    };
    if amps.len() >= PAR_THRESHOLD && amps.len() / block >= 8 {
        amps.par_chunks_mut(block).enumerate().for_each(|(k, c)| kernel(k * block, c));
    } else {
        amps.chunks_mut(block).enumerate().for_each(|(k, c)| kernel(k * block, c));
    }
}

/// Small dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i).re).collect()
    }

    /// `<phi| rho |phi>` for a pure state on the kept qubits.
    pub fn fidelity_with(&self, phi: &[C64]) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += phi[i].conj() * self.get(i, j) * phi[j];
            }
        }
        acc.re
    }
}
