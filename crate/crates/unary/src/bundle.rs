use market::PriceGrid;
use qsim::{Circuit, GateOp, StateVector};

use crate::decompose::{cnots_to_iswap, cry_via_cnot};
use crate::distributor::{build_ladder, middle_qubit, solve_distributor_angles, DistributorAngles};
use crate::{Native, Result};

/// Payoff rotation angle for a bin above the strike.
pub fn payoff_angle(s: f64, k: f64, s_max: f64) -> f64 {
    2.0 * ((s - k) / (s_max - k)).sqrt().clamp(0.0, 1.0).asin()
}

fn push_all(c: &mut Circuit, ops: Vec<GateOp>, native: Native) -> Result<()> {
    let ops = if native == Native::PartialIswap { cnots_to_iswap(ops) } else { ops };
    for op in ops {
        c.push(op)?;
    }
    Ok(())
}

/// cRy(phi_i) from every price qubit above the strike onto the ancilla, as single CRY ops.
pub fn build_payoff(grid: &PriceGrid, k: f64) -> Result<Circuit> {
    build_payoff_native(grid, k, Native::Abstract)
}

pub fn build_payoff_native(grid: &PriceGrid, k: f64, native: Native) -> Result<Circuit> {
    let n = grid.bins();
    let mut c = Circuit::new(n + 1);
    let s_max = grid.s_max();
    if s_max <= k {
        return Ok(c);
    }
    for (i, &s) in grid.prices.iter().enumerate() {
        if s > k {
            let phi = payoff_angle(s, k, s_max);
            let ops = match native {
                Native::Abstract => vec![GateOp::cry(i, n, phi)],
                _ => cry_via_cnot(i, n, phi),
            };
            push_all(&mut c, ops, native)?;
        }
    }
    Ok(c)
}

/// Every circuit piece of the unary pricer for one grid and strike.
#[derive(Debug, Clone)]
pub struct UnaryBundle {
    pub n: usize,
    pub native: Native,
    pub k: f64,
    pub s_max: f64,
    pub angles: DistributorAngles,
    /// X on the middle qubit.
    pub prep: Circuit,
    /// Partial-SWAP ladder.
    pub ladder: Circuit,
    /// Controlled rotations onto the ancilla.
    pub payoff: Circuit,
    /// ladder then payoff; the operator reflected by the Grover step.
    pub a_op: Circuit,
    pub s_psi0: Circuit,
    pub s_0: Circuit,
    /// S_psi0, A^dagger, S_0, A.
    pub grover: Circuit,
}

pub fn build_bundle(grid: &PriceGrid, k: f64, native: Native) -> Result<UnaryBundle> {
    let n = grid.bins();
    let w = n + 1;
    let angles = solve_distributor_angles(&grid.probs)?;
    let mid = middle_qubit(n);

    let mut prep = Circuit::new(w);
    prep.push(GateOp::x(mid))?;
    let ladder = build_ladder(&angles, w, native)?;
    let payoff_native = if native == Native::Best { Native::Cnot } else { native };
    let payoff = build_payoff_native(grid, k, payoff_native)?;
    let mut a_op = ladder.clone();
    a_op.append(&payoff)?;

    let mut s_psi0 = Circuit::new(w);
    for op in [GateOp::x(n), GateOp::z(n), GateOp::x(n)] {
        s_psi0.push(op)?;
    }
    let mut s_0 = Circuit::new(w);
    let refl = vec![GateOp::x(n), GateOp::h(n), GateOp::cnot(mid, n), GateOp::h(n), GateOp::x(n)];
    push_all(&mut s_0, refl, if native == Native::PartialIswap { native } else { Native::Cnot })?;

    let mut grover = s_psi0.clone();
    grover.append(&a_op.adjoint())?;
    grover.append(&s_0)?;
    grover.append(&a_op)?;

    Ok(UnaryBundle { n, native, k, s_max: grid.s_max(), angles, prep, ladder, payoff, a_op, s_psi0, s_0, grover })
}

impl UnaryBundle {
    pub fn width(&self) -> usize {
        self.n + 1
    }

    pub fn ancilla(&self) -> usize {
        self.n
    }

    /// S_max - K, the factor turning P(ancilla = 1) into a payoff.
    pub fn payoff_scale(&self) -> f64 {
        (self.s_max - self.k).max(0.0)
    }

    /// X then the ladder.
    pub fn distributor(&self) -> Circuit {
        let mut c = self.prep.clone();
        c.append(&self.ladder).expect("same width");
        c
    }

    /// prep, A, then `m` Grover steps.
    pub fn full(&self, m: usize) -> Circuit {
        let mut c = self.prep.clone();
        c.append(&self.a_op).expect("same width");
        for _ in 0..m {
            c.append(&self.grover).expect("same width");
        }
        c
    }

    pub fn exact_state(&self, m: usize) -> Result<StateVector> {
        Ok(self.full(m).run_exact(&StateVector::zero(self.width()))?)
    }

    /// Exact P(ancilla = 1) after `m` Grover steps.
    pub fn exact_prob_one(&self, m: usize) -> Result<f64> {
        Ok(self.exact_state(m)?.prob_one(self.ancilla()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use market::{binned_payoff, discretize, OptionSpec};

    fn reference_bundle(native: Native) -> (PriceGrid, UnaryBundle) {
        let spec = OptionSpec::reference();
        let grid = discretize(&spec, 8, 3.0).unwrap();
        let b = build_bundle(&grid, spec.k, native).unwrap();
        (grid, b)
    }

    #[test]
    fn payoff_identity_reference() {
        for native in [Native::Abstract, Native::Cnot, Native::PartialIswap, Native::Best] {
            let (grid, b) = reference_bundle(native);
            let est = b.exact_prob_one(0).unwrap() * b.payoff_scale();
            assert!((est - binned_payoff(&grid, b.k)).abs() < 1e-10, "{native:?}");
        }
    }

    #[test]
    fn payoff_edge_cases() {
        let grid = PriceGrid::new(vec![1.0, 2.0, 3.0], vec![0.2, 0.3, 0.5]).unwrap();
        let b = build_bundle(&grid, 5.0, Native::Abstract).unwrap();
        assert!(b.payoff.is_empty());
        assert_eq!(b.exact_prob_one(0).unwrap(), 0.0);
        let b = build_bundle(&grid, 2.5, Native::Abstract).unwrap();
        assert_eq!(b.payoff.len(), 1);
        assert!((b.payoff.ops()[0].params[0] - std::f64::consts::PI).abs() < 1e-15);
        assert!((b.exact_prob_one(0).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn grover_law() {
        for native in [Native::Abstract, Native::Cnot, Native::PartialIswap] {
            let (_, b) = reference_bundle(native);
            let a = b.exact_prob_one(0).unwrap();
            let th = a.sqrt().asin();
            for m in 0..=4 {
                let expect = ((2 * m + 1) as f64 * th).sin().powi(2);
                assert!((b.exact_prob_one(m).unwrap() - expect).abs() < 1e-8, "{native:?} m={m}");
            }
        }
    }

    #[test]
    fn payoff_stays_unary() {
        let (_, b) = reference_bundle(Native::Abstract);
        let s = b.exact_state(0).unwrap();
        let leak: f64 = s
            .amps()
            .iter()
            .enumerate()
            .filter(|(i, _)| (i & ((1 << b.n) - 1)).count_ones() != 1)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        assert!(leak < 1e-20);
    }
}
