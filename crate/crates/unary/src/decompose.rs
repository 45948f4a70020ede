use std::f64::consts::{FRAC_PI_2, PI};

use qsim::GateOp;

/// CNOT from two full partial-iSWAPs and five single-qubit rotations (up to global phase).
pub fn cnot_via_iswap(control: usize, target: usize) -> Vec<GateOp> {
    vec![
        GateOp::rx(control, PI),
        GateOp::rx(target, -FRAC_PI_2),
        GateOp::partial_iswap(control, target, PI),
        GateOp::ry(control, FRAC_PI_2),
        GateOp::rx(target, PI),
        GateOp::partial_iswap(control, target, PI),
        GateOp::rz(control, 3.0 * FRAC_PI_2),
    ]
}

/// cRy as two CNOTs and two Ry.
pub fn cry_via_cnot(control: usize, target: usize, theta: f64) -> Vec<GateOp> {
    vec![
        GateOp::ry(target, theta / 2.0),
        GateOp::cnot(control, target),
        GateOp::ry(target, -theta / 2.0),
        GateOp::cnot(control, target),
    ]
}

/// `partial_swap(a, b, theta)` as CNOT(a -> b), cRy(theta)(b -> a), CNOT(a -> b), with
/// the cRy further expanded.
pub fn pswap_via_cnot(a: usize, b: usize, theta: f64) -> Vec<GateOp> {
    let mut ops = vec![GateOp::cnot(a, b)];
    ops.extend(cry_via_cnot(b, a, theta));
    ops.push(GateOp::cnot(a, b));
    ops
}

/// Replaces every CNOT in `ops` by its partial-iSWAP form.
pub(crate) fn cnots_to_iswap(ops: Vec<GateOp>) -> Vec<GateOp> {
    ops.into_iter()
        .flat_map(|op| match op.kind {
            qsim::GateKind::Cnot => cnot_via_iswap(op.controls[0], op.targets[0]),
            _ => vec![op],
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use qsim::{Circuit, StateVector, C64};

    /// Max deviation between two circuits' unitaries after removing a global phase.
    fn phase_distance(n: usize, a: &[GateOp], b: &[GateOp]) -> f64 {
        let build = |ops: &[GateOp]| {
            let mut c = Circuit::new(n);
            for op in ops {
                c.push(op.clone()).unwrap();
            }
            c
        };
        let (ca, cb) = (build(a), build(b));
        let mut phase: Option<C64> = None;
        let mut worst: f64 = 0.0;
        for col in 0..1 << n {
            let sa = ca.run_exact(&StateVector::basis(n, col)).unwrap();
            let sb = cb.run_exact(&StateVector::basis(n, col)).unwrap();
            for (x, y) in sa.amps().iter().zip(sb.amps()) {
                if phase.is_none() && y.norm() > 0.5 {
                    phase = Some(x / y);
                }
            }
            let ph = phase.unwrap_or(C64::new(1.0, 0.0));
            for (x, y) in sa.amps().iter().zip(sb.amps()) {
                worst = worst.max((x - ph * y).norm());
            }
        }
        worst
    }

    #[test]
    fn cnot_from_iswaps() {
        for (c, t) in [(0, 1), (1, 0), (2, 0)] {
            assert!(phase_distance(3, &cnot_via_iswap(c, t), &[GateOp::cnot(c, t)]) < 1e-12);
        }
    }

    #[test]
    fn cry_from_cnots() {
        for th in [0.3, -2.0, 3.1] {
            assert!(phase_distance(2, &cry_via_cnot(1, 0, th), &[GateOp::cry(1, 0, th)]) < 1e-12);
        }
    }

    #[test]
    fn pswap_from_cnots() {
        for th in [0.3, -2.0, 3.1] {
            assert!(phase_distance(3, &pswap_via_cnot(2, 0, th), &[GateOp::partial_swap(2, 0, th)]) < 1e-12);
            assert!(phase_distance(2, &pswap_via_cnot(0, 1, th), &[GateOp::partial_swap(0, 1, th)]) < 1e-12);
        }
    }
}
