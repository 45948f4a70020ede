use qsim::{Circuit, GateOp};
use serde::{Deserialize, Serialize};

use crate::decompose::pswap_via_cnot;
use crate::{Native, Result, UnaryError};

/// Partial-SWAP angles; `thetas[i - 1]` acts on the bond between qubits `i - 1` and `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributorAngles {
    pub thetas: Vec<f64>,
    /// Bins with zero probability, whose angles took a limiting value.
    pub zero_bins: Vec<usize>,
}

impl DistributorAngles {
    pub fn bins(&self) -> usize {
        self.thetas.len() + 1
    }
}

/// Qubit carrying the initial excitation.
pub fn middle_qubit(n: usize) -> usize {
    n / 2
}

/// One amplitude transfer: `src` hands part of its excitation to neighbour `dst` through `bond`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transfer {
    pub src: usize,
    pub dst: usize,
    pub bond: usize,
}

/// The partial-SWAP ladder grouped by time step. The left branch starts one step
/// ahead of the right, both run outward from the middle.
pub fn ladder(n: usize) -> Vec<Vec<Transfer>> {
    let mid = middle_qubit(n);
    let steps = mid.max(n - mid);
    (1..=steps)
        .map(|s| {
            let mut step = Vec::new();
            if s <= mid {
                let bond = mid + 1 - s;
                step.push(Transfer { src: bond, dst: bond - 1, bond });
            }
            if s >= 2 && mid + s - 1 < n {
                let bond = mid + s - 1;
                step.push(Transfer { src: bond - 1, dst: bond, bond });
            }
            step
        })
        .collect()
}

fn half_angle(pass: f64, keep: f64) -> f64 {
    2.0 * pass.max(0.0).sqrt().atan2(keep.max(0.0).sqrt())
}

/// Angles loading `sqrt(p_i)` onto unary state `i`. Solved from the outer bins inward:
/// each bond passes on exactly the mass that lies beyond it.
pub fn solve_distributor_angles(probs: &[f64]) -> Result<DistributorAngles> {
    let n = probs.len();
    if n < 2 {
        return Err(UnaryError::TooFewBins(n));
    }
    let total: f64 = probs.iter().sum();
    if !(total > 0.0) || probs.iter().any(|p| !(*p >= 0.0)) {
        return Err(UnaryError::ZeroGrid);
    }
    let p: Vec<f64> = probs.iter().map(|x| x / total).collect();
    let mid = middle_qubit(n);
    let mut below = vec![0.0; n + 1];
    for i in 0..n {
        below[i + 1] = below[i] + p[i];
    }
    let above = |i: usize| 1.0 - below[i];
    let mut thetas = vec![0.0; n - 1];
    for bond in 1..n {
        thetas[bond - 1] = if bond <= mid {
            let keep = if bond == mid { above(mid) } else { p[bond] };
            half_angle(below[bond], keep)
        } else {
            half_angle(above(bond), p[bond - 1])
        };
    }
    let zero_bins: Vec<usize> = (0..n).filter(|&i| p[i] == 0.0).collect();
    if !zero_bins.is_empty() {
        log::warn!("empty bins {zero_bins:?}; their angles take limiting values");
    }
    Ok(DistributorAngles { thetas, zero_bins })
}

/// X on the middle qubit followed by the partial-SWAP ladder, on a register of
/// `width >= n` qubits.
pub fn build_distributor(angles: &DistributorAngles, width: usize, native: Native) -> Result<Circuit> {
    let n = angles.bins();
    let mut c = Circuit::new(width);
    c.push(GateOp::x(middle_qubit(n)))?;
    c.append(&build_ladder(angles, width, native)?)?;
    Ok(c)
}

/// The ladder alone, without the initial X.
pub(crate) fn build_ladder(angles: &DistributorAngles, width: usize, native: Native) -> Result<Circuit> {
    let n = angles.bins();
    let mut c = Circuit::new(width);
    for step in ladder(n) {
        for t in step {
            let theta = angles.thetas[t.bond - 1];
            let ops = match native {
                Native::Abstract => vec![GateOp::partial_swap(t.dst, t.src, theta)],
                Native::PartialIswap | Native::Best => vec![GateOp::partial_iswap(t.dst, t.src, theta)],
                Native::Cnot => pswap_via_cnot(t.dst, t.src, theta),
            };
            for op in ops {
                c.push(op)?;
            }
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use qsim::StateVector;
    use std::f64::consts::FRAC_PI_2;

    fn unary_amps(c: &Circuit, n: usize) -> Vec<f64> {
        let s = c.run_exact(&StateVector::zero(c.n_qubits())).unwrap();
        (0..n).map(|i| s.amps()[1 << i].norm()).collect()
    }

    #[test]
    fn two_bins() {
        let a = solve_distributor_angles(&[0.5, 0.5]).unwrap();
        assert!((a.thetas[0] - FRAC_PI_2).abs() < 1e-15);
        let a = solve_distributor_angles(&[0.8, 0.2]).unwrap();
        assert!((a.thetas[0] - 2.0 * 2f64.atan()).abs() < 1e-14);
        let c = build_distributor(&a, 2, Native::Abstract).unwrap();
        let amps = unary_amps(&c, 2);
        assert!((amps[0] - 0.8f64.sqrt()).abs() < 1e-14);
        assert!((amps[1] - 0.2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn three_bins() {
        let a = solve_distributor_angles(&[0.25, 0.5, 0.25]).unwrap();
        let c = build_distributor(&a, 3, Native::Abstract).unwrap();
        let s = c.run_exact(&StateVector::zero(3)).unwrap();
        assert!((s.amps()[1].re - 0.5).abs() < 1e-14);
        assert!((s.amps()[2].re - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((s.amps()[4].re - 0.5).abs() < 1e-14);
    }

    #[test]
    fn ladder_shape() {
        for n in 2..=17 {
            let steps = ladder(n);
            assert_eq!(steps.len(), n.div_ceil(2));
            let gates: usize = steps.iter().map(|s| s.len()).sum();
            assert_eq!(gates, n - 1);
            assert_eq!(steps[0][0].src, middle_qubit(n));
        }
    }

    #[test]
    fn edge_ratios_hold() {
        let p = [0.05, 0.1, 0.2, 0.3, 0.15, 0.12, 0.08];
        let a = solve_distributor_angles(&p).unwrap();
        let t = &a.thetas;
        let n = p.len();
        assert!((p[0] / p[1] - (t[0] / 2.0).tan().powi(2)).abs() < 1e-12);
        assert!((p[n - 1] / p[n - 2] - (t[n - 2] / 2.0).tan().powi(2)).abs() < 1e-12);
        // interior left ratio |psi_i / psi_{i+1}|^2 = cos^2(theta_i/2) tan^2(theta_{i+1}/2)
        let i = 1;
        let lhs = p[i] / p[i + 1];
        let rhs = (t[i - 1] / 2.0).cos().powi(2) * (t[i] / 2.0).tan().powi(2);
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn zero_bins_take_limits() {
        let a = solve_distributor_angles(&[0.0, 0.5, 0.5, 0.0]).unwrap();
        assert_eq!(a.zero_bins, vec![0, 3]);
        assert_eq!(a.thetas[0], 0.0);
        let c = build_distributor(&a, 4, Native::Abstract).unwrap();
        let amps = unary_amps(&c, 4);
        assert!(amps[0] < 1e-15 && amps[3] < 1e-15);
        assert!((amps[1] - 0.5f64.sqrt()).abs() < 1e-14);
        assert!(matches!(solve_distributor_angles(&[0.0, 0.0]), Err(UnaryError::ZeroGrid)));
        // a single occupied edge bin forces a full transfer
        let a = solve_distributor_angles(&[1.0, 0.0, 0.0]).unwrap();
        assert!((a.thetas[0] - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn natives_agree_in_magnitude() {
        let p = [0.1, 0.2, 0.3, 0.25, 0.15];
        let a = solve_distributor_angles(&p).unwrap();
        for native in [Native::Abstract, Native::Cnot, Native::PartialIswap] {
            let amps = unary_amps(&build_distributor(&a, 5, native).unwrap(), 5);
            for (x, q) in amps.iter().zip(p) {
                assert!((x * x - q).abs() < 1e-12, "{native:?}");
            }
        }
    }
}
