use unary::gatecount::{full_counts, GateCountModel, Representation};
use unary::Native;

use crate::{z_score, ScheduleKind, SchedulePolicy};

/// Sum of `(2 m_j + 1)^2` over the schedule, in closed form.
pub fn sum_sq_powers(policy: &SchedulePolicy) -> f64 {
    let j = policy.j as f64;
    match policy.kind {
        ScheduleKind::Linear => (j + 1.0) * (2.0 * j + 1.0) * (2.0 * j + 3.0) / 3.0,
        ScheduleKind::Exponential => {
            if policy.j == 0 {
                return 1.0;
            }
            // 1 + sum_{j=1}^{J} (2^j + 1)^2
            1.0 + (4f64.powf(j + 1.0) - 4.0) / 3.0 + 2f64.powf(j + 2.0) - 4.0 + j
        }
    }
}

/// Applications of A or its adjoint per shot, summed over rounds.
pub fn total_applications(policy: &SchedulePolicy) -> f64 {
    policy.powers().iter().map(|&m| (2 * m + 1) as f64).sum()
}

/// Confidence half-width of the fused angle after the whole schedule with `shots` per round.
pub fn precision_law(policy: &SchedulePolicy, shots: usize, alpha: f64) -> f64 {
    z_score(alpha) * iqae_sigma_theta(policy, shots)
}

/// One-sigma spread of the fused angle.
pub fn iqae_sigma_theta(policy: &SchedulePolicy, shots: usize) -> f64 {
    1.0 / (2.0 * (shots as f64 * sum_sq_powers(policy)).sqrt())
}

/// Plain sampling of A with the same number of A applications.
pub fn classical_sigma_theta(policy: &SchedulePolicy, shots: usize) -> f64 {
    1.0 / (2.0 * (shots as f64 * total_applications(policy)).sqrt())
}

/// Every A application used coherently: the spread falls as 1/M at fixed shots.
pub fn optimal_sigma_theta(policy: &SchedulePolicy, shots: usize) -> f64 {
    1.0 / (2.0 * (shots as f64).sqrt() * total_applications(policy))
}

/// Minimum kept fraction at the last round that still beats classical sampling.
/// `alpha_exp` is 3/4 for the linear schedule and 1 for the exponential one.
pub fn advantage_threshold(m_total: f64, alpha_exp: f64) -> f64 {
    m_total.powf(1.0 - 2.0 * alpha_exp)
}

/// Largest per-gate error for which the zero-error probability of the last round
/// still meets [`advantage_threshold`], with `a n + b` gates per Grover step.
pub fn advantage_bound(ab: (f64, f64), n: f64, m_j: usize, alpha_exp: f64) -> f64 {
    let g = ab.0 * n + ab.1;
    let m = m_j as f64;
    1.0 - m.powf((2.0 - 4.0 * alpha_exp) / (g * m))
}

/// `(a, b)` with `a n + b` table gates in one Grover step of the unary circuit.
pub fn unary_gate_coeffs(native: Native, kappa: f64) -> (f64, f64) {
    let step = |n: f64| {
        let model = GateCountModel { representation: Representation::Unary, native, n, kappa, l: 0.0 };
        full_counts(&model, 1).total() - full_counts(&model, 0).total()
    };
    let a = step(2.0) - step(1.0);
    (a, step(1.0) - a)
}
