//! Unary-basis option pricing: amplitude distributor, payoff encoder, Grover
//! operator, post-selected sampling, and the unary/binary gate-count model.
//!
//! Price register qubits are `0..n`; the ancilla is qubit `n`.

mod bundle;
mod decompose;
mod distributor;
pub mod gatecount;
mod postselect;

pub use bundle::{build_bundle, build_payoff, build_payoff_native, payoff_angle, UnaryBundle};
pub use decompose::{cnot_via_iswap, cry_via_cnot, pswap_via_cnot};
pub use distributor::{build_distributor, ladder, middle_qubit, solve_distributor_angles, DistributorAngles};
pub use postselect::{distributor_kl, is_one_hot, run_priced, smoothed_histogram, PricedRun};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Native entangling gate set used when expanding the abstract circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Native {
    /// Partial-SWAP and cRy kept as single ops.
    Abstract,
    Cnot,
    PartialIswap,
    /// Partial-iSWAP distributor, CNOT payoff and reflections.
    Best,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UnaryError {
    #[error("probability vector is empty or all zero")]
    ZeroGrid,
    #[error("need at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("all {shots} shots rejected by post-selection")]
    AllShotsRejected { shots: usize },
    #[error(transparent)]
    Sim(#[from] qsim::SimError),
}

pub type Result<T> = std::result::Result<T, UnaryError>;
