//! Dense state-vector simulation.
//!
//! Qubit 0 is the least-significant bit of a basis-state index, so the basis
//! state `|q_{n-1} ... q_1 q_0>` has index `sum q_j 2^j`.

mod circuit;
mod error;
mod gate;
mod noise;
mod state;

pub use circuit::{Circuit, Slot, Tally};
pub use error::SimError;
pub use gate::{GateKind, GateOp};
pub use noise::{run_trajectory, sample_shots, NoiseModel, ShotResult};
pub use state::{DensityMatrix, StateVector};

pub use num_complex::Complex64 as C64;

pub type Result<T> = std::result::Result<T, SimError>;
