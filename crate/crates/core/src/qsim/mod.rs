//! Dense statevector simulation with exact expectations, shot sampling,
//! Pauli-trajectory gate noise, readout noise and readout mitigation.

mod circuit;
mod measure;
mod mitigation;
mod noise;
mod state;

pub use circuit::{noisy_probabilities, run_circuit, Angle, Circuit, Gate};
pub use measure::{expectation_from, expectation_ising, sample, sample_probabilities, Counts, ProbDist};
pub use mitigation::{build_confusion_matrix, build_confusion_matrix_with, mitigate, ConfusionMatrix, Mitigator};
pub use noise::{NoiseModel, ReadoutError};
pub use state::{Pauli, StateVector};

/// Shots per objective evaluation when sampling is requested without an
/// explicit count.
pub const DEFAULT_SHOTS: u64 = 8192;
