//! Surrogate-driven search for optimal binary site labelings.
//!
//! The pipeline runs in stages that each live in their own module:
//!
//! 1. [`dataset`]: `(bitstring, value)` records, staged training-set selection, R².
//! 2. [`surrogate`]: a second-order factorization machine trained by SGD and
//!    exported as a QUBO.
//! 3. [`hamiltonian`]: scaling, cardinality penalties, QUBO → Ising conversion,
//!    exact enumeration and spectra.
//! 4. [`qsim`]: dense statevector simulation with Pauli-trajectory gate noise,
//!    readout noise and calibration-matrix mitigation.
//! 5. [`vqa`]: Ry and QAOA ansätze minimized with an in-repo COBYLA.
//! 6. [`binsearch`]: iterative qubit fixing driven by output marginals.
//!
//! Bit conventions are fixed crate-wide: bit value `1` is hydrogen, `0` is
//! deuterium; string position 1 (the leftmost character) is site 1 and is the
//! most significant bit of a basis-state index; the spin of a bit `b` is
//! `s = 2b - 1`.

pub mod binsearch;
pub mod dataset;
mod error;
pub mod hamiltonian;
pub mod par;
pub mod qsim;
pub mod rng;
pub mod surrogate;
pub mod vqa;

pub use error::{Error, Result};

pub use dataset::{Dataset, FeatureVector, Record};
pub use hamiltonian::{IsingModel, QuboModel, Spectrum};
pub use surrogate::{FmModel, TrainConfig};
