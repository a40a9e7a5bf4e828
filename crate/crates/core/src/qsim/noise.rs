use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-qubit readout flip probabilities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReadoutError {
    /// P(read 1 | true 0).
    pub p01: f64,
    /// P(read 0 | true 1).
    pub p10: f64,
}

fn default_trajectories() -> usize {
    32
}

/// Readout flips plus two-qubit depolarizing noise after every CNOT.
///
/// `readout` holds one entry per qubit, a single entry applied to every
/// qubit, or nothing. Gate noise is sampled as Pauli trajectories; shot-mode
/// objectives average `trajectories` of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    #[serde(default)]
    pub readout: Vec<ReadoutError>,
    #[serde(default)]
    pub cnot_depolarizing: f64,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::readout_only(Vec::new())
    }
}

impl NoiseModel {
    pub fn uniform(n: usize, p01: f64, p10: f64, cnot_depolarizing: f64) -> Self {
        NoiseModel {
            readout: vec![ReadoutError { p01, p10 }; n],
            cnot_depolarizing,
            trajectories: default_trajectories(),
        }
    }

    pub fn readout_only(readout: Vec<ReadoutError>) -> Self {
        NoiseModel {
            readout,
            cnot_depolarizing: 0.0,
            trajectories: default_trajectories(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let prob = |p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::InvalidProbability(p))
            }
        };
        prob(self.cnot_depolarizing)?;
        for r in &self.readout {
            prob(r.p01)?;
            prob(r.p10)?;
        }
        if self.readout.len() > 1 && self.readout.len() < n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: self.readout.len(),
            });
        }
        if self.trajectories == 0 {
            return Err(Error::InvalidConfig("trajectories must be at least 1".into()));
        }
        Ok(())
    }

    pub fn readout_for(&self, q: usize) -> ReadoutError {
        match self.readout.len() {
            0 => ReadoutError::default(),
            1 => self.readout[0],
            _ => self.readout[q],
        }
    }

    pub fn has_readout_noise(&self) -> bool {
        self.readout.iter().any(|r| r.p01 > 0.0 || r.p10 > 0.0)
    }

    pub fn has_gate_noise(&self) -> bool {
        self.cnot_depolarizing > 0.0
    }

    /// The model seen by a register made of the given original qubits.
    pub fn restrict(&self, qubits: &[usize]) -> NoiseModel {
        let readout = match self.readout.len() {
            0 | 1 => self.readout.clone(),
            _ => qubits.iter().map(|&q| self.readout[q]).collect(),
        };
        NoiseModel {
            readout,
            cnot_depolarizing: self.cnot_depolarizing,
            trajectories: self.trajectories,
        }
    }
}
