//! Variational minimization of Ising Hamiltonians: Ry-ansatz VQE and QAOA.

mod ansatz;
mod cobyla;
mod runner;

use serde::{Deserialize, Serialize};

pub(crate) use ansatz::ry_circuit;
pub use ansatz::{build_qaoa_ansatz, build_ry_ansatz, qaoa_gamma_scale, AnsatzKind, AnsatzSpec};
pub use cobyla::{cobyla_minimize, cobyla_try, Minimum};
pub use runner::{
    interpolate_angles, qaoa_run, qaoa_run_warm, qaoa_sweep, run_fixed, vqe_run, Mode, ShotConfig, TopEntry,
    TracePoint, VqaResult, DEFAULT_CALIBRATION_SHOTS, QAOA_BETA_MAX, QAOA_GAMMA_MAX, TOP_K,
};

use crate::par::Execution;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Objective evaluations allowed per restart.
    pub max_iter: usize,
    pub rho_begin: f64,
    pub rho_end: f64,
    pub restarts: usize,
    pub seed: u64,
    /// How restarts are scheduled; results do not depend on it.
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iter: 1000,
            rho_begin: 0.5,
            rho_end: 1e-4,
            restarts: 5,
            seed: 0,
            exec: Execution::default(),
        }
    }
}

impl OptimizerConfig {
    /// The coarse settings used for each binary-search round.
    pub fn loose() -> Self {
        OptimizerConfig {
            max_iter: 50,
            rho_end: 1e-2,
            ..OptimizerConfig::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho_end > 0.0 && self.rho_end < self.rho_begin && self.rho_begin.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < rho_end < rho_begin, got rho_begin {} rho_end {}",
                self.rho_begin, self.rho_end
            )));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}
