use serde::{Deserialize, Serialize};

use crate::hamiltonian::IsingModel;
use crate::qsim::{Angle, Circuit, Gate};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum AnsatzKind {
    Ry { depth: usize },
    Qaoa { p: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub kind: AnsatzKind,
    pub n: usize,
    pub param_count: usize,
    pub cnot_count: usize,
}

/// Hardware-efficient Ry ansatz: `depth` rounds of (RY on every qubit,
/// CNOT chain i → i+1), then a closing RY layer.
pub fn build_ry_ansatz(n: usize, depth: usize) -> Result<(Circuit, AnsatzSpec)> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "Ry ansatz needs at least 2 qubits, got {n}"
        )));
    }
    if depth < 1 {
        return Err(Error::InvalidConfig("Ry ansatz depth must be at least 1".into()));
    }
    Ok(ry_circuit(n, depth))
}

/// Same layout without the size checks; a 1-qubit register gets no CNOTs.
pub(crate) fn ry_circuit(n: usize, depth: usize) -> (Circuit, AnsatzSpec) {
    let mut c = Circuit::new(n);
    let mut slot = 0;
    let mut ry_layer = |c: &mut Circuit| {
        for q in 0..n {
            c.push(Gate::Ry(q, Angle::param(slot))).expect("qubit in range");
            slot += 1;
        }
    };
    for _ in 0..depth {
        ry_layer(&mut c);
        for q in 0..n.saturating_sub(1) {
            c.push(Gate::Cnot {
                control: q,
                target: q + 1,
            })
            .expect("qubit in range");
        }
    }
    ry_layer(&mut c);
    let spec = AnsatzSpec {
        kind: AnsatzKind::Ry { depth },
        n,
        param_count: c.num_params(),
        cnot_count: c.cnot_count(),
    };
    (c, spec)
}

/// Scale that maps the optimizer's γ onto the cost unitary: the circuit
/// applies `exp(-i γ H / c)` with `c` the largest |h| or |J|.
pub fn qaoa_gamma_scale(h: &IsingModel) -> f64 {
    let c = h.max_abs_coefficient();
    if c > 0.0 {
        c
    } else {
        1.0
    }
}

/// QAOA ansatz for `h` with `p` layers, parameters `(γ₁, β₁, …, γ_p, β_p)`.
///
/// The measured bit `b` maps to spin `s = 2b - 1`, i.e. `s = -Z`, so a
/// field term becomes `RZ(-2γh)` while couplings keep `ZZ(2γJ)`. The γ
/// parameters are in units of `1 / qaoa_gamma_scale(h)`.
pub fn build_qaoa_ansatz(h: &IsingModel, p: usize) -> Result<(Circuit, AnsatzSpec)> {
    if p < 1 {
        return Err(Error::InvalidConfig("QAOA needs p >= 1".into()));
    }
    let n = h.n();
    let c_scale = qaoa_gamma_scale(h);
    let mut c = Circuit::new(n);
    for q in 0..n {
        c.push(Gate::H(q))?;
    }
    let couplings: Vec<_> = h.couplings().collect();
    for layer in 0..p {
        let gamma = 2 * layer;
        let beta = gamma + 1;
        for &(a, b, j) in &couplings {
            c.push(Gate::Zz(
                a,
                b,
                Angle::Param {
                    slot: gamma,
                    scale: 2.0 * j / c_scale,
                },
            ))?;
        }
        for (q, &hq) in h.h().iter().enumerate() {
            if hq != 0.0 {
                c.push(Gate::Rz(
                    q,
                    Angle::Param {
                        slot: gamma,
                        scale: -2.0 * hq / c_scale,
                    },
                ))?;
            }
        }
        for q in 0..n {
            c.push(Gate::Rx(q, Angle::Param { slot: beta, scale: 2.0 }))?;
        }
    }
    let spec = AnsatzSpec {
        kind: AnsatzKind::Qaoa { p },
        n,
        param_count: 2 * p,
        cnot_count: c.cnot_count(),
    };
    Ok((c, spec))
}
