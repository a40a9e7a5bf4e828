use rand::Rng as _;

use super::noise::NoiseModel;
use super::state::{Pauli, StateVector};
use crate::par::{map_range, Execution};
use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::{Error, Result};

/// A rotation angle, either fixed or `scale * params[slot]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Angle {
    Fixed(f64),
    Param { slot: usize, scale: f64 },
}

impl Angle {
    pub fn param(slot: usize) -> Angle {
        Angle::Param { slot, scale: 1.0 }
    }

    fn resolve(self, params: &[f64]) -> f64 {
        match self {
            Angle::Fixed(v) => v,
            Angle::Param { slot, scale } => scale * params[slot],
        }
    }

    fn slot(self) -> Option<usize> {
        match self {
            Angle::Fixed(_) => None,
            Angle::Param { slot, .. } => Some(slot),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    H(usize),
    Rx(usize, Angle),
    Ry(usize, Angle),
    /// `exp(-i θ Z / 2)`.
    Rz(usize, Angle),
    Cnot {
        control: usize,
        target: usize,
    },
    /// `exp(-i θ Z_a Z_b / 2)`, compiled as CNOT · RZ · CNOT.
    Zz(usize, usize, Angle),
}

impl Gate {
    fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::H(q) | Gate::Rx(q, _) | Gate::Ry(q, _) | Gate::Rz(q, _) => (q, None),
            Gate::Cnot { control, target } => (control, Some(target)),
            Gate::Zz(a, b, _) => (a, Some(b)),
        }
    }

    fn angle(&self) -> Option<Angle> {
        match *self {
            Gate::Rx(_, a) | Gate::Ry(_, a) | Gate::Rz(_, a) | Gate::Zz(_, _, a) => Some(a),
            _ => None,
        }
    }

    fn cnots(&self) -> usize {
        match self {
            Gate::Cnot { .. } => 1,
            Gate::Zz(..) => 2,
            _ => 0,
        }
    }
}

/// An ordered gate list over `n` qubits with a flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n: usize,
    num_params: usize,
    ops: Vec<Gate>,
}

impl Circuit {
    pub fn new(n: usize) -> Self {
        Circuit {
            n,
            num_params: 0,
            ops: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn ops(&self) -> &[Gate] {
        &self.ops
    }

    /// Logical CNOT count, with every ZZ counted as two.
    pub fn cnot_count(&self) -> usize {
        self.ops.iter().map(Gate::cnots).sum()
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        let (a, b) = gate.qubits();
        for q in std::iter::once(a).chain(b) {
            if q >= self.n {
                return Err(Error::QubitOutOfRange { index: q, n: self.n });
            }
        }
        if b == Some(a) {
            return Err(Error::InvalidConfig(format!("two-qubit gate on qubit {a} twice")));
        }
        if let Some(slot) = gate.angle().and_then(Angle::slot) {
            self.num_params = self.num_params.max(slot + 1);
        }
        self.ops.push(gate);
        Ok(self)
    }
}

fn depolarize(state: &mut StateVector, a: usize, b: usize, lambda: f64, rng: &mut Rng) {
    if lambda > 0.0 && rng.random::<f64>() < lambda {
        let k: usize = rng.random_range(1..16);
        state.pauli(a, Pauli::from_index(k >> 2));
        state.pauli(b, Pauli::from_index(k & 3));
    }
}

/// Execute `c` on `|0...0>`. With gate noise, one seeded Pauli trajectory is
/// sampled: after every CNOT, with probability λ, a uniformly random
/// non-identity two-qubit Pauli hits its qubits.
pub fn run_circuit(c: &Circuit, params: &[f64], noise: Option<&NoiseModel>, seed: u64) -> Result<StateVector> {
    if params.len() != c.num_params {
        return Err(Error::ParameterCount {
            expected: c.num_params,
            found: params.len(),
        });
    }
    if let Some(m) = noise {
        m.validate(c.n)?;
    }
    let lambda = noise.map_or(0.0, |m| m.cnot_depolarizing);
    let mut rng = rng_from_seed(seed);
    let mut s = StateVector::zero(c.n);
    for gate in &c.ops {
        match *gate {
            Gate::H(q) => s.h(q),
            Gate::Rx(q, a) => s.rx(q, a.resolve(params)),
            Gate::Ry(q, a) => s.ry(q, a.resolve(params)),
            Gate::Rz(q, a) => s.rz(q, a.resolve(params)),
            Gate::Cnot { control, target } => {
                s.cnot(control, target);
                depolarize(&mut s, control, target, lambda, &mut rng);
            }
            Gate::Zz(a, b, angle) => {
                let theta = angle.resolve(params);
                if lambda > 0.0 {
                    s.cnot(a, b);
                    depolarize(&mut s, a, b, lambda, &mut rng);
                    s.rz(b, theta);
                    s.cnot(a, b);
                    depolarize(&mut s, a, b, lambda, &mut rng);
                } else {
                    s.zz(a, b, theta);
                }
            }
        }
    }
    Ok(s)
}

/// Output distribution averaged over seeded noise trajectories (or the
/// exact distribution when there is no gate noise).
pub fn noisy_probabilities(
    c: &Circuit,
    params: &[f64],
    noise: Option<&NoiseModel>,
    seed: u64,
    exec: Execution,
) -> Result<Vec<f64>> {
    let trajectories = match noise {
        Some(m) if m.has_gate_noise() => m.trajectories,
        _ => return Ok(run_circuit(c, params, noise, seed)?.probabilities()),
    };
    let runs = map_range(exec, trajectories, |t| {
        run_circuit(c, params, noise, derive_seed(seed, t as u64)).map(|s| s.probabilities())
    });
    let mut acc = vec![0.0; 1 << c.n];
    for run in runs {
        for (a, p) in acc.iter_mut().zip(run?) {
            *a += p;
        }
    }
    let inv = 1.0 / trajectories as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn empty_circuit_is_ground_state() {
        let s = run_circuit(&Circuit::new(3), &[], None, 0).unwrap();
        assert_eq!(s.probabilities()[0], 1.0);
    }

    #[test]
    fn parameter_binding() {
        let mut c = Circuit::new(1);
        c.push(Gate::Ry(0, Angle::Param { slot: 0, scale: 2.0 })).unwrap();
        assert_eq!(c.num_params(), 1);
        let s = run_circuit(&c, &[PI / 2.0], None, 0).unwrap();
        assert!((s.probabilities()[1] - 1.0).abs() < 1e-12);
        assert!(matches!(
            run_circuit(&c, &[], None, 0),
            Err(Error::ParameterCount { expected: 1, found: 0 })
        ));
    }

    #[test]
    fn rejects_bad_indices() {
        let mut c = Circuit::new(2);
        assert!(matches!(
            c.push(Gate::H(2)),
            Err(Error::QubitOutOfRange { index: 2, n: 2 })
        ));
        assert!(c.push(Gate::Cnot { control: 1, target: 1 }).is_err());
        assert!(c.push(Gate::Cnot { control: 0, target: 1 }).is_ok());
    }

    #[test]
    fn cnot_count_includes_zz() {
        let mut c = Circuit::new(3);
        c.push(Gate::Cnot { control: 0, target: 1 }).unwrap();
        c.push(Gate::Zz(0, 2, Angle::param(0))).unwrap();
        assert_eq!(c.cnot_count(), 3);
    }

    fn entangler() -> Circuit {
        let mut c = Circuit::new(4);
        for q in 0..4 {
            c.push(Gate::H(q)).unwrap();
            c.push(Gate::Ry(q, Angle::param(q))).unwrap();
        }
        for q in 0..3 {
            c.push(Gate::Cnot {
                control: q,
                target: q + 1,
            })
            .unwrap();
            c.push(Gate::Zz(q, 3 - q.min(2), Angle::param(4))).unwrap();
        }
        c
    }

    #[test]
    fn zero_lambda_is_bit_exact() {
        let c = entangler();
        let params = [0.1, 0.2, 0.3, 0.4, 0.5];
        let clean = run_circuit(&c, &params, None, 0).unwrap();
        let noise = NoiseModel::uniform(4, 0.1, 0.1, 0.0);
        let noisy = run_circuit(&c, &params, Some(&noise), 99).unwrap();
        assert_eq!(clean, noisy);
    }

    #[test]
    fn trajectories_are_seeded_and_normalized() {
        let c = entangler();
        let params = [0.1, 0.2, 0.3, 0.4, 0.5];
        let noise = NoiseModel::uniform(4, 0.0, 0.0, 0.5);
        let a = run_circuit(&c, &params, Some(&noise), 7).unwrap();
        let b = run_circuit(&c, &params, Some(&noise), 7).unwrap();
        assert_eq!(a, b);
        assert!((a.norm_sqr() - 1.0).abs() < 1e-10);
        let p = noisy_probabilities(&c, &params, Some(&noise), 3, Execution::Parallel).unwrap();
        let q = noisy_probabilities(&c, &params, Some(&noise), 3, Execution::Sequential).unwrap();
        assert_eq!(p, q);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn full_depolarizing_scrambles_a_bell_pair() {
        // Certain depolarizing after a CNOT leaves a maximally mixed pair on average.
        let mut c = Circuit::new(2);
        c.push(Gate::H(0)).unwrap();
        c.push(Gate::Cnot { control: 0, target: 1 }).unwrap();
        let noise = NoiseModel {
            trajectories: 4000,
            ..NoiseModel::uniform(2, 0.0, 0.0, 1.0)
        };
        let p = noisy_probabilities(&c, &[], Some(&noise), 1, Execution::default()).unwrap();
        // Each Pauli class flips parity with probability 8/15.
        let odd = p[0b01] + p[0b10];
        assert!((odd - 8.0 / 15.0).abs() < 0.03, "odd parity {odd}");
    }
}
