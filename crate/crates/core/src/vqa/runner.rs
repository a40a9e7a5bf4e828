use std::f64::consts::PI;
use std::io::Write;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::ansatz::{build_qaoa_ansatz, ry_circuit, AnsatzKind, AnsatzSpec};
use super::cobyla::cobyla_try;
use super::OptimizerConfig;
use crate::dataset::FeatureVector;
use crate::hamiltonian::IsingModel;
use crate::par::{map_range, Execution};
use crate::qsim::{
    build_confusion_matrix_with, expectation_from, noisy_probabilities, run_circuit, sample_probabilities, Circuit,
    Mitigator, NoiseModel, ProbDist, DEFAULT_SHOTS,
};
use crate::rng::{derive_seed2, rng_from_seed};
use crate::{Error, Result};

/// Length of the reported top-k list.
pub const TOP_K: usize = 10;
pub const DEFAULT_CALIBRATION_SHOTS: u64 = 10_000;
/// Ramp end points for QAOA initialization, γ in normalized units.
pub const QAOA_GAMMA_MAX: f64 = 1.0;
pub const QAOA_BETA_MAX: f64 = -0.8;

/// Mitigation needs a dense 2ⁿ × 2ⁿ calibration.
const MAX_MITIGATED_QUBITS: usize = 12;

const FINAL_STREAM: u64 = u64::MAX;
const INIT_STREAM: u64 = u64::MAX - 1;

fn default_calibration_shots() -> u64 {
    DEFAULT_CALIBRATION_SHOTS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotConfig {
    pub shots: u64,
    #[serde(default)]
    pub noise: Option<NoiseModel>,
    #[serde(default)]
    pub mitigate: bool,
    #[serde(default = "default_calibration_shots")]
    pub calibration_shots: u64,
}

impl Default for ShotConfig {
    fn default() -> Self {
        ShotConfig {
            shots: DEFAULT_SHOTS,
            noise: None,
            mitigate: false,
            calibration_shots: DEFAULT_CALIBRATION_SHOTS,
        }
    }
}

/// How the objective is evaluated.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Mode {
    /// Exact expectation from the statevector.
    #[default]
    Exact,
    /// Energy estimated from sampled (optionally noisy, optionally mitigated) shots.
    Shots(ShotConfig),
}

impl Mode {
    pub fn is_exact(&self) -> bool {
        matches!(self, Mode::Exact)
    }

    /// The same mode on a register made of the given original qubits.
    pub fn restrict(&self, qubits: &[usize]) -> Mode {
        match self {
            Mode::Exact => Mode::Exact,
            Mode::Shots(s) => Mode::Shots(ShotConfig {
                noise: s.noise.as_ref().map(|m| m.restrict(qubits)),
                ..s.clone()
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopEntry {
    pub bitstring: FeatureVector,
    pub label: String,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VqaResult {
    pub ansatz: AnsatzSpec,
    pub mode: Mode,
    pub optimizer: OptimizerConfig,
    pub best_restart: usize,
    pub best_params: Vec<f64>,
    /// Lowest objective value seen by the best restart.
    pub energy: f64,
    pub energy_trace: Vec<TracePoint>,
    /// Every evaluated energy of every restart.
    pub restart_traces: Vec<Vec<f64>>,
    pub final_distribution: ProbDist,
    pub top_k: Vec<TopEntry>,
    pub mitigated: bool,
}

impl VqaResult {
    pub fn top_bitstring(&self) -> &FeatureVector {
        &self.top_k[0].bitstring
    }

    pub fn top_probability(&self) -> f64 {
        self.top_k[0].probability
    }

    pub fn probability_of(&self, x: &FeatureVector) -> f64 {
        self.final_distribution.get(x)
    }

    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "iteration,energy")?;
        for t in &self.energy_trace {
            writeln!(out, "{},{}", t.iteration, t.energy)?;
        }
        Ok(())
    }
}

pub(crate) fn top_entries(dist: &ProbDist, k: usize) -> Vec<TopEntry> {
    dist.top_k(k)
        .into_iter()
        .map(|(x, p)| TopEntry {
            label: x.to_hd(),
            bitstring: x,
            probability: p,
        })
        .collect()
}

/// Objective evaluation shared by all restarts.
struct Objective<'a> {
    circuit: &'a Circuit,
    energies: Vec<f64>,
    mode: &'a Mode,
    mitigator: Option<Mitigator>,
    seed: u64,
}

impl<'a> Objective<'a> {
    fn new(circuit: &'a Circuit, h: &IsingModel, mode: &'a Mode, seed: u64, exec: Execution) -> Result<Self> {
        let n = circuit.n();
        let mut mitigator = None;
        if let Mode::Shots(s) = mode {
            if s.shots == 0 {
                return Err(Error::InvalidConfig("shots must be at least 1".into()));
            }
            if let Some(noise) = &s.noise {
                noise.validate(n)?;
            }
            if s.mitigate {
                if n > MAX_MITIGATED_QUBITS {
                    return Err(Error::TooLarge {
                        what: "mitigated register",
                        n,
                        max: MAX_MITIGATED_QUBITS,
                    });
                }
                let noise = s.noise.clone().unwrap_or_default();
                let m = build_confusion_matrix_with(
                    n,
                    &noise,
                    s.calibration_shots,
                    derive_seed2(seed, FINAL_STREAM, 1),
                    exec,
                )?;
                mitigator = Some(Mitigator::new(m)?);
            }
        }
        Ok(Objective {
            circuit,
            energies: h.energies_with(exec),
            mode,
            mitigator,
            seed,
        })
    }

    /// Output distribution as the experiment would report it.
    fn distribution(&self, params: &[f64], stream: (u64, u64)) -> Result<ProbDist> {
        match self.mode {
            Mode::Exact => Ok(ProbDist::from_state(&run_circuit(self.circuit, params, None, 0)?)),
            Mode::Shots(s) => {
                let seed = derive_seed2(self.seed, stream.0, stream.1);
                let noise = s.noise.as_ref();
                let probs = noisy_probabilities(self.circuit, params, noise, seed, Execution::Sequential)?;
                let counts = sample_probabilities(self.circuit.n(), &probs, s.shots, noise, seed ^ 0x5bd1_e995)?;
                match &self.mitigator {
                    Some(m) => m.mitigate(&counts),
                    None => counts.to_distribution(),
                }
            }
        }
    }

    fn energy(&self, params: &[f64], restart: usize, evaluation: usize) -> Result<f64> {
        let dist = self.distribution(params, (restart as u64, evaluation as u64))?;
        expectation_from(dist.as_slice(), &self.energies)
    }
}

struct RestartOutcome {
    params: Vec<f64>,
    energy: f64,
    trace: Vec<f64>,
}

fn optimize<I>(
    h: &IsingModel,
    circuit: &Circuit,
    spec: AnsatzSpec,
    opt: &OptimizerConfig,
    mode: &Mode,
    init: I,
) -> Result<VqaResult>
where
    I: Fn(usize) -> Vec<f64> + Sync,
{
    opt.validate()?;
    if h.n() != circuit.n() {
        return Err(Error::LengthMismatch {
            expected: circuit.n(),
            found: h.n(),
        });
    }
    let objective = Objective::new(circuit, h, mode, opt.seed, opt.exec)?;
    let runs = map_range(opt.exec, opt.restarts, |r| -> Result<RestartOutcome> {
        let mut evaluation = 0;
        let m = cobyla_try(
            |x| {
                let e = objective.energy(x, r, evaluation);
                evaluation += 1;
                e
            },
            &init(r),
            opt,
        )?;
        Ok(RestartOutcome {
            params: m.x,
            energy: m.f,
            trace: m.trace,
        })
    });
    let runs: Vec<RestartOutcome> = runs.into_iter().collect::<Result<_>>()?;
    let best = (0..runs.len())
        .min_by(|&a, &b| runs[a].energy.total_cmp(&runs[b].energy).then(a.cmp(&b)))
        .expect("at least one restart");
    let final_distribution = objective.distribution(&runs[best].params, (FINAL_STREAM, 0))?;
    Ok(VqaResult {
        ansatz: spec,
        mode: mode.clone(),
        optimizer: opt.clone(),
        best_restart: best,
        best_params: runs[best].params.clone(),
        energy: runs[best].energy,
        energy_trace: runs[best]
            .trace
            .iter()
            .enumerate()
            .map(|(iteration, &energy)| TracePoint { iteration, energy })
            .collect(),
        top_k: top_entries(&final_distribution, TOP_K),
        final_distribution,
        mitigated: objective.mitigator.is_some(),
        restart_traces: runs.into_iter().map(|r| r.trace).collect(),
    })
}

/// VQE over an Ry ansatz; every restart starts from angles uniform in [0, 2π).
pub fn vqe_run(h: &IsingModel, ansatz: &AnsatzSpec, opt: &OptimizerConfig, mode: &Mode) -> Result<VqaResult> {
    let AnsatzKind::Ry { depth } = ansatz.kind else {
        return Err(Error::InvalidConfig("vqe_run needs an Ry ansatz".into()));
    };
    if ansatz.n != h.n() {
        return Err(Error::LengthMismatch {
            expected: ansatz.n,
            found: h.n(),
        });
    }
    let (circuit, spec) = ry_circuit(ansatz.n, depth);
    optimize(h, &circuit, spec, opt, mode, |r| {
        let mut rng = rng_from_seed(derive_seed2(opt.seed, INIT_STREAM, r as u64));
        (0..spec.param_count).map(|_| rng.random_range(0.0..2.0 * PI)).collect()
    })
}

fn qaoa_random_init(seed: u64, r: usize, p: usize) -> Vec<f64> {
    let mut rng = rng_from_seed(derive_seed2(seed, INIT_STREAM, r as u64));
    (0..p)
        .flat_map(|_| [QAOA_GAMMA_MAX, QAOA_BETA_MAX])
        .map(|max| max * rng.random::<f64>())
        .collect()
}

/// Linear ramp `γ_l = (l/p) γ_max`, `β_l = (1 - l/p) β_max`.
fn qaoa_ramp(p: usize) -> Vec<f64> {
    (1..=p)
        .flat_map(|l| {
            let t = l as f64 / p as f64;
            [t * QAOA_GAMMA_MAX, (1.0 - t) * QAOA_BETA_MAX]
        })
        .collect()
}

/// QAOA with the ramp as first restart and seeded random starts after it.
pub fn qaoa_run(h: &IsingModel, p: usize, opt: &OptimizerConfig, mode: &Mode) -> Result<VqaResult> {
    let (circuit, spec) = build_qaoa_ansatz(h, p)?;
    optimize(h, &circuit, spec, opt, mode, |r| {
        if r == 0 {
            qaoa_ramp(p)
        } else {
            qaoa_random_init(opt.seed, r, p)
        }
    })
}

/// QAOA whose first restart starts from `warm`, zero-padded to `2p` entries.
pub fn qaoa_run_warm(h: &IsingModel, p: usize, opt: &OptimizerConfig, mode: &Mode, warm: &[f64]) -> Result<VqaResult> {
    if warm.len() > 2 * p {
        return Err(Error::ParameterCount {
            expected: 2 * p,
            found: warm.len(),
        });
    }
    let (circuit, spec) = build_qaoa_ansatz(h, p)?;
    let mut start = warm.to_vec();
    start.resize(2 * p, 0.0);
    optimize(h, &circuit, spec, opt, mode, |r| {
        if r == 0 {
            start.clone()
        } else {
            qaoa_random_init(opt.seed, r, p)
        }
    })
}

/// Runs QAOA for `p = 1..=p_max`, seeding the first restart of each level
/// with the previous level's best angles stretched onto `p` layers.
pub fn qaoa_sweep(h: &IsingModel, p_max: usize, opt: &OptimizerConfig, mode: &Mode) -> Result<Vec<VqaResult>> {
    let mut out: Vec<VqaResult> = Vec::with_capacity(p_max);
    for p in 1..=p_max {
        let r = match out.last() {
            None => qaoa_run(h, p, opt, mode)?,
            Some(prev) => qaoa_run_warm(h, p, opt, mode, &interpolate_angles(&prev.best_params))?,
        };
        out.push(r);
    }
    Ok(out)
}

/// Linear interpolation of `(γ, β)` pairs from `p` to `p + 1` layers.
pub fn interpolate_angles(params: &[f64]) -> Vec<f64> {
    let p = params.len() / 2;
    let at = |k: usize, i: usize| if i < p { params[2 * i + k] } else { 0.0 };
    (0..=p)
        .flat_map(|i| {
            [0, 1].map(|k| {
                let prev = if i > 0 { at(k, i - 1) } else { 0.0 };
                (i as f64 * prev + (p - i) as f64 * at(k, i)) / p.max(1) as f64
            })
        })
        .collect()
}

/// Energy and output distribution of an ansatz at fixed parameters.
pub fn run_fixed(h: &IsingModel, circuit: &Circuit, params: &[f64], mode: &Mode, seed: u64) -> Result<(f64, ProbDist)> {
    if h.n() != circuit.n() {
        return Err(Error::LengthMismatch {
            expected: circuit.n(),
            found: h.n(),
        });
    }
    let objective = Objective::new(circuit, h, mode, seed, Execution::default())?;
    let dist = objective.distribution(params, (FINAL_STREAM, 0))?;
    let energy = expectation_from(dist.as_slice(), &objective.energies)?;
    Ok((energy, dist))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::exact_solve;
    use crate::vqa::build_ry_ansatz;

    fn toy() -> IsingModel {
        IsingModel::new(2, vec![1.25, -0.25], vec![0.75], 0.25).unwrap()
    }

    #[test]
    fn interpolation_stretches_schedule() {
        assert_eq!(interpolate_angles(&[1.0, -0.5]), vec![1.0, -0.5, 1.0, -0.5]);
        let x = interpolate_angles(&[1.0, -0.6, 3.0, -0.2]);
        let gammas: Vec<f64> = x.iter().step_by(2).copied().collect();
        assert_eq!(gammas, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn sweep_returns_each_level() {
        let rs = qaoa_sweep(&toy(), 3, &quick(), &Mode::Exact).unwrap();
        assert_eq!(rs.len(), 3);
        for (i, r) in rs.iter().enumerate() {
            assert_eq!(r.best_params.len(), 2 * (i + 1));
        }
    }

    fn quick() -> OptimizerConfig {
        OptimizerConfig {
            max_iter: 200,
            restarts: 3,
            ..OptimizerConfig::default()
        }
    }

    #[test]
    fn vqe_finds_toy_ground_state() {
        let (_, spec) = build_ry_ansatz(2, 1).unwrap();
        let r = vqe_run(&toy(), &spec, &quick(), &Mode::Exact).unwrap();
        assert_eq!(r.top_bitstring().to_string(), "01");
        assert!((r.energy + 2.0).abs() < 1e-6);
        assert!((r.final_distribution.total() - 1.0).abs() < 1e-9);
        assert_eq!(r.restart_traces.len(), 3);
    }

    #[test]
    fn zero_hamiltonian_has_flat_trace() {
        let h = IsingModel::new(3, vec![0.0; 3], vec![0.0; 3], 1.5).unwrap();
        let (_, spec) = build_ry_ansatz(3, 1).unwrap();
        let r = vqe_run(&h, &spec, &quick(), &Mode::Exact).unwrap();
        assert!(r.energy_trace.iter().all(|t| (t.energy - 1.5).abs() < 1e-12));
    }

    #[test]
    fn fixed_zero_qaoa_is_the_spectrum_mean() {
        let h = toy();
        let (c, _) = build_qaoa_ansatz(&h, 2).unwrap();
        let (e, _) = run_fixed(&h, &c, &[0.0; 4], &Mode::Exact, 0).unwrap();
        let mean = h.energies().iter().sum::<f64>() / 4.0;
        assert!((e - mean).abs() < 1e-12);
    }

    #[test]
    fn qaoa_respects_the_variational_bound() {
        let h = toy();
        let ground = exact_solve(&h).unwrap().ground_energy;
        let r = qaoa_run(&h, 2, &quick(), &Mode::Exact).unwrap();
        for trace in &r.restart_traces {
            assert!(trace.iter().all(|&e| e >= ground - 1e-9));
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let h = toy();
        let mode = Mode::Shots(ShotConfig {
            shots: 500,
            noise: Some(NoiseModel::uniform(2, 0.03, 0.05, 0.02)),
            mitigate: true,
            calibration_shots: 2000,
        });
        let opt = OptimizerConfig {
            max_iter: 30,
            ..quick()
        };
        let a = qaoa_run(&h, 1, &opt, &mode).unwrap();
        let b = qaoa_run(&h, 1, &opt, &mode).unwrap();
        assert_eq!(a, b);
        assert!(a.mitigated);
        let seq = OptimizerConfig {
            exec: Execution::Sequential,
            ..opt.clone()
        };
        let mut c = qaoa_run(&h, 1, &seq, &mode).unwrap();
        c.optimizer.exec = opt.exec;
        assert_eq!(c, a);
    }

    #[test]
    fn warm_start_never_loses_ground() {
        let h = toy();
        let opt = OptimizerConfig { restarts: 1, ..quick() };
        let p1 = qaoa_run(&h, 1, &opt, &Mode::Exact).unwrap();
        let p2 = qaoa_run_warm(&h, 2, &opt, &Mode::Exact, &p1.best_params).unwrap();
        assert!(p2.energy <= p1.energy + 1e-9);
        assert_eq!(p2.restart_traces[0][0], p1.energy);
    }

    #[test]
    fn rejects_mismatched_sizes() {
        let (_, spec) = build_ry_ansatz(3, 1).unwrap();
        assert!(vqe_run(&toy(), &spec, &quick(), &Mode::Exact).is_err());
        let (_, qspec) = build_qaoa_ansatz(&toy(), 1).unwrap();
        assert!(vqe_run(&toy(), &qspec, &quick(), &Mode::Exact).is_err());
    }

    #[test]
    fn result_json_round_trip() {
        let (_, spec) = build_ry_ansatz(2, 1).unwrap();
        let r = vqe_run(
            &toy(),
            &spec,
            &OptimizerConfig {
                max_iter: 20,
                ..quick()
            },
            &Mode::Exact,
        )
        .unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let mut back: VqaResult = serde_json::from_str(&text).unwrap();
        back.optimizer.exec = r.optimizer.exec;
        assert_eq!(back, r);
    }
}
