mod report;

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use deutero::binsearch::{binary_search_solve, BinSearchResult, Solver};
use deutero::dataset::{load_dataset, parse_feature_vector, Dataset};
use deutero::hamiltonian::{combine, exact_solve, penalty_qubo_exact, qubo_to_ising, scale_qubo, ExactSolution};
use deutero::qsim::NoiseModel;
use deutero::rng::derive_seed;
use deutero::surrogate::{fm_to_qubo, train_staged, StagedFit, TrainConfig};
use deutero::vqa::{build_ry_ansatz, qaoa_run, vqe_run, Mode, OptimizerConfig, ShotConfig, VqaResult};
use deutero::IsingModel;

use crate::artifact::{load, save};
use crate::config::{Method, ModeKind, Penalty, RunConfig};

pub use report::report;

pub const MODEL: &str = "model";
pub const HAMILTONIAN: &str = "hamiltonian";
pub const RESULT: &str = "result";

// stage-local seed streams
const SPLIT_STREAM: u64 = 1;
const INIT_STREAM: u64 = 2;
const OPT_STREAM: u64 = 3;
const SEARCH_STREAM: u64 = 4;

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "solution", rename_all = "snake_case")]
pub enum Solution {
    Exact(ExactSolution),
    Variational(Box<VqaResult>),
    BinarySearch(BinSearchResult),
}

/// The site count comes from the first data row.
fn read_dataset(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading dataset {}", path.display()))?;
    let first = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .nth(1)
        .with_context(|| format!("{} has no data rows", path.display()))?;
    let bits = first.split(',').next().unwrap_or_default();
    let n = parse_feature_vector(bits)
        .with_context(|| format!("{}: first row", path.display()))?
        .len();
    let ds =
        load_dataset(BufReader::new(File::open(path)?), n).with_context(|| format!("parsing {}", path.display()))?;
    Ok(ds)
}

pub fn train(cfg: &RunConfig) -> Result<()> {
    let ds = read_dataset(&cfg.dataset)?;
    let tc = TrainConfig {
        k: cfg.k,
        epochs: cfg.epochs,
        learning_rate: cfg.learning_rate,
        seed: derive_seed(cfg.seed, INIT_STREAM),
        ..TrainConfig::default()
    };
    let fit = train_staged(&ds, cfg.threshold, &tc, derive_seed(cfg.seed, SPLIT_STREAM))?;
    println!("stage  train  test  R2");
    for s in &fit.stages {
        let r2 = s.r2.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!("{:>5}  {:>5}  {:>4}  {r2}", s.stage, s.train_size, s.test_size);
    }
    save(&cfg.model, MODEL, cfg, &fit)?;
    if !fit.reached {
        eprintln!(
            "warning: held-out R2 stayed below {} at the last stage; model written anyway",
            cfg.threshold
        );
    }
    println!("wrote {}", cfg.model.display());
    Ok(())
}

pub fn build(cfg: &RunConfig) -> Result<()> {
    let fit = load::<StagedFit>(&cfg.model, MODEL)?.data;
    let q = scale_qubo(&fm_to_qubo(&fit.model))?;
    let q = match cfg.penalty {
        Penalty::None => q,
        Penalty::Cardinality(n0) => combine(&q, &penalty_qubo_exact(q.n(), n0)?, cfg.beta0)?,
    };
    let h = qubo_to_ising(&q);
    println!(
        "n = {}, penalty {}, max |coef| {:.4}",
        h.n(),
        cfg.penalty,
        h.max_abs_coefficient()
    );
    if h.n() <= 20 {
        let sol = exact_solve(&h)?;
        for x in &sol.ground_bitstrings {
            println!("ground {x} ({}) energy {:.6}", x.to_hd(), sol.ground_energy);
        }
    }
    save(&cfg.hamiltonian, HAMILTONIAN, cfg, &h)?;
    println!("wrote {}", cfg.hamiltonian.display());
    Ok(())
}

fn mode(cfg: &RunConfig) -> Result<Mode> {
    match cfg.mode {
        ModeKind::Exact => {
            if cfg.noise.is_some() || cfg.mitigate {
                bail!("noise and mitigation need --mode shots");
            }
            Ok(Mode::Exact)
        }
        ModeKind::Shots => {
            let noise = match &cfg.noise {
                None => None,
                Some(path) => {
                    let text =
                        std::fs::read_to_string(path).with_context(|| format!("reading noise {}", path.display()))?;
                    Some(
                        serde_json::from_str::<NoiseModel>(&text)
                            .with_context(|| format!("parsing {}", path.display()))?,
                    )
                }
            };
            Ok(Mode::Shots(ShotConfig {
                shots: cfg.shots,
                noise,
                mitigate: cfg.mitigate,
                ..ShotConfig::default()
            }))
        }
    }
}

fn variational(cfg: &RunConfig, h: &IsingModel, solver: Solver) -> Result<Solution> {
    let mode = mode(cfg)?;
    if cfg.binary_search {
        let mut opt = OptimizerConfig::loose();
        opt.restarts = cfg.restarts;
        opt.max_iter = cfg.max_iter.unwrap_or(opt.max_iter);
        let r = binary_search_solve(h, solver, cfg.delta, &opt, &mode, derive_seed(cfg.seed, SEARCH_STREAM))?;
        for (i, round) in r.rounds.iter().enumerate() {
            let fixed: Vec<String> = round
                .fixed
                .iter()
                .map(|f| format!("{}={}", f.site + 1, f.bit))
                .collect();
            println!("round {}: {} qubits, fixed {}", i + 1, round.size, fixed.join(" "));
        }
        println!(
            "bitstring {} ({}) energy {:.6}",
            r.bitstring,
            r.bitstring.to_hd(),
            r.energy
        );
        return Ok(Solution::BinarySearch(r));
    }
    let opt = OptimizerConfig {
        restarts: cfg.restarts,
        max_iter: cfg.max_iter.unwrap_or(OptimizerConfig::default().max_iter),
        seed: derive_seed(cfg.seed, OPT_STREAM),
        ..OptimizerConfig::default()
    };
    let r = match solver {
        Solver::Vqe { depth } => vqe_run(h, &build_ry_ansatz(h.n(), depth)?.1, &opt, &mode)?,
        Solver::Qaoa { p } => qaoa_run(h, p, &opt, &mode)?,
    };
    println!(
        "energy {:.6}, top {} ({}) p = {:.4}",
        r.energy,
        r.top_bitstring(),
        r.top_bitstring().to_hd(),
        r.top_probability()
    );
    Ok(Solution::Variational(Box::new(r)))
}

pub fn solve(cfg: &RunConfig) -> Result<()> {
    let h = load::<IsingModel>(&cfg.hamiltonian, HAMILTONIAN)?.data;
    let out = match cfg.method {
        Method::Exact => {
            let sol = exact_solve(&h)?;
            for x in &sol.ground_bitstrings {
                println!("ground {x} ({}) energy {:.6}", x.to_hd(), sol.ground_energy);
            }
            Solution::Exact(sol)
        }
        Method::Vqe => variational(cfg, &h, Solver::Vqe { depth: cfg.depth })?,
        Method::Qaoa => variational(cfg, &h, Solver::Qaoa { p: cfg.p })?,
    };
    save(&cfg.result, RESULT, cfg, &out)?;
    println!("wrote {}", cfg.result.display());
    Ok(())
}
