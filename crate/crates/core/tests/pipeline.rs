//! Dataset to bitstring through the public API only.

use deutero::binsearch::{binary_search_solve, Solver};
use deutero::dataset::{synth, synth_dataset};
use deutero::hamiltonian::{combine, exact_solve, penalty_qubo_exact, qubo_to_ising, scale_qubo};
use deutero::surrogate::{fm_to_qubo, train_staged, TrainConfig};
use deutero::vqa::{build_ry_ansatz, qaoa_run, vqe_run, Mode, OptimizerConfig};
use deutero::{Dataset, FeatureVector, IsingModel};

fn surrogate(seed: u64) -> deutero::QuboModel {
    let ds = synth_dataset(&synth::monotone_qubo(6, seed), 0.0, seed).unwrap();
    let fit = train_staged(&ds, 0.95, &TrainConfig::default(), seed).unwrap();
    assert!(fit.reached, "stages: {:?}", fit.stages);
    scale_qubo(&fm_to_qubo(&fit.model)).unwrap()
}

#[test]
fn monotone_surrogate_prefers_full_deuteration() {
    let h = qubo_to_ising(&surrogate(1));
    let sol = exact_solve(&h).unwrap();
    assert_eq!(sol.ground_bitstrings, vec![FeatureVector::zeros(6)]);
    assert_eq!(sol.ground_bitstrings[0].to_hd(), "DDDDDD");
}

#[test]
fn variational_solvers_find_the_surrogate_optimum() {
    let h = qubo_to_ising(&surrogate(0));
    let truth = exact_solve(&h).unwrap();
    let opt = OptimizerConfig::default();
    let vqe = vqe_run(&h, &build_ry_ansatz(6, 1).unwrap().1, &opt, &Mode::Exact).unwrap();
    assert!(truth.ground_bitstrings.contains(vqe.top_bitstring()));
    let qaoa = qaoa_run(&h, 2, &opt, &Mode::Exact).unwrap();
    assert!(truth.ground_bitstrings.contains(qaoa.top_bitstring()));
}

#[test]
fn exact_binary_search_recovers_optimum() {
    let h = qubo_to_ising(&surrogate(1));
    let truth = exact_solve(&h).unwrap();
    let r = binary_search_solve(
        &h,
        Solver::Vqe { depth: 1 },
        0.7,
        &OptimizerConfig::loose(),
        &Mode::Exact,
        4,
    )
    .unwrap();
    assert!(truth.ground_bitstrings.contains(&r.bitstring));
    assert!((r.energy - truth.ground_energy).abs() < 1e-9);
}

// loose passes can lock in a local minimum here, so only the bookkeeping is checked
#[test]
fn constrained_binary_search_fixes_every_site_once() {
    let q = surrogate(1);
    let h: IsingModel = qubo_to_ising(&combine(&q, &penalty_qubo_exact(6, 3).unwrap(), 10.0).unwrap());
    let r = binary_search_solve(
        &h,
        Solver::Qaoa { p: 2 },
        0.7,
        &OptimizerConfig::loose(),
        &Mode::Exact,
        4,
    )
    .unwrap();
    let mut sites: Vec<usize> = r
        .rounds
        .iter()
        .flat_map(|round| round.fixed.iter().map(|f| f.site))
        .collect();
    sites.sort_unstable();
    assert_eq!(sites, (0..6).collect::<Vec<_>>());
    assert!((r.energy - h.energy(&r.bitstring).unwrap()).abs() < 1e-9);
    assert!(r.energy >= exact_solve(&h).unwrap().ground_energy - 1e-9);
}

#[test]
fn dataset_csv_round_trip_preserves_values() {
    let ds = synth_dataset(&synth::monotone_qubo(6, 2), 0.0, 2).unwrap();
    let mut buf = Vec::new();
    ds.save(&mut buf).unwrap();
    let back: Dataset = deutero::dataset::load_dataset(buf.as_slice(), 6).unwrap();
    assert_eq!(back, ds);
}
