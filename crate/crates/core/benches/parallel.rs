use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use deutero::dataset::synth;
use deutero::hamiltonian::{exact_solve_with, qubo_to_ising};
use deutero::par::Execution;
use deutero::qsim::{build_confusion_matrix_with, noisy_probabilities, NoiseModel};
use deutero::vqa::{build_qaoa_ansatz, build_ry_ansatz, vqe_run, Mode, OptimizerConfig};

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn enumeration(c: &mut Criterion) {
    let mut g = c.benchmark_group("exact_solve");
    g.sample_size(10);
    for n in [16, 20] {
        let h = qubo_to_ising(&synth::random_qubo(n, 1));
        for exec in MODES {
            g.bench_with_input(BenchmarkId::new(format!("{exec:?}"), n), &h, |b, h| {
                b.iter(|| exact_solve_with(black_box(h), exec).unwrap())
            });
        }
    }
    g.finish();
}

fn calibration(c: &mut Criterion) {
    let mut g = c.benchmark_group("confusion_matrix");
    g.sample_size(10);
    let noise = NoiseModel::uniform(6, 0.03, 0.05, 0.0);
    for exec in MODES {
        g.bench_function(format!("{exec:?}"), |b| {
            b.iter(|| build_confusion_matrix_with(6, &noise, 10_000, 0, exec).unwrap())
        });
    }
    g.finish();
}

fn trajectories(c: &mut Criterion) {
    let mut g = c.benchmark_group("noisy_qaoa_p3");
    g.sample_size(10);
    let h = qubo_to_ising(&synth::random_qubo(6, 2));
    let (circuit, _) = build_qaoa_ansatz(&h, 3).unwrap();
    let params = [0.3, -0.6, 0.6, -0.4, 0.9, -0.2];
    let noise = NoiseModel::uniform(6, 0.03, 0.05, 0.01);
    for exec in MODES {
        g.bench_function(format!("{exec:?}"), |b| {
            b.iter(|| noisy_probabilities(&circuit, &params, Some(&noise), 0, exec).unwrap())
        });
    }
    g.finish();
}

fn restarts(c: &mut Criterion) {
    let mut g = c.benchmark_group("vqe_restarts");
    g.sample_size(10);
    let h = qubo_to_ising(&synth::random_qubo(6, 3));
    let (_, spec) = build_ry_ansatz(6, 1).unwrap();
    for exec in MODES {
        let opt = OptimizerConfig {
            exec,
            ..OptimizerConfig::loose()
        };
        g.bench_function(format!("{exec:?}"), |b| {
            b.iter(|| vqe_run(&h, &spec, &opt, &Mode::Exact).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, enumeration, calibration, trajectories, restarts);
criterion_main!(benches);
