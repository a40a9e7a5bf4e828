//! Simulator outputs checked against independently built dense references.

use num_complex::Complex64;
use proptest::prelude::*;

use deutero::dataset::synth;
use deutero::hamiltonian::qubo_to_ising;
use deutero::qsim::{run_circuit, ConfusionMatrix, Mitigator, NoiseModel, ProbDist, ReadoutError};
use deutero::vqa::{build_qaoa_ansatz, qaoa_gamma_scale};
use deutero::IsingModel;

/// `exp(-iβX)` on every qubit of a dense vector, qubit 0 being the most
/// significant bit.
fn mix(psi: &mut [Complex64], n: usize, beta: f64) {
    let (c, s) = (Complex64::new(beta.cos(), 0.0), Complex64::new(0.0, -beta.sin()));
    for q in 0..n {
        let bit = 1 << (n - 1 - q);
        for i in 0..psi.len() {
            if i & bit == 0 {
                let (a, b) = (psi[i], psi[i | bit]);
                psi[i] = c * a + s * b;
                psi[i | bit] = s * a + c * b;
            }
        }
    }
}

/// QAOA by definition: start in |+…+⟩, multiply each basis state by
/// `exp(-iγE(x)/c)`, mix, repeat.
fn qaoa_reference(h: &IsingModel, params: &[f64]) -> Vec<f64> {
    let n = h.n();
    let size = 1usize << n;
    let energies = h.energies();
    let c = qaoa_gamma_scale(h);
    let mut psi = vec![Complex64::new((size as f64).powf(-0.5), 0.0); size];
    for layer in params.chunks(2) {
        for (amp, e) in psi.iter_mut().zip(&energies) {
            *amp *= Complex64::from_polar(1.0, -layer[0] * e / c);
        }
        mix(&mut psi, n, layer[1]);
    }
    psi.iter().map(|a| a.norm_sqr()).collect()
}

#[test]
fn qaoa_circuit_matches_dense_reference() {
    for seed in 0..5 {
        let h = qubo_to_ising(&synth::random_qubo(5, seed));
        for p in 1..=3 {
            let (circuit, _) = build_qaoa_ansatz(&h, p).unwrap();
            let params: Vec<f64> = (0..2 * p)
                .map(|i| 0.37 * (i as f64 + 1.0) * (seed as f64 + 1.0))
                .collect();
            let got = ProbDist::from_state(&run_circuit(&circuit, &params, None, 0).unwrap());
            let want = qaoa_reference(&h, &params);
            for (g, w) in got.as_slice().iter().zip(&want) {
                assert!((g - w).abs() < 1e-12, "seed {seed} p {p}: {g} vs {w}");
            }
        }
    }
}

fn readout(n: usize) -> impl Strategy<Value = NoiseModel> {
    proptest::collection::vec((0.0..0.15f64, 0.0..0.15f64), n)
        .prop_map(|v| NoiseModel::readout_only(v.into_iter().map(|(p01, p10)| ReadoutError { p01, p10 }).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    // noiseless data pushed through the exact channel comes back unchanged
    #[test]
    fn mitigation_inverts_exact_channel(
        noise in readout(3),
        weights in proptest::collection::vec(0.0..1.0f64, 8),
    ) {
        let total: f64 = weights.iter().sum::<f64>() + 1e-9;
        let truth: Vec<f64> = weights.iter().map(|w| (w + 1e-9 / 8.0) / total).collect();
        let m = ConfusionMatrix::from_readout(3, &noise).unwrap();
        let noisy: Vec<f64> = (0..8).map(|i| (0..8).map(|j| m.get(i, j) * truth[j]).sum()).collect();
        let fixed = Mitigator::new(m).unwrap().correct(&noisy).unwrap();
        for (f, t) in fixed.as_slice().iter().zip(&truth) {
            prop_assert!((f - t).abs() < 1e-9);
        }
    }
}
