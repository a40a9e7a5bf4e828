//! Iterative qubit fixing: solve loosely, fix the sites whose output
//! marginals are decisive, substitute them into the Hamiltonian, repeat.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::FeatureVector;
use crate::hamiltonian::{pair_index, IsingModel};
use crate::qsim::ProbDist;
use crate::rng::derive_seed;
use crate::vqa::{qaoa_run, ry_circuit, vqe_run, Mode, OptimizerConfig, VqaResult};
use crate::{Error, Result};

pub const DEFAULT_DELTA: f64 = 0.7;

const NORM_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteMarginal {
    pub site: usize,
    pub p0: f64,
    pub p1: f64,
}

impl SiteMarginal {
    pub fn confidence(&self) -> f64 {
        self.p0.max(self.p1)
    }

    /// The likelier bit; a tie goes to 0.
    pub fn bit(&self) -> u8 {
        u8::from(self.p1 > self.p0)
    }
}

/// Per-site probabilities of reading 0 and 1. Position `k` of `dist`
/// belongs to `remaining[k]`.
pub fn marginals(dist: &ProbDist, remaining: &[usize]) -> Result<Vec<SiteMarginal>> {
    if dist.n() != remaining.len() {
        return Err(Error::LengthMismatch {
            expected: remaining.len(),
            found: dist.n(),
        });
    }
    let total = dist.total();
    if (total - 1.0).abs() > NORM_TOL {
        return Err(Error::Unnormalized(total));
    }
    let n = dist.n();
    let mut ones = vec![0.0; n];
    for (index, &p) in dist.as_slice().iter().enumerate() {
        for (k, acc) in ones.iter_mut().enumerate() {
            if index >> (n - 1 - k) & 1 == 1 {
                *acc += p;
            }
        }
    }
    Ok(remaining
        .iter()
        .zip(ones)
        .map(|(&site, p1)| SiteMarginal {
            site,
            p0: total - p1,
            p1,
        })
        .collect())
}

/// Substitute `s = 2b - 1` for every fixed site. Returns the model over the
/// remaining sites and, for each of its qubits, the original site index.
pub fn fix_qubits(h: &IsingModel, fixes: &[(usize, u8)]) -> Result<(IsingModel, Vec<usize>)> {
    let n = h.n();
    let mut spin: Vec<Option<f64>> = vec![None; n];
    for &(site, bit) in fixes {
        if site >= n {
            return Err(Error::QubitOutOfRange { index: site, n });
        }
        if bit > 1 {
            return Err(Error::InvalidBit {
                found: char::from(b'0' + bit.min(9)),
                position: site,
            });
        }
        if spin[site].is_some() {
            return Err(Error::DoubleFix(site));
        }
        spin[site] = Some(2.0 * f64::from(bit) - 1.0);
    }
    let remaining: Vec<usize> = (0..n).filter(|&i| spin[i].is_none()).collect();
    let m = remaining.len();
    let mut offset = h.offset();
    let mut fields = vec![0.0; m];
    let mut couplings = vec![0.0; m * m.saturating_sub(1) / 2];
    let mut position = vec![usize::MAX; n];
    for (k, &site) in remaining.iter().enumerate() {
        position[site] = k;
        fields[k] = h.h()[site];
    }
    for (i, s) in spin.iter().enumerate() {
        if let Some(s) = s {
            offset += h.h()[i] * s;
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            let j = h.j()[pair_index(n, a, b)];
            match (spin[a], spin[b]) {
                (Some(sa), Some(sb)) => offset += j * sa * sb,
                (Some(sa), None) => fields[position[b]] += j * sa,
                (None, Some(sb)) => fields[position[a]] += j * sb,
                (None, None) => couplings[pair_index(m, position[a], position[b])] += j,
            }
        }
    }
    let reduced = IsingModel::from_parts(m, fields, couplings, offset, h.provenance.clone());
    Ok((reduced, remaining))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Solver {
    Vqe { depth: usize },
    Qaoa { p: usize },
}

impl Solver {
    pub fn run(&self, h: &IsingModel, opt: &OptimizerConfig, mode: &Mode) -> Result<VqaResult> {
        match *self {
            Solver::Vqe { depth } => vqe_run(h, &ry_circuit(h.n(), depth).1, opt, mode),
            Solver::Qaoa { p } => qaoa_run(h, p, opt, mode),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedSite {
    pub site: usize,
    pub bit: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Round {
    /// Qubits in the Hamiltonian solved this round.
    pub size: usize,
    pub marginals: Vec<SiteMarginal>,
    pub fixed: Vec<FixedSite>,
    /// True when no site cleared the threshold and the best one was taken.
    pub forced: bool,
    pub energy: f64,
    pub top_bitstring: FeatureVector,
    pub top_probability: f64,
    pub evaluations: usize,
    pub cnot_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinSearchResult {
    pub solver: Solver,
    pub delta: f64,
    pub bitstring: FeatureVector,
    /// Energy of `bitstring` under the full Hamiltonian.
    pub energy: f64,
    pub rounds: Vec<Round>,
}

impl BinSearchResult {
    pub fn write_marginals_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "round,site,p0,p1,fixed")?;
        for (r, round) in self.rounds.iter().enumerate() {
            for m in &round.marginals {
                let fixed = round.fixed.iter().any(|f| f.site == m.site);
                writeln!(out, "{r},{},{},{},{}", m.site + 1, m.p0, m.p1, u8::from(fixed))?;
            }
        }
        Ok(())
    }
}

/// The sites to fix from one round's marginals.
fn choose(marg: &[SiteMarginal], delta: f64) -> (Vec<FixedSite>, bool) {
    let fix = |m: &SiteMarginal| FixedSite {
        site: m.site,
        bit: m.bit(),
    };
    let clear: Vec<FixedSite> = marg.iter().filter(|m| m.confidence() > delta).map(fix).collect();
    if !clear.is_empty() {
        return (clear, false);
    }
    let best = marg
        .iter()
        .reduce(|a, b| if b.confidence() > a.confidence() { b } else { a })
        .expect("at least one site");
    (vec![fix(best)], true)
}

pub fn binary_search_solve(
    h: &IsingModel,
    solver: Solver,
    delta: f64,
    loose_opt: &OptimizerConfig,
    mode: &Mode,
    seed: u64,
) -> Result<BinSearchResult> {
    if !(delta > 0.5 && delta <= 1.0) {
        return Err(Error::InvalidConfig(format!("delta must be in (0.5, 1], got {delta}")));
    }
    let n = h.n();
    let mut fixed: BTreeMap<usize, u8> = BTreeMap::new();
    let mut rounds = Vec::new();
    while fixed.len() < n {
        let fixes: Vec<(usize, u8)> = fixed.iter().map(|(&s, &b)| (s, b)).collect();
        let (reduced, remaining) = fix_qubits(h, &fixes)?;
        let opt = loose_opt.clone().with_seed(derive_seed(seed, rounds.len() as u64));
        let result = solver.run(&reduced, &opt, &mode.restrict(&remaining))?;
        let marg = marginals(&result.final_distribution, &remaining)?;
        let (chosen, forced) = choose(&marg, delta);
        for f in &chosen {
            fixed.insert(f.site, f.bit);
        }
        rounds.push(Round {
            size: remaining.len(),
            marginals: marg,
            fixed: chosen,
            forced,
            energy: result.energy,
            top_bitstring: result.top_bitstring().clone(),
            top_probability: result.top_probability(),
            evaluations: result.restart_traces.iter().map(Vec::len).sum(),
            cnot_count: result.ansatz.cnot_count,
        });
    }
    let bitstring = FeatureVector::new(fixed.into_values().collect())?;
    Ok(BinSearchResult {
        solver,
        delta,
        energy: h.energy(&bitstring)?,
        bitstring,
        rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::exact_solve;
    use proptest::prelude::*;

    fn toy() -> IsingModel {
        IsingModel::new(2, vec![1.25, -0.25], vec![0.75], 0.25).unwrap()
    }

    fn bits(text: &str) -> FeatureVector {
        text.parse().unwrap()
    }

    #[test]
    fn marginal_examples() {
        let mut probs = vec![0.0; 64];
        probs[0] = 0.9;
        probs[0b000010] = 0.1;
        let d = ProbDist::new(6, probs).unwrap();
        let m = marginals(&d, &[0, 1, 2, 3, 4, 5]).unwrap();
        assert!((m[4].p0 - 0.9).abs() < 1e-12 && (m[4].p1 - 0.1).abs() < 1e-12);
        for k in [0, 1, 2, 3, 5] {
            assert_eq!(m[k].p0, 1.0);
        }

        let u = marginals(&ProbDist::uniform(4), &[0, 1, 2, 3]).unwrap();
        assert!(u
            .iter()
            .all(|m| (m.p0 - 0.5).abs() < 1e-12 && (m.p1 - 0.5).abs() < 1e-12));

        let mut single = vec![0.0; 8];
        single[0b101] = 1.0;
        let s = marginals(&ProbDist::new(3, single).unwrap(), &[2, 4, 7]).unwrap();
        assert_eq!(
            s.iter().map(|m| (m.site, m.p1)).collect::<Vec<_>>(),
            [(2, 1.0), (4, 0.0), (7, 1.0)]
        );
    }

    #[test]
    fn unnormalized_marginals_are_rejected() {
        let d = ProbDist::new(1, vec![0.5, 0.4]).unwrap();
        assert!(matches!(marginals(&d, &[0]), Err(Error::Unnormalized(_))));
    }

    #[test]
    fn fix_examples() {
        let (r, map) = fix_qubits(&toy(), &[(0, 0)]).unwrap();
        assert_eq!(map, vec![1]);
        assert!((r.h()[0] + 1.0).abs() < 1e-12);
        assert!((r.offset() + 1.0).abs() < 1e-12);
        assert!((r.energy(&bits("1")).unwrap() + 2.0).abs() < 1e-12);

        let (same, map) = fix_qubits(&toy(), &[]).unwrap();
        assert_eq!(same, toy());
        assert_eq!(map, vec![0, 1]);

        let (empty, map) = fix_qubits(&toy(), &[(1, 1), (0, 0)]).unwrap();
        assert!(map.is_empty());
        assert_eq!(empty.offset(), toy().energy(&bits("01")).unwrap());
    }

    #[test]
    fn fix_errors() {
        assert!(matches!(
            fix_qubits(&toy(), &[(2, 0)]),
            Err(Error::QubitOutOfRange { index: 2, n: 2 })
        ));
        assert!(matches!(
            fix_qubits(&toy(), &[(1, 0), (1, 1)]),
            Err(Error::DoubleFix(1))
        ));
        assert!(fix_qubits(&toy(), &[(0, 2)]).is_err());
    }

    fn arb_ising(max_n: usize) -> impl Strategy<Value = IsingModel> {
        (1..=max_n).prop_flat_map(|n| {
            let pairs = n * (n - 1) / 2;
            (
                prop::collection::vec(-2.0..2.0f64, n),
                prop::collection::vec(-2.0..2.0f64, pairs),
                -2.0..2.0f64,
            )
                .prop_map(move |(h, j, o)| IsingModel::new(n, h, j, o).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn substitution_preserves_energy(h in arb_ising(10), mask in any::<u16>(), values in any::<u16>()) {
            let n = h.n();
            let fixes: Vec<(usize, u8)> = (0..n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| (i, (values >> i & 1) as u8))
                .collect();
            let (r, map) = fix_qubits(&h, &fixes).unwrap();
            prop_assert_eq!(r.n() + fixes.len(), n);
            for rest in 0..1usize << r.n() {
                let sub = FeatureVector::from_index(rest, r.n());
                let mut full = vec![0u8; n];
                for &(i, b) in &fixes {
                    full[i] = b;
                }
                for (k, &site) in map.iter().enumerate() {
                    full[site] = sub.bits()[k];
                }
                let e_full = h.energy(&FeatureVector::new(full).unwrap()).unwrap();
                let e_red = r.energy(&sub).unwrap();
                prop_assert!((e_full - e_red).abs() < 1e-12, "{} vs {}", e_full, e_red);
            }
        }

        #[test]
        fn marginals_sum_to_one(raw in prop::collection::vec(0.0..1.0f64, 16)) {
            let s: f64 = raw.iter().sum::<f64>() + 1e-9;
            let d = ProbDist::new(4, raw.iter().map(|v| (v + 1e-9 / 16.0) / s).collect()).unwrap();
            for m in marginals(&d, &[0, 1, 2, 3]).unwrap() {
                prop_assert!((m.p0 + m.p1 - 1.0).abs() < 1e-9);
                prop_assert!((0.0..=1.0 + 1e-12).contains(&m.p0));
            }
        }
    }

    #[test]
    fn single_site_field() {
        let h = IsingModel::new(1, vec![1.0], vec![], 0.0).unwrap();
        let r = binary_search_solve(
            &h,
            Solver::Vqe { depth: 1 },
            0.7,
            &OptimizerConfig::loose(),
            &Mode::Exact,
            0,
        )
        .unwrap();
        assert_eq!(r.bitstring.to_string(), "0");
        assert_eq!(r.rounds.len(), 1);
    }

    #[test]
    fn exact_mode_matches_enumeration() {
        let h = IsingModel::new(4, vec![0.9, -0.4, 0.3, 0.7], vec![0.2, -0.1, 0.05, 0.3, -0.2, 0.1], 0.0).unwrap();
        let ground = exact_solve(&h).unwrap();
        for solver in [Solver::Vqe { depth: 1 }, Solver::Qaoa { p: 2 }] {
            let r = binary_search_solve(&h, solver, 0.7, &OptimizerConfig::loose(), &Mode::Exact, 3).unwrap();
            assert!(
                ground.ground_bitstrings.contains(&r.bitstring),
                "{solver:?} gave {}",
                r.bitstring
            );
            let mut sizes: Vec<usize> = r.rounds.iter().map(|x| x.size).collect();
            assert!(sizes.windows(2).all(|w| w[1] < w[0]));
            sizes.dedup();
            assert!(r.rounds.len() <= 4);
        }
    }

    #[test]
    fn forced_progress_picks_one_site() {
        let u = marginals(&ProbDist::uniform(3), &[0, 1, 2]).unwrap();
        let (fixed, forced) = choose(&u, 0.7);
        assert!(forced);
        assert_eq!(fixed, vec![FixedSite { site: 0, bit: 0 }]);
    }

    #[test]
    fn delta_range() {
        let h = toy();
        for bad in [0.5, 0.2, 1.5] {
            assert!(binary_search_solve(
                &h,
                Solver::Qaoa { p: 1 },
                bad,
                &OptimizerConfig::loose(),
                &Mode::Exact,
                0
            )
            .is_err());
        }
    }
}
