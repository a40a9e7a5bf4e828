use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::noise::NoiseModel;
use super::state::StateVector;
use crate::dataset::{parse_feature_vector, FeatureVector};
use crate::hamiltonian::IsingModel;
use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Dense shot histogram over the 2ⁿ basis states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counts {
    n: usize,
    counts: Vec<u64>,
}

impl Counts {
    pub fn zeros(n: usize) -> Self {
        Counts {
            n,
            counts: vec![0; 1 << n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.counts
    }

    pub fn shots(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn get(&self, x: &FeatureVector) -> u64 {
        if x.len() != self.n {
            return 0;
        }
        self.counts[x.index()]
    }

    pub fn add(&mut self, index: usize, count: u64) {
        self.counts[index] += count;
    }

    /// Nonzero entries in index order.
    pub fn iter(&self) -> impl Iterator<Item = (FeatureVector, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (FeatureVector::from_index(i, self.n), c))
    }

    /// Empirical distribution. Fails on an empty histogram.
    pub fn to_distribution(&self) -> Result<ProbDist> {
        let total = self.shots();
        if total == 0 {
            return Err(Error::NoRecords);
        }
        let inv = 1.0 / total as f64;
        Ok(ProbDist {
            n: self.n,
            probs: self.counts.iter().map(|&c| c as f64 * inv).collect(),
        })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "bitstring,count")?;
        for (x, c) in self.iter() {
            writeln!(out, "{x},{c}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(source: R) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in source.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if i == 0 {
                if line != "bitstring,count" {
                    return Err(Error::MalformedRow {
                        line: 1,
                        reason: format!("expected header `bitstring,count`, found `{line}`"),
                    });
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let bad = |reason: String| Error::MalformedRow { line: i + 1, reason };
            let (x, c) = line.split_once(',').ok_or_else(|| bad("expected two columns".into()))?;
            let x = parse_feature_vector(x)?;
            let c: u64 = c.trim().parse().map_err(|e| bad(format!("count: {e}")))?;
            entries.push((x, c));
        }
        let n = entries.first().ok_or(Error::NoRecords)?.0.len();
        let mut counts = Counts::zeros(n);
        for (x, c) in entries {
            if x.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: x.len(),
                });
            }
            counts.add(x.index(), c);
        }
        Ok(counts)
    }
}

/// Probability distribution over n-bit strings, stored densely by basis index.
///
/// Serialized as a map from bitstring to probability (zero entries omitted).
#[derive(Clone, Debug, PartialEq)]
pub struct ProbDist {
    n: usize,
    probs: Vec<f64>,
}

impl ProbDist {
    pub fn new(n: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != 1 << n {
            return Err(Error::LengthMismatch {
                expected: 1 << n,
                found: probs.len(),
            });
        }
        if let Some(&p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidProbability(p));
        }
        Ok(ProbDist { n, probs })
    }

    pub fn from_state(state: &StateVector) -> Self {
        ProbDist {
            n: state.n(),
            probs: state.probabilities(),
        }
    }

    pub fn uniform(n: usize) -> Self {
        let size = 1usize << n;
        ProbDist {
            n,
            probs: vec![1.0 / size as f64; size],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn get(&self, x: &FeatureVector) -> f64 {
        if x.len() != self.n {
            return 0.0;
        }
        self.probs[x.index()]
    }

    /// The `k` most probable bitstrings, descending, ties broken
    /// lexicographically (which is index order).
    pub fn top_k(&self, k: usize) -> Vec<(FeatureVector, f64)> {
        let mut idx: Vec<usize> = (0..self.probs.len()).collect();
        idx.sort_by(|&a, &b| self.probs[b].total_cmp(&self.probs[a]).then(a.cmp(&b)));
        idx.truncate(k);
        idx.into_iter()
            .map(|i| (FeatureVector::from_index(i, self.n), self.probs[i]))
            .collect()
    }

    pub fn total_variation(&self, other: &ProbDist) -> Result<f64> {
        if other.n != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(0.5
            * self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "bitstring,probability")?;
        for (x, p) in self.top_k(self.probs.len()) {
            if p > 0.0 {
                writeln!(out, "{x},{p}")?;
            }
        }
        Ok(())
    }
}

impl Serialize for ProbDist {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<String, f64> = self
            .probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| (FeatureVector::from_index(i, self.n).to_string(), p))
            .collect();
        map.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProbDist {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let map = BTreeMap::<String, f64>::deserialize(d)?;
        let n = map
            .keys()
            .next()
            .ok_or_else(|| D::Error::custom("empty distribution"))?
            .len();
        let mut probs = vec![0.0; 1 << n];
        for (k, p) in map {
            let x = parse_feature_vector(&k).map_err(D::Error::custom)?;
            if x.len() != n {
                return Err(D::Error::custom(format!(
                    "bitstring `{k}` has length {} not {n}",
                    x.len()
                )));
            }
            probs[x.index()] = p;
        }
        ProbDist::new(n, probs).map_err(D::Error::custom)
    }
}

/// Multinomial draw from `probs` followed by independent per-bit readout flips.
pub fn sample_probabilities(
    n: usize,
    probs: &[f64],
    shots: u64,
    noise: Option<&NoiseModel>,
    seed: u64,
) -> Result<Counts> {
    if probs.len() != 1 << n {
        return Err(Error::LengthMismatch {
            expected: 1 << n,
            found: probs.len(),
        });
    }
    if shots == 0 {
        return Err(Error::InvalidConfig("shots must be at least 1".into()));
    }
    if let Some(m) = noise {
        m.validate(n)?;
    }
    let dist = WeightedIndex::new(probs).map_err(|e| Error::InvalidConfig(format!("bad distribution: {e}")))?;
    // Flip probabilities indexed by [qubit][true bit]; qubit q is bit n-1-q of the index.
    let flips: Vec<[f64; 2]> = (0..n)
        .map(|q| {
            let r = noise.map(|m| m.readout_for(q)).unwrap_or_default();
            [r.p01, r.p10]
        })
        .collect();
    let readout = flips.iter().any(|f| f[0] > 0.0 || f[1] > 0.0);
    let mut rng = rng_from_seed(seed);
    let mut counts = Counts::zeros(n);
    for _ in 0..shots {
        let mut b = dist.sample(&mut rng);
        if readout {
            for (q, f) in flips.iter().enumerate() {
                let mask = 1 << (n - 1 - q);
                let bit = usize::from(b & mask != 0);
                if rng.random::<f64>() < f[bit] {
                    b ^= mask;
                }
            }
        }
        counts.add(b, 1);
    }
    Ok(counts)
}

pub fn sample(state: &StateVector, shots: u64, noise: Option<&NoiseModel>, seed: u64) -> Result<Counts> {
    sample_probabilities(state.n(), &state.probabilities(), shots, noise, seed)
}

/// `Σ_b probs[b] · energies[b]`.
pub fn expectation_from(probs: &[f64], energies: &[f64]) -> Result<f64> {
    if probs.len() != energies.len() {
        return Err(Error::LengthMismatch {
            expected: energies.len(),
            found: probs.len(),
        });
    }
    Ok(probs.iter().zip(energies).map(|(p, e)| p * e).sum())
}

pub fn expectation_ising(state: &StateVector, h: &IsingModel) -> Result<f64> {
    if state.n() != h.n() {
        return Err(Error::LengthMismatch {
            expected: h.n(),
            found: state.n(),
        });
    }
    expectation_from(&state.probabilities(), &h.energies())
}
