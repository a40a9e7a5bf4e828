//! Feature vectors, `(bitstring, value)` datasets, staged training-set
//! selection and the R² validation metric.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::hamiltonian::QuboModel;
use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Largest site count accepted by exhaustive dataset generation.
pub const MAX_SYNTH_SITES: usize = 16;

/// Ordered binary assignment of `n` sites. Position 0 here is site 1, the
/// leftmost character of the rendered string and the most significant bit
/// of the basis index.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureVector(Vec<u8>);

impl FeatureVector {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidBit {
                found: char::from(b'0' + b.min(9)),
                position: bits.iter().position(|&x| x == b).unwrap_or(0) + 1,
            });
        }
        Ok(FeatureVector(bits))
    }

    /// The basis state `index` of an `n`-site register.
    pub fn from_index(index: usize, n: usize) -> Self {
        debug_assert!(n == 0 || index >> n == 0);
        FeatureVector((0..n).map(|i| ((index >> (n - 1 - i)) & 1) as u8).collect())
    }

    pub fn zeros(n: usize) -> Self {
        FeatureVector(vec![0; n])
    }

    pub fn ones(n: usize) -> Self {
        FeatureVector(vec![1; n])
    }

    /// `n` ones except a zero at `site` (0-based).
    pub fn one_cold(n: usize, site: usize) -> Self {
        let mut bits = vec![1; n];
        bits[site] = 0;
        FeatureVector(bits)
    }

    /// `n` zeros except a one at `site` (0-based).
    pub fn one_hot(n: usize, site: usize) -> Self {
        let mut bits = vec![0; n];
        bits[site] = 1;
        FeatureVector(bits)
    }

    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    /// Number of deuterium sites.
    pub fn count_zeros(&self) -> usize {
        self.len() - self.count_ones()
    }

    pub fn complement(&self) -> Self {
        FeatureVector(self.0.iter().map(|&b| 1 - b).collect())
    }

    /// Spin values `s = 2b - 1`.
    pub fn spins(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().map(|&b| 2.0 * b as f64 - 1.0)
    }

    /// Hydrogen/deuterium rendering: `1 → H`, `0 → D`.
    pub fn to_hd(&self) -> String {
        self.0.iter().map(|&b| if b == 1 { 'H' } else { 'D' }).collect()
    }
}

impl fmt::Display for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for FeatureVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_feature_vector(s)
    }
}

impl Serialize for FeatureVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FeatureVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parse `"100110"` or `"[100110]"`.
pub fn parse_feature_vector(text: &str) -> Result<FeatureVector> {
    let trimmed = text.trim();
    let inner = trimmed
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .unwrap_or(trimmed);
    if inner.is_empty() {
        return Err(Error::EmptyBitstring);
    }
    inner
        .chars()
        .enumerate()
        .map(|(i, c)| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::InvalidBit {
                found: other,
                position: i + 1,
            }),
        })
        .collect::<Result<Vec<u8>>>()
        .map(FeatureVector)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub x: FeatureVector,
    pub y: f64,
}

/// Records over a fixed site count with no duplicate feature vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    n: usize,
    records: Vec<Record>,
}

impl Dataset {
    pub fn new(n: usize, records: Vec<Record>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if r.x.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: r.x.len(),
                });
            }
            if !r.y.is_finite() {
                return Err(Error::MalformedRow {
                    line: 0,
                    reason: format!("non-finite value for {}", r.x),
                });
            }
            if !seen.insert(r.x.clone()) {
                return Err(Error::DuplicateBitstring(r.x.to_string()));
            }
        }
        Ok(Dataset { n, records })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, x: &FeatureVector) -> Option<f64> {
        self.records.iter().find(|r| &r.x == x).map(|r| r.y)
    }

    pub fn contains(&self, x: &FeatureVector) -> bool {
        self.records.iter().any(|r| &r.x == x)
    }

    pub fn targets(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.y).collect()
    }

    /// Write as `bitstring,value` CSV. Values use Rust's shortest round-trip
    /// exponent form, so `load_dataset(save(ds)) == ds` exactly.
    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "bitstring,value")?;
        for r in &self.records {
            writeln!(out, "{},{:e}", r.x, r.y)?;
        }
        Ok(())
    }
}

/// Read a `bitstring,value` CSV with a required header.
pub fn load_dataset<R: BufRead>(source: R, n: usize) -> Result<Dataset> {
    let mut lines = source.lines().enumerate();
    let header = loop {
        match lines.next() {
            None => return Err(Error::NoRecords),
            Some((_, line)) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
        }
    };
    let cols: Vec<_> = header.trim().split(',').map(str::trim).collect();
    if cols != ["bitstring", "value"] {
        return Err(Error::MalformedRow {
            line: 1,
            reason: format!("expected header `bitstring,value`, got `{}`", header.trim()),
        });
    }

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let lineno = i + 1;
        let malformed = |reason: String| Error::MalformedRow { line: lineno, reason };
        let (bits, value) = line
            .split_once(',')
            .ok_or_else(|| malformed("expected two columns".into()))?;
        if value.contains(',') {
            return Err(malformed("expected two columns".into()));
        }
        let x = parse_feature_vector(bits).map_err(|e| malformed(e.to_string()))?;
        if x.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: x.len(),
            });
        }
        let y: f64 = value
            .trim()
            .parse()
            .map_err(|e| malformed(format!("bad value `{}`: {e}", value.trim())))?;
        if !y.is_finite() {
            return Err(malformed(format!("non-finite value `{}`", value.trim())));
        }
        if !seen.insert(x.clone()) {
            return Err(Error::DuplicateBitstring(x.to_string()));
        }
        records.push(Record { x, y });
    }
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    Ok(Dataset { n, records })
}

/// Last valid stage for `n` sites: stage `s` holds `1 + 2(s + 1)` records.
pub fn max_stage(n: usize) -> usize {
    n.saturating_sub(1)
}

/// Incremental training subset: the all-ones vector plus `stage + 1`
/// (one-cold, one-hot complement) pairs in a seeded random order.
///
/// Stage 0 has 3 records; the last stage has all `2n + 1` structured vectors.
/// `test` is every other record of `ds`, in dataset order.
pub fn select_training_set(ds: &Dataset, stage: usize, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = ds.n();
    if n == 0 {
        return Err(Error::NoRecords);
    }
    let max = max_stage(n);
    if stage > max {
        return Err(Error::StageOutOfRange { stage, max });
    }
    let mut required = vec![FeatureVector::ones(n)];
    for site in 0..n {
        required.push(FeatureVector::one_cold(n, site));
        required.push(FeatureVector::one_hot(n, site));
    }
    if let Some(missing) = required.iter().find(|x| !ds.contains(x)) {
        return Err(Error::MissingVector(missing.to_string()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(seed));

    let mut chosen = vec![FeatureVector::ones(n)];
    for &site in order.iter().take(stage + 1) {
        let cold = FeatureVector::one_cold(n, site);
        let hot = cold.complement();
        chosen.push(cold);
        chosen.push(hot);
    }

    let pick = |x: &FeatureVector| Record {
        x: x.clone(),
        y: ds.get(x).expect("checked above"),
    };
    let train: Vec<Record> = chosen.iter().map(pick).collect();
    let test: Vec<Record> = ds
        .records()
        .iter()
        .filter(|r| !chosen.contains(&r.x))
        .cloned()
        .collect();
    Ok((Dataset { n, records: train }, Dataset { n, records: test }))
}

/// Squared Pearson sample correlation.
pub fn r_squared(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::LengthMismatch {
            expected: target.len(),
            found: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::NoRecords);
    }
    let len = pred.len() as f64;
    let mp = pred.iter().sum::<f64>() / len;
    let mt = target.iter().sum::<f64>() / len;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&p, &t) in pred.iter().zip(target) {
        let (dp, dt) = (p - mp, t - mt);
        sxy += dp * dt;
        sxx += dp * dp;
        syy += dt * dt;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("predictions"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("targets"));
    }
    Ok(((sxy * sxy) / (sxx * syy)).min(1.0))
}

/// Every `2^n` feature vector labelled by `truth` plus Gaussian noise.
pub fn synth_dataset(truth: &QuboModel, noise_sigma: f64, seed: u64) -> Result<Dataset> {
    let n = truth.n();
    if n > MAX_SYNTH_SITES {
        return Err(Error::TooLarge {
            what: "site count",
            n,
            max: MAX_SYNTH_SITES,
        });
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!("noise_sigma = {noise_sigma}")));
    }
    let mut rng = rng_from_seed(seed);
    let normal = Normal::new(0.0, noise_sigma).expect("sigma validated");
    let records = (0..1usize << n)
        .map(|idx| {
            let x = FeatureVector::from_index(idx, n);
            let clean = truth.eval_unchecked(&x);
            let y = if noise_sigma > 0.0 {
                clean + normal.sample(&mut rng)
            } else {
                clean
            };
            Record { x, y }
        })
        .collect();
    Ok(Dataset { n, records })
}

/// Generators for synthetic ground-truth QUBOs.
pub mod synth {
    use rand::Rng;

    use crate::hamiltonian::QuboModel;
    use crate::rng::rng_from_seed;

    /// Offset, diagonal and coupling coefficients i.i.d. uniform in `[-1, 1]`.
    pub fn random_qubo(n: usize, seed: u64) -> QuboModel {
        let mut rng = rng_from_seed(seed);
        let offset = rng.random_range(-1.0..=1.0);
        let diag = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let upper = (0..n * n.saturating_sub(1) / 2)
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect();
        QuboModel::new(n, diag, upper, offset).expect("finite by construction")
    }

    /// A monotone property model: every hydrogen adds a positive site
    /// contribution and every hydrogen pair a smaller positive interaction,
    /// so the value grows with the hydrogen count and the all-deuterium
    /// vector is the unconstrained minimum. Magnitudes mimic Franck–Condon
    /// factors (`~1e-5`).
    pub fn monotone_qubo(n: usize, seed: u64) -> QuboModel {
        let mut rng = rng_from_seed(seed);
        let diag = (0..n).map(|_| rng.random_range(0.10..0.40) * 1e-5).collect();
        let upper = (0..n * n.saturating_sub(1) / 2)
            .map(|_| rng.random_range(0.02..0.06) * 1e-5)
            .collect();
        QuboModel::new(n, diag, upper, 1.15e-5).expect("finite by construction")
    }
}
