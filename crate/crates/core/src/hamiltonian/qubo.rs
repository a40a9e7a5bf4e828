use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{pair_index, pair_map, pair_vec, pairs, Provenance};
use crate::dataset::FeatureVector;
use crate::{Error, Result};

/// `offset + Σ Q_ii x_i + Σ_{i<j} Q_ij x_i x_j` over binary `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "QuboDoc", try_from = "QuboDoc")]
pub struct QuboModel {
    n: usize,
    diag: Vec<f64>,
    upper: Vec<f64>,
    offset: f64,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct QuboDoc {
    n: usize,
    diag: Vec<f64>,
    upper: BTreeMap<String, f64>,
    offset: f64,
    #[serde(default)]
    provenance: Provenance,
}

impl From<QuboModel> for QuboDoc {
    fn from(q: QuboModel) -> Self {
        QuboDoc {
            n: q.n,
            upper: pair_map(q.n, &q.upper),
            diag: q.diag,
            offset: q.offset,
            provenance: q.provenance,
        }
    }
}

impl TryFrom<QuboDoc> for QuboModel {
    type Error = String;

    fn try_from(d: QuboDoc) -> std::result::Result<Self, String> {
        let upper = pair_vec(d.n, &d.upper)?;
        let mut q = QuboModel::new(d.n, d.diag, upper, d.offset).map_err(|e| e.to_string())?;
        q.provenance = d.provenance;
        Ok(q)
    }
}

impl QuboModel {
    pub fn new(n: usize, diag: Vec<f64>, upper: Vec<f64>, offset: f64) -> Result<Self> {
        if diag.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: diag.len(),
            });
        }
        let pairs = n * n.saturating_sub(1) / 2;
        if upper.len() != pairs {
            return Err(Error::LengthMismatch {
                expected: pairs,
                found: upper.len(),
            });
        }
        if !(offset.is_finite() && diag.iter().chain(&upper).all(|v| v.is_finite())) {
            return Err(Error::InvalidConfig("QUBO coefficients must be finite".into()));
        }
        Ok(QuboModel {
            n,
            diag,
            upper,
            offset,
            provenance: Provenance::default(),
        })
    }

    pub fn zeros(n: usize) -> Self {
        QuboModel {
            n,
            diag: vec![0.0; n],
            upper: vec![0.0; n * n.saturating_sub(1) / 2],
            offset: 0.0,
            provenance: Provenance::default(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Upper-triangular couplings in [`pairs`] order.
    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.upper[pair_index(self.n, a, b)]
    }

    pub fn set_diag(&mut self, i: usize, v: f64) {
        self.diag[i] = v;
    }

    pub fn set_coupling(&mut self, i: usize, j: usize, v: f64) {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.upper[pair_index(self.n, a, b)] = v;
    }

    pub fn set_offset(&mut self, v: f64) {
        self.offset = v;
    }

    pub fn eval(&self, x: &FeatureVector) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &FeatureVector) -> f64 {
        let b = x.bits();
        let mut e = self.offset;
        for (i, &q) in self.diag.iter().enumerate() {
            if b[i] == 1 {
                e += q;
            }
        }
        for ((i, j), &q) in pairs(self.n).zip(&self.upper) {
            if b[i] == 1 && b[j] == 1 {
                e += q;
            }
        }
        e
    }

    /// Largest `|Q_ii|`, `|Q_ij|` (offset excluded).
    pub fn max_abs_coefficient(&self) -> f64 {
        self.coefficients().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn coefficients(&self) -> impl Iterator<Item = f64> + '_ {
        self.diag.iter().chain(&self.upper).copied()
    }

    pub(crate) fn map_coefficients(&self, f: impl Fn(f64) -> f64) -> QuboModel {
        QuboModel {
            n: self.n,
            diag: self.diag.iter().map(|&v| f(v)).collect(),
            upper: self.upper.iter().map(|&v| f(v)).collect(),
            offset: f(self.offset),
            provenance: self.provenance.clone(),
        }
    }
}

/// Divide every coefficient and the offset by the smallest nonzero
/// `|Q_ii|`, `|Q_ij|`. Signs and the argmin set are preserved.
pub fn scale_qubo(q: &QuboModel) -> Result<QuboModel> {
    let s = q
        .coefficients()
        .map(f64::abs)
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !s.is_finite() {
        return Err(Error::AllZeroModel);
    }
    let mut out = q.map_coefficients(|v| v / s);
    out.provenance.scale = Some(q.provenance.scale.unwrap_or(1.0) * s);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> QuboModel {
        QuboModel::new(2, vec![1.0, -2.0], vec![3.0], 0.0).unwrap()
    }

    fn fv(s: &str) -> FeatureVector {
        s.parse().unwrap()
    }

    #[test]
    fn eval_examples() {
        let q = toy();
        assert_eq!(q.eval(&fv("00")).unwrap(), 0.0);
        assert_eq!(q.eval(&fv("11")).unwrap(), 2.0);
        assert_eq!(q.eval(&fv("01")).unwrap(), -2.0);
        let min = (0..4)
            .map(|i| q.eval(&FeatureVector::from_index(i, 2)).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert_eq!(min, -2.0);
        assert!(matches!(
            q.eval(&fv("011")),
            Err(Error::LengthMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn scale_examples() {
        let q = QuboModel::new(2, vec![2.0, -4.0], vec![6.0], 5.0).unwrap();
        let s = scale_qubo(&q).unwrap();
        assert_eq!(s.diag(), &[1.0, -2.0]);
        assert_eq!(s.upper(), &[3.0]);
        assert_eq!(s.offset(), 2.5);
        assert_eq!(s.provenance.scale, Some(2.0));

        let unit = QuboModel::new(2, vec![1.0, -2.0], vec![3.0], 0.0).unwrap();
        let again = scale_qubo(&unit).unwrap();
        assert_eq!(again.diag(), unit.diag());
        assert_eq!(again.upper(), unit.upper());

        assert!(matches!(scale_qubo(&QuboModel::zeros(3)), Err(Error::AllZeroModel)));
    }

    #[test]
    fn scaling_preserves_argmin() {
        let q = crate::dataset::synth::random_qubo(6, 42);
        let s = scale_qubo(&q).unwrap();
        let argmin = |m: &QuboModel| {
            (0..64)
                .min_by(|&a, &b| {
                    let ea = m.eval(&FeatureVector::from_index(a, 6)).unwrap();
                    let eb = m.eval(&FeatureVector::from_index(b, 6)).unwrap();
                    ea.total_cmp(&eb)
                })
                .unwrap()
        };
        assert_eq!(argmin(&q), argmin(&s));
    }

    #[test]
    fn json_round_trip() {
        let mut q = crate::dataset::synth::random_qubo(5, 8);
        q.provenance.scale = Some(0.25);
        let text = serde_json::to_string(&q).unwrap();
        assert!(text.contains("\"0,1\""));
        let back: QuboModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, q);
    }

    #[test]
    fn json_rejects_bad_pair_keys() {
        let bad = r#"{"n":2,"diag":[0,0],"upper":{"1,0":1.0},"offset":0}"#;
        assert!(serde_json::from_str::<QuboModel>(bad).is_err());
    }
}
