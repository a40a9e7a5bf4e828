use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{pair_index, pair_map, pair_vec, pairs, Provenance, QuboModel};
use crate::dataset::FeatureVector;
use crate::par::{fill_indexed, Execution};
use crate::{Error, Result};

/// `offset + Σ h_i s_i + Σ_{i<j} J_ij s_i s_j` over spins `s_i = 2x_i - 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "IsingDoc", try_from = "IsingDoc")]
pub struct IsingModel {
    n: usize,
    h: Vec<f64>,
    j: Vec<f64>,
    offset: f64,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct IsingDoc {
    n: usize,
    h: Vec<f64>,
    #[serde(rename = "J")]
    j: BTreeMap<String, f64>,
    offset: f64,
    #[serde(default)]
    provenance: Provenance,
}

impl From<IsingModel> for IsingDoc {
    fn from(m: IsingModel) -> Self {
        IsingDoc {
            n: m.n,
            j: pair_map(m.n, &m.j),
            h: m.h,
            offset: m.offset,
            provenance: m.provenance,
        }
    }
}

impl TryFrom<IsingDoc> for IsingModel {
    type Error = String;

    fn try_from(d: IsingDoc) -> std::result::Result<Self, String> {
        let j = pair_vec(d.n, &d.j)?;
        let mut m = IsingModel::new(d.n, d.h, j, d.offset).map_err(|e| e.to_string())?;
        m.provenance = d.provenance;
        Ok(m)
    }
}

impl IsingModel {
    pub fn new(n: usize, h: Vec<f64>, j: Vec<f64>, offset: f64) -> Result<Self> {
        if h.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: h.len(),
            });
        }
        let pairs = n * n.saturating_sub(1) / 2;
        if j.len() != pairs {
            return Err(Error::LengthMismatch {
                expected: pairs,
                found: j.len(),
            });
        }
        if !(offset.is_finite() && h.iter().chain(&j).all(|v| v.is_finite())) {
            return Err(Error::InvalidConfig("Ising coefficients must be finite".into()));
        }
        Ok(IsingModel {
            n,
            h,
            j,
            offset,
            provenance: Provenance::default(),
        })
    }

    pub fn zeros(n: usize) -> Self {
        IsingModel {
            n,
            h: vec![0.0; n],
            j: vec![0.0; n * n.saturating_sub(1) / 2],
            offset: 0.0,
            provenance: Provenance::default(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// Couplings in [`pairs`](super::pairs) order.
    pub fn j(&self) -> &[f64] {
        &self.j
    }

    pub fn coupling(&self, a: usize, b: usize) -> f64 {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        self.j[pair_index(self.n, i, j)]
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Nonzero couplings as `(i, j, J_ij)`.
    pub fn couplings(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        pairs(self.n)
            .zip(&self.j)
            .filter(|(_, &v)| v != 0.0)
            .map(|((i, j), &v)| (i, j, v))
    }

    pub fn num_couplings(&self) -> usize {
        self.j.iter().filter(|&&v| v != 0.0).count()
    }

    /// Largest `|h_i|`, `|J_ij|`; 0 for a constant model.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.h.iter().chain(&self.j).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn energy(&self, x: &FeatureVector) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        Ok(self.energy_index(x.index()))
    }

    /// Energy of the basis state `index` (site 1 is the most significant bit).
    pub fn energy_index(&self, index: usize) -> f64 {
        let n = self.n;
        let spin = |i: usize| -> f64 {
            if (index >> (n - 1 - i)) & 1 == 1 {
                1.0
            } else {
                -1.0
            }
        };
        let mut e = self.offset;
        for (i, &h) in self.h.iter().enumerate() {
            e += h * spin(i);
        }
        let mut k = 0;
        for i in 0..n {
            let si = spin(i);
            for jj in i + 1..n {
                e += self.j[k] * si * spin(jj);
                k += 1;
            }
        }
        e
    }

    /// Energies of all `2^n` basis states, indexed by basis index.
    pub fn energies(&self) -> Vec<f64> {
        self.energies_with(Execution::default())
    }

    pub fn energies_with(&self, exec: Execution) -> Vec<f64> {
        let mut out = vec![0.0; 1usize << self.n];
        fill_indexed(exec, &mut out, 1 << 12, |idx| self.energy_index(idx));
        out
    }

    pub(crate) fn from_parts(n: usize, h: Vec<f64>, j: Vec<f64>, offset: f64, provenance: Provenance) -> Self {
        IsingModel {
            n,
            h,
            j,
            offset,
            provenance,
        }
    }
}

/// Substitute `x_i = (s_i + 1) / 2`, keeping the constant so energies agree
/// with the QUBO value for every assignment.
pub fn qubo_to_ising(q: &QuboModel) -> IsingModel {
    let n = q.n();
    let mut h: Vec<f64> = q.diag().iter().map(|&d| d / 2.0).collect();
    let mut offset = q.offset() + q.diag().iter().sum::<f64>() / 2.0;
    let mut j = Vec::with_capacity(q.upper().len());
    for ((a, b), &qab) in pairs(n).zip(q.upper()) {
        h[a] += qab / 4.0;
        h[b] += qab / 4.0;
        offset += qab / 4.0;
        j.push(qab / 4.0);
    }
    IsingModel::from_parts(n, h, j, offset, q.provenance.clone())
}
