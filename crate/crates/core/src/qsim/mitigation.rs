use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::measure::{sample_probabilities, Counts, ProbDist};
use super::noise::NoiseModel;
use crate::par::{map_range, Execution};
use crate::rng::derive_seed;
use crate::{Error, Result};

/// Condition numbers above this are refused.
pub const MAX_CONDITION: f64 = 1e12;

const COLUMN_TOL: f64 = 1e-9;
const MAX_ITER: usize = 100_000;
const STEP_TOL: f64 = 1e-14;

/// Readout calibration matrix; column `j` is the measured distribution
/// when basis state `j` is prepared.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "MatrixDoc", try_from = "MatrixDoc")]
pub struct ConfusionMatrix {
    n: usize,
    m: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixDoc {
    n: usize,
    #[serde(rename = "M")]
    rows: Vec<Vec<f64>>,
}

impl From<ConfusionMatrix> for MatrixDoc {
    fn from(c: ConfusionMatrix) -> Self {
        MatrixDoc {
            n: c.n,
            rows: c.m.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }
}

impl TryFrom<MatrixDoc> for ConfusionMatrix {
    type Error = Error;

    fn try_from(doc: MatrixDoc) -> Result<Self> {
        let size = 1usize << doc.n;
        if doc.rows.len() != size || doc.rows.iter().any(|r| r.len() != size) {
            return Err(Error::InvalidConfig(format!("confusion matrix must be {size}x{size}")));
        }
        let m = DMatrix::from_fn(size, size, |i, j| doc.rows[i][j]);
        ConfusionMatrix::new(doc.n, m)
    }
}

impl ConfusionMatrix {
    /// Checks shape, nonnegativity and column sums.
    pub fn new(n: usize, m: DMatrix<f64>) -> Result<Self> {
        let size = 1usize << n;
        if m.nrows() != size || m.ncols() != size {
            return Err(Error::InvalidConfig(format!(
                "confusion matrix must be {size}x{size}, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if let Some(&v) = m.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidProbability(v));
        }
        for (j, col) in m.column_iter().enumerate() {
            let s = col.sum();
            if (s - 1.0).abs() > COLUMN_TOL {
                return Err(Error::InvalidConfig(format!("column {j} sums to {s}")));
            }
        }
        Ok(ConfusionMatrix { n, m })
    }

    pub fn identity(n: usize) -> Self {
        let size = 1 << n;
        ConfusionMatrix {
            n,
            m: DMatrix::identity(size, size),
        }
    }

    /// The exact matrix of independent per-qubit readout flips.
    pub fn from_readout(n: usize, noise: &NoiseModel) -> Result<Self> {
        noise.validate(n)?;
        let size = 1usize << n;
        let m = DMatrix::from_fn(size, size, |i, j| {
            (0..n)
                .map(|q| {
                    let r = noise.readout_for(q);
                    let shift = n - 1 - q;
                    match ((j >> shift) & 1, (i >> shift) & 1) {
                        (0, 0) => 1.0 - r.p01,
                        (0, _) => r.p01,
                        (_, 0) => r.p10,
                        _ => 1.0 - r.p10,
                    }
                })
                .product()
        });
        Ok(ConfusionMatrix { n, m })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn get(&self, measured: usize, prepared: usize) -> f64 {
        self.m[(measured, prepared)]
    }

    /// 2-norm condition number from the singular values.
    pub fn condition(&self) -> f64 {
        let sv = self.m.singular_values();
        let max = sv.max();
        let min = sv.min();
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }
}

pub fn build_confusion_matrix(
    n: usize,
    noise: &NoiseModel,
    shots_per_state: u64,
    seed: u64,
) -> Result<ConfusionMatrix> {
    build_confusion_matrix_with(n, noise, shots_per_state, seed, Execution::default())
}

/// Calibrate by preparing every basis state exactly and sampling it through
/// the readout channel. Columns are independent and seeded per state.
pub fn build_confusion_matrix_with(
    n: usize,
    noise: &NoiseModel,
    shots_per_state: u64,
    seed: u64,
    exec: Execution,
) -> Result<ConfusionMatrix> {
    noise.validate(n)?;
    if shots_per_state == 0 {
        return Err(Error::InvalidConfig("shots_per_state must be at least 1".into()));
    }
    let size = 1usize << n;
    let columns = map_range(exec, size, |j| {
        let mut probs = vec![0.0; size];
        probs[j] = 1.0;
        sample_probabilities(n, &probs, shots_per_state, Some(noise), derive_seed(seed, j as u64))
    });
    let inv = 1.0 / shots_per_state as f64;
    let mut m = DMatrix::zeros(size, size);
    for (j, col) in columns.into_iter().enumerate() {
        for (i, &c) in col?.as_slice().iter().enumerate() {
            m[(i, j)] = c as f64 * inv;
        }
    }
    Ok(ConfusionMatrix { n, m })
}

/// Constrained least-squares readout correction for a fixed calibration:
/// `argmin ‖M x − p‖₂` over the probability simplex.
#[derive(Clone, Debug)]
pub struct Mitigator {
    m: ConfusionMatrix,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    gram: DMatrix<f64>,
    lipschitz: f64,
}

impl Mitigator {
    pub fn new(m: ConfusionMatrix) -> Result<Self> {
        let condition = m.condition();
        if !condition.is_finite() || condition > MAX_CONDITION {
            return Err(Error::IllConditioned { condition });
        }
        let gram = m.m.transpose() * &m.m;
        let sigma_max = m.m.singular_values().max();
        Ok(Mitigator {
            lu: m.m.clone().lu(),
            m,
            gram,
            lipschitz: sigma_max * sigma_max,
        })
    }

    pub fn n(&self) -> usize {
        self.m.n
    }

    pub fn confusion(&self) -> &ConfusionMatrix {
        &self.m
    }

    pub fn mitigate(&self, counts: &Counts) -> Result<ProbDist> {
        if counts.n() != self.m.n {
            return Err(Error::LengthMismatch {
                expected: self.m.n,
                found: counts.n(),
            });
        }
        self.correct(counts.to_distribution()?.as_slice())
    }

    /// Correct an already-normalized measured distribution.
    pub fn correct(&self, noisy: &[f64]) -> Result<ProbDist> {
        let size = 1usize << self.m.n;
        if noisy.len() != size {
            return Err(Error::LengthMismatch {
                expected: size,
                found: noisy.len(),
            });
        }
        let p = nalgebra::DVector::from_column_slice(noisy);
        // An unconstrained solution that is already a distribution is optimal.
        if let Some(x) = self.lu.solve(&p) {
            if x.iter().all(|&v| v >= -1e-12) {
                let clipped: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
                let s: f64 = clipped.iter().sum();
                if (s - 1.0).abs() < 1e-9 {
                    return ProbDist::new(self.m.n, clipped.iter().map(|v| v / s).collect());
                }
            }
        }
        let x = self.fista(&p);
        ProbDist::new(self.m.n, x.iter().copied().collect())
    }

    /// Accelerated projected gradient with adaptive restart.
    fn fista(&self, p: &nalgebra::DVector<f64>) -> nalgebra::DVector<f64> {
        let mtp = self.m.m.transpose() * p;
        let step = 1.0 / self.lipschitz;
        let mut x = project_simplex(p.as_slice());
        let mut y = x.clone();
        let mut t = 1.0f64;
        for _ in 0..MAX_ITER {
            let grad = &self.gram * &y - &mtp;
            let next = project_simplex((&y - grad.scale(step)).as_slice());
            let delta = &next - &x;
            let moved = delta.amax();
            // Restart momentum when it points uphill.
            if (&y - &next).dot(&delta) > 0.0 {
                t = 1.0;
                y = next.clone();
            } else {
                let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
                y = &next + delta.scale((t - 1.0) / t_next);
                t = t_next;
            }
            x = next;
            if moved < STEP_TOL {
                break;
            }
        }
        x
    }
}

pub fn mitigate(counts: &Counts, m: &ConfusionMatrix) -> Result<ProbDist> {
    Mitigator::new(m.clone())?.mitigate(counts)
}

/// Euclidean projection onto `{x ≥ 0, Σx = 1}`.
fn project_simplex(v: &[f64]) -> nalgebra::DVector<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    nalgebra::DVector::from_iterator(v.len(), v.iter().map(|x| (x - theta).max(0.0)))
}
