//! QUBO and Ising models: scaling, cardinality penalties, conversion and
//! exhaustive solution.

mod ising;
mod penalty;
mod qubo;
mod solve;

pub use ising::{qubo_to_ising, IsingModel};
pub use penalty::{combine, penalty_qubo_exact, penalty_qubo_fm};
pub use qubo::{scale_qubo, QuboModel};
pub use solve::{exact_solve, exact_solve_with, spectrum, ExactSolution, Level, Spectrum, MAX_EXACT_SITES};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Where a model came from. Carried through every transformation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Accumulated divisor applied by [`scale_qubo`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

/// Position of the pair `(i, j)`, `i < j`, in row-major upper-triangular storage.
#[inline]
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// All pairs `(i, j)` with `i < j < n`, in storage order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

pub(crate) fn pair_map(n: usize, values: &[f64]) -> BTreeMap<String, f64> {
    pairs(n)
        .zip(values)
        .map(|((i, j), &v)| (format!("{i},{j}"), v))
        .collect()
}

pub(crate) fn pair_vec(n: usize, map: &BTreeMap<String, f64>) -> Result<Vec<f64>, String> {
    let mut out = vec![0.0; n * n.saturating_sub(1) / 2];
    for (key, &v) in map {
        let (a, b) = key.split_once(',').ok_or_else(|| format!("bad pair key `{key}`"))?;
        let i: usize = a.trim().parse().map_err(|_| format!("bad pair key `{key}`"))?;
        let j: usize = b.trim().parse().map_err(|_| format!("bad pair key `{key}`"))?;
        if !(i < j && j < n) {
            return Err(format!("pair key `{key}` must satisfy i < j < {n}"));
        }
        out[pair_index(n, i, j)] = v;
    }
    Ok(out)
}
