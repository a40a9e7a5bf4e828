use serde::{Deserialize, Serialize};

use super::IsingModel;
use crate::dataset::FeatureVector;
use crate::par::Execution;
use crate::{Error, Result};

pub const MAX_EXACT_SITES: usize = 24;

/// Energies closer than this (relative to the energy scale) form one level.
const LEVEL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactSolution {
    pub ground_energy: f64,
    /// All attaining bitstrings, lexicographically ascending.
    pub ground_bitstrings: Vec<FeatureVector>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub energy: f64,
    pub bitstrings: Vec<FeatureVector>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub levels: Vec<Level>,
    /// `E1 - E0`; absent when every state is degenerate.
    pub gap: Option<f64>,
}

fn check_size(h: &IsingModel) -> Result<()> {
    if h.n() > MAX_EXACT_SITES {
        return Err(Error::TooLarge {
            what: "spin count",
            n: h.n(),
            max: MAX_EXACT_SITES,
        });
    }
    Ok(())
}

fn tolerance(energies: &[f64]) -> f64 {
    let scale = energies.iter().fold(1.0f64, |m, e| m.max(e.abs()));
    LEVEL_TOL * scale
}

/// Minimum energy and every bitstring attaining it, by full enumeration.
pub fn exact_solve(h: &IsingModel) -> Result<ExactSolution> {
    exact_solve_with(h, Execution::default())
}

pub fn exact_solve_with(h: &IsingModel, exec: Execution) -> Result<ExactSolution> {
    check_size(h)?;
    let energies = h.energies_with(exec);
    let tol = tolerance(&energies);
    let ground = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let ground_bitstrings = energies
        .iter()
        .enumerate()
        .filter(|(_, &e)| e - ground <= tol)
        .map(|(idx, _)| FeatureVector::from_index(idx, h.n()))
        .collect();
    Ok(ExactSolution {
        ground_energy: ground,
        ground_bitstrings,
    })
}

/// Distinct levels with `E - E0 <= window`, ascending, with degeneracy lists.
pub fn spectrum(h: &IsingModel, window: f64) -> Result<Spectrum> {
    check_size(h)?;
    if window.is_nan() || window <= 0.0 {
        return Err(Error::InvalidConfig(format!("window = {window}")));
    }
    let energies = h.energies();
    let tol = tolerance(&energies);
    let ground = energies.iter().copied().fold(f64::INFINITY, f64::min);

    let mut order: Vec<usize> = (0..energies.len()).collect();
    order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]).then(a.cmp(&b)));

    let mut levels: Vec<Level> = Vec::new();
    let mut gap = None;
    let mut start = 0;
    while start < order.len() {
        let e = energies[order[start]];
        let mut end = start;
        while end < order.len() && energies[order[end]] - e <= tol {
            end += 1;
        }
        if !levels.is_empty() {
            gap.get_or_insert(e - ground);
            if e - ground > window + tol {
                break;
            }
        }
        let mut idx: Vec<usize> = order[start..end].to_vec();
        idx.sort_unstable();
        levels.push(Level {
            energy: e,
            bitstrings: idx.into_iter().map(|i| FeatureVector::from_index(i, h.n())).collect(),
        });
        start = end;
    }
    Ok(Spectrum { levels, gap })
}
