use super::{pairs, QuboModel};
use crate::dataset::{Dataset, FeatureVector, Record};
use crate::surrogate::{fm_to_qubo, fm_train, TrainConfig};
use crate::{Error, Result};

fn check_cardinality(n: usize, n0: usize) -> Result<()> {
    if n0 > n {
        return Err(Error::CardinalityOutOfRange { n0, n });
    }
    Ok(())
}

/// Exact quadratic expansion of `(n_D - n0)^2` where `n_D = n - Σ x_i`
/// counts zero bits.
pub fn penalty_qubo_exact(n: usize, n0: usize) -> Result<QuboModel> {
    check_cardinality(n, n0)?;
    let m = (n - n0) as f64;
    let diag = vec![1.0 - 2.0 * m; n];
    let upper = vec![2.0; n * n.saturating_sub(1) / 2];
    let mut q = QuboModel::new(n, diag, upper, m * m)?;
    q.provenance.n0 = Some(n0);
    q.provenance.source = Some("penalty:exact".into());
    Ok(q)
}

/// Penalty learned by a factorization machine from all `2^n` vectors
/// labelled with `(n_D - n0)^2`.
pub fn penalty_qubo_fm(n: usize, n0: usize, cfg: &TrainConfig) -> Result<QuboModel> {
    check_cardinality(n, n0)?;
    if n > crate::dataset::MAX_SYNTH_SITES {
        return Err(Error::TooLarge {
            what: "site count",
            n,
            max: crate::dataset::MAX_SYNTH_SITES,
        });
    }
    let records = (0..1usize << n)
        .map(|idx| {
            let x = FeatureVector::from_index(idx, n);
            let d = x.count_zeros() as f64 - n0 as f64;
            Record { x, y: d * d }
        })
        .collect();
    let ds = Dataset::new(n, records)?;
    let (model, _) = fm_train(&ds, cfg)?;
    let mut q = fm_to_qubo(&model);
    q.provenance.n0 = Some(n0);
    q.provenance.source = Some("penalty:fm".into());
    Ok(q)
}

/// Coefficient-wise `unconstrained + beta0 * penalty`. The unconstrained
/// model is expected to have been passed through
/// [`scale_qubo`](super::scale_qubo).
pub fn combine(unconstrained: &QuboModel, penalty: &QuboModel, beta0: f64) -> Result<QuboModel> {
    let n = unconstrained.n();
    if penalty.n() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: penalty.n(),
        });
    }
    if !beta0.is_finite() || beta0 < 0.0 {
        return Err(Error::InvalidConfig(format!("beta0 = {beta0}")));
    }
    let diag = unconstrained
        .diag()
        .iter()
        .zip(penalty.diag())
        .map(|(u, p)| u + beta0 * p)
        .collect();
    let upper = pairs(n)
        .map(|(i, j)| unconstrained.coupling(i, j) + beta0 * penalty.coupling(i, j))
        .collect();
    let mut q = QuboModel::new(n, diag, upper, unconstrained.offset() + beta0 * penalty.offset())?;
    q.provenance = unconstrained.provenance.clone();
    q.provenance.beta0 = Some(beta0);
    q.provenance.n0 = penalty.provenance.n0;
    Ok(q)
}
