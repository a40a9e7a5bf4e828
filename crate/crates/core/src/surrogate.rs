//! Second-order factorization machine trained by plain SGD, and its exact
//! export to a QUBO.
//!
//! For binary inputs the model
//!
//! ```text
//! y(x) = bias + Σ_i w_i x_i + Σ_{i<j} <v_i, v_j> x_i x_j
//! ```
//!
//! is already a QUBO: `Q_ii = w_i`, `Q_ij = <v_i, v_j>`, `offset = bias`.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{max_stage, r_squared, select_training_set, Dataset, FeatureVector};
use crate::hamiltonian::{pairs, QuboModel};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Factor dimension.
    pub k: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    /// Standard deviation of the Gaussian initialization of `V`.
    pub init_scale: f64,
    pub seed: u64,
    /// Fit on `(y - mean) / std` and map the coefficients back afterwards.
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            k: 8,
            epochs: 2000,
            learning_rate: 0.01,
            l2: 1e-6,
            init_scale: 0.01,
            seed: 0,
            standardize: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidConfig(what));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate = {}", self.learning_rate));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad(format!("l2 = {}", self.l2));
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return bad(format!("init_scale = {}", self.init_scale));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FmModel {
    pub n: usize,
    pub k: usize,
    pub w: Vec<f64>,
    /// `n x k`, row-major: row `i` is the factor vector of site `i`.
    #[serde(rename = "V")]
    pub v: Vec<f64>,
    #[serde(default)]
    pub bias: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_config: Option<TrainConfig>,
}

impl FmModel {
    pub fn new(n: usize, k: usize, w: Vec<f64>, v: Vec<f64>, bias: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if w.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: w.len(),
            });
        }
        if v.len() != n * k {
            return Err(Error::LengthMismatch {
                expected: n * k,
                found: v.len(),
            });
        }
        if !(bias.is_finite() && w.iter().chain(&v).all(|x| x.is_finite())) {
            return Err(Error::InvalidConfig("FM parameters must be finite".into()));
        }
        Ok(FmModel {
            n,
            k,
            w,
            v,
            bias,
            train_config: None,
        })
    }

    pub fn factor(&self, i: usize) -> &[f64] {
        &self.v[i * self.k..(i + 1) * self.k]
    }

    /// `<v_i, v_j>`.
    pub fn interaction(&self, i: usize, j: usize) -> f64 {
        self.factor(i).iter().zip(self.factor(j)).map(|(a, b)| a * b).sum()
    }
}

pub fn fm_predict(m: &FmModel, x: &FeatureVector) -> Result<f64> {
    if x.len() != m.n {
        return Err(Error::LengthMismatch {
            expected: m.n,
            found: x.len(),
        });
    }
    let active: Vec<usize> = (0..m.n).filter(|&i| x.bits()[i] == 1).collect();
    let mut y = m.bias + active.iter().map(|&i| m.w[i]).sum::<f64>();
    for (a, &i) in active.iter().enumerate() {
        for &j in &active[a + 1..] {
            y += m.interaction(i, j);
        }
    }
    Ok(y)
}

/// Coefficient identification `Q_ii = w_i`, `Q_ij = <v_i, v_j>`, `offset = bias`.
pub fn fm_to_qubo(m: &FmModel) -> QuboModel {
    let upper = pairs(m.n).map(|(i, j)| m.interaction(i, j)).collect();
    let mut q = QuboModel::new(m.n, m.w.clone(), upper, m.bias).expect("finite FM parameters");
    q.provenance.source = Some("fm".into());
    q
}

/// Fit by SGD on squared error over seeded shuffles of the records.
///
/// Returns the model and the per-epoch mean squared error (in the units of
/// the targets, measured during the pass).
pub fn fm_train(ds: &Dataset, cfg: &TrainConfig) -> Result<(FmModel, Vec<f64>)> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::NoRecords);
    }
    let n = ds.n();
    let k = cfg.k;
    let targets = ds.targets();
    let (mean, std) = if cfg.standardize {
        let len = targets.len() as f64;
        let mean = targets.iter().sum::<f64>() / len;
        let var = targets.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / len;
        (mean, if var > 0.0 { var.sqrt() } else { 1.0 })
    } else {
        (0.0, 1.0)
    };
    let scaled: Vec<f64> = targets.iter().map(|y| (y - mean) / std).collect();
    let active: Vec<Vec<usize>> = ds
        .records()
        .iter()
        .map(|r| (0..n).filter(|&i| r.x.bits()[i] == 1).collect())
        .collect();

    let mut rng = rng_from_seed(cfg.seed);
    let init = Normal::new(0.0, cfg.init_scale).expect("validated");
    let mut bias = 0.0;
    let mut w = vec![0.0; n];
    let mut v: Vec<f64> = (0..n * k).map(|_| init.sample(&mut rng)).collect();

    let lr = cfg.learning_rate;
    let l2 = cfg.l2;
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut sums = vec![0.0; k];
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &r in &order {
            let act = &active[r];
            // Pairwise term via Σ_f [(Σ_i v_if)^2 - Σ_i v_if^2] / 2 over active i.
            let mut pred = bias;
            for f in 0..k {
                let (mut s, mut sq) = (0.0, 0.0);
                for &i in act {
                    let vif = v[i * k + f];
                    s += vif;
                    sq += vif * vif;
                }
                sums[f] = s;
                pred += 0.5 * (s * s - sq);
            }
            for &i in act {
                pred += w[i];
            }
            let err = pred - scaled[r];
            total += err * err;

            bias -= lr * err;
            for &i in act {
                w[i] -= lr * (err + l2 * w[i]);
                for f in 0..k {
                    let vif = v[i * k + f];
                    v[i * k + f] -= lr * (err * (sums[f] - vif) + l2 * vif);
                }
            }
        }
        let loss = total / ds.len() as f64 * std * std;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        trace.push(loss);
    }

    let root = std.sqrt();
    let mut model = FmModel::new(
        n,
        k,
        w.iter().map(|x| x * std).collect(),
        v.iter().map(|x| x * root).collect(),
        mean + bias * std,
    )
    .map_err(|_| Error::Diverged {
        epoch: cfg.epochs,
        loss: f64::NAN,
    })?;
    model.train_config = Some(cfg.clone());
    Ok((model, trace))
}

/// Test-set fit of one training stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: usize,
    pub train_size: usize,
    pub test_size: usize,
    /// `None` when the held-out set is empty or constant.
    pub r2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StagedFit {
    pub model: FmModel,
    pub stages: Vec<StageReport>,
    pub reached: bool,
}

/// Grow the structured training set stage by stage until the held-out R²
/// reaches `threshold` or the stages run out. The last model is returned
/// either way.
pub fn train_staged(ds: &Dataset, threshold: f64, cfg: &TrainConfig, split_seed: u64) -> Result<StagedFit> {
    let mut stages = Vec::new();
    let mut stage = 0;
    loop {
        let (train, test) = select_training_set(ds, stage, split_seed)?;
        let (model, _) = fm_train(&train, cfg)?;
        let r2 = if test.is_empty() {
            None
        } else {
            let pred = test
                .records()
                .iter()
                .map(|r| fm_predict(&model, &r.x))
                .collect::<Result<Vec<_>>>()?;
            r_squared(&pred, &test.targets()).ok()
        };
        stages.push(StageReport {
            stage,
            train_size: train.len(),
            test_size: test.len(),
            r2,
        });
        let reached = r2.is_some_and(|v| v >= threshold) || (test.is_empty() && threshold <= 0.0);
        if reached || stage == max_stage(ds.n()) {
            return Ok(StagedFit { model, stages, reached });
        }
        stage += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth, synth_dataset, Record};

    fn toy() -> FmModel {
        FmModel::new(2, 1, vec![0.5, -1.0], vec![2.0, 3.0], 0.0).unwrap()
    }

    fn fv(s: &str) -> FeatureVector {
        s.parse().unwrap()
    }

    #[test]
    fn predict_examples() {
        let m = toy();
        assert_eq!(fm_predict(&m, &fv("00")).unwrap(), 0.0);
        assert_eq!(fm_predict(&m, &fv("11")).unwrap(), 5.5);
        assert_eq!(fm_predict(&m, &fv("10")).unwrap(), 0.5);
        assert!(fm_predict(&m, &fv("1")).is_err());
    }

    #[test]
    fn qubo_export_examples() {
        let q = fm_to_qubo(&toy());
        assert_eq!(q.diag(), &[0.5, -1.0]);
        assert_eq!(q.upper(), &[6.0]);
        assert_eq!(q.offset(), 0.0);

        let zero = FmModel::new(3, 2, vec![0.0; 3], vec![0.0; 6], 0.0).unwrap();
        assert_eq!(fm_to_qubo(&zero).max_abs_coefficient(), 0.0);
    }

    #[test]
    fn qubo_export_matches_prediction_exhaustively() {
        let mut rng = crate::rng::rng_from_seed(5);
        let normal = Normal::new(0.0, 1.0).unwrap();
        for n in 1..=10 {
            let k = 3;
            let w = (0..n).map(|_| normal.sample(&mut rng)).collect();
            let v = (0..n * k).map(|_| normal.sample(&mut rng)).collect();
            let m = FmModel::new(n, k, w, v, normal.sample(&mut rng)).unwrap();
            let q = fm_to_qubo(&m);
            for idx in 0..1usize << n {
                let x = FeatureVector::from_index(idx, n);
                let diff = q.eval(&x).unwrap() - fm_predict(&m, &x).unwrap();
                assert!(diff.abs() < 1e-12, "n={n} idx={idx} diff={diff}");
            }
        }
    }

    #[test]
    fn learns_identity_on_one_site() {
        let ds = Dataset::new(1, vec![Record { x: fv("0"), y: 0.0 }, Record { x: fv("1"), y: 1.0 }]).unwrap();
        let (m, trace) = fm_train(&ds, &TrainConfig::default()).unwrap();
        assert_eq!(trace.len(), 2000);
        assert!((fm_predict(&m, &fv("0")).unwrap() - 0.0).abs() < 1e-3);
        assert!((fm_predict(&m, &fv("1")).unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_configs() {
        let ds = synth_dataset(&synth::random_qubo(3, 0), 0.0, 0).unwrap();
        for cfg in [
            TrainConfig {
                epochs: 0,
                ..Default::default()
            },
            TrainConfig {
                k: 0,
                ..Default::default()
            },
            TrainConfig {
                learning_rate: 0.0,
                ..Default::default()
            },
            TrainConfig {
                init_scale: -1.0,
                ..Default::default()
            },
        ] {
            assert!(matches!(fm_train(&ds, &cfg), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn divergence_is_reported() {
        let ds = synth_dataset(&synth::random_qubo(6, 0), 0.0, 0).unwrap();
        let cfg = TrainConfig {
            learning_rate: 50.0,
            epochs: 200,
            ..Default::default()
        };
        assert!(matches!(fm_train(&ds, &cfg), Err(Error::Diverged { .. })));
    }

    #[test]
    fn training_is_seed_deterministic() {
        let ds = synth_dataset(&synth::random_qubo(6, 4), 0.0, 0).unwrap();
        let cfg = TrainConfig {
            epochs: 50,
            seed: 9,
            ..Default::default()
        };
        let (a, ta) = fm_train(&ds, &cfg).unwrap();
        let (b, tb) = fm_train(&ds, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            ta.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            tb.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn json_fields() {
        let text = serde_json::to_string(&toy()).unwrap();
        for key in ["\"n\"", "\"k\"", "\"w\"", "\"V\"", "\"bias\""] {
            assert!(text.contains(key), "{text}");
        }
        assert_eq!(serde_json::from_str::<FmModel>(&text).unwrap(), toy());
    }
}
