use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Every knob of the pipeline. Resolved as defaults < config file < flags,
/// and copied verbatim into every artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub dataset: PathBuf,
    pub model: PathBuf,
    pub hamiltonian: PathBuf,
    pub result: PathBuf,

    pub k: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub threshold: f64,

    pub penalty: Penalty,
    pub beta0: f64,

    pub method: Method,
    pub depth: usize,
    pub p: usize,
    pub restarts: usize,
    /// Optimizer budget; the binary search uses its own loose default when unset.
    pub max_iter: Option<usize>,
    pub mode: ModeKind,
    pub shots: u64,
    pub noise: Option<PathBuf>,
    pub mitigate: bool,
    pub binary_search: bool,
    pub delta: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            dataset: "dataset.csv".into(),
            model: "model.json".into(),
            hamiltonian: "hamiltonian.json".into(),
            result: "result.json".into(),
            k: 8,
            epochs: 2000,
            learning_rate: 0.01,
            threshold: 0.95,
            penalty: Penalty::None,
            beta0: 10.0,
            method: Method::Exact,
            depth: 1,
            p: 1,
            restarts: 5,
            max_iter: None,
            mode: ModeKind::Exact,
            shots: deutero::qsim::DEFAULT_SHOTS,
            noise: None,
            mitigate: false,
            binary_search: false,
            delta: deutero::binsearch::DEFAULT_DELTA,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Vqe,
    Qaoa,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Exact,
    Shots,
}

/// `none` or `n0=K`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Penalty {
    #[default]
    None,
    Cardinality(usize),
}

impl FromStr for Penalty {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s == "none" {
            return Ok(Penalty::None);
        }
        match s.strip_prefix("n0=").map(str::parse) {
            Some(Ok(n0)) => Ok(Penalty::Cardinality(n0)),
            _ => Err(format!("penalty must be `none` or `n0=K`, got `{s}`")),
        }
    }
}

impl TryFrom<String> for Penalty {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Penalty> for String {
    fn from(p: Penalty) -> String {
        p.to_string()
    }
}

impl fmt::Display for Penalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Penalty::None => f.write_str("none"),
            Penalty::Cardinality(n0) => write!(f, "n0={n0}"),
        }
    }
}

/// Pending overrides, keyed by `RunConfig` field name.
#[derive(Default)]
pub struct Overrides(Map<String, Value>);

impl Overrides {
    pub fn set<T: Serialize>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.0.insert(
                key.to_string(),
                serde_json::to_value(v).expect("plain values serialize"),
            );
        }
    }

    pub fn flag(&mut self, key: &str, on: bool) {
        if on {
            self.0.insert(key.to_string(), Value::Bool(true));
        }
    }
}

/// Parse `key = value` lines; `#` starts a comment. Values that read as
/// JSON scalars (numbers, booleans) are taken as such, anything else is a
/// string.
pub fn parse_config(text: &str) -> Result<Overrides> {
    let mut out = Overrides::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {}: expected `key = value`, got `{line}`", i + 1);
        };
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let parsed = match serde_json::from_str::<Value>(value) {
            Ok(v @ (Value::Number(_) | Value::Bool(_))) => v,
            _ => Value::String(value.to_string()),
        };
        out.0.insert(key, parsed);
    }
    Ok(out)
}

pub fn resolve(config_file: Option<&Path>, flags: Overrides) -> Result<RunConfig> {
    let mut merged = match serde_json::to_value(RunConfig::default())? {
        Value::Object(m) => m,
        _ => unreachable!("RunConfig serializes to an object"),
    };
    if let Some(path) = config_file {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let file = parse_config(&text).with_context(|| format!("in {}", path.display()))?;
        merged.extend(file.0);
    }
    merged.extend(flags.0);
    let cfg: RunConfig = serde_json::from_value(Value::Object(merged)).context("invalid configuration")?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if !(self.threshold.is_finite() && self.threshold <= 1.0) {
            bail!("threshold must be a finite value <= 1, got {}", self.threshold);
        }
        if !(self.beta0.is_finite() && self.beta0 >= 0.0) {
            bail!("beta0 must be finite and >= 0, got {}", self.beta0);
        }
        if self.depth == 0 || self.p == 0 || self.restarts == 0 {
            bail!("depth, p and restarts must be at least 1");
        }
        if self.shots == 0 {
            bail!("shots must be at least 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let file = "# pipeline\nseed = 7\npenalty = n0=3\nmethod = qaoa\nmitigate = true\np = 2 # layers\n";
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, file).unwrap();
        let mut flags = Overrides::default();
        flags.set("p", Some(3usize));
        let cfg = resolve(Some(&path), flags).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.penalty, Penalty::Cardinality(3));
        assert_eq!(cfg.method, Method::Qaoa);
        assert!(cfg.mitigate);
        assert_eq!(cfg.p, 3);
        assert_eq!(cfg.k, 8);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.cfg");
        std::fs::write(&path, "colour = blue\n").unwrap();
        assert!(resolve(Some(&path), Overrides::default()).is_err());
    }

    #[test]
    fn penalty_round_trips() {
        for s in ["none", "n0=0", "n0=6"] {
            assert_eq!(s.parse::<Penalty>().unwrap().to_string(), s);
        }
        assert!("n0=x".parse::<Penalty>().is_err());
        assert!("3".parse::<Penalty>().is_err());
    }
}
