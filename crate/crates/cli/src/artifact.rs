use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

/// File envelope: the payload plus the configuration that produced it.
#[derive(Debug, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub kind: String,
    pub config: RunConfig,
    pub data: T,
}

/// Write via a sibling temp file and rename, so a failed run never leaves
/// a partial file behind.
pub fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    let mut out = BufWriter::new(tmp);
    body(&mut out)?;
    let tmp = out.into_inner().map_err(|e| e.into_error())?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn save<T: Serialize>(path: &Path, kind: &str, config: &RunConfig, data: &T) -> Result<()> {
    let doc = Artifact {
        kind: kind.to_string(),
        config: config.clone(),
        data,
    };
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, &doc)?;
        writeln!(w)?;
        Ok(())
    })
}

pub fn load<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<Artifact<T>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc: Artifact<T> = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    anyhow::ensure!(
        doc.kind == kind,
        "{} holds a {} artifact, expected {kind}",
        path.display(),
        doc.kind
    );
    Ok(doc)
}
