use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};

use deutero::FeatureVector;

use super::{Solution, RESULT};
use crate::artifact::{load, write_atomic, Artifact};
use crate::config::{Method, ModeKind, RunConfig};
use crate::ReportArgs;

struct Summary {
    name: String,
    method: String,
    energy: f64,
    /// `None` probability for exact ground states.
    top: Vec<(FeatureVector, Option<f64>)>,
}

fn describe(cfg: &RunConfig, sol: &Solution) -> String {
    let mut s = match (cfg.method, sol) {
        (_, Solution::Exact(_)) | (Method::Exact, _) => return "exact".into(),
        (Method::Vqe, _) => format!("vqe depth={}", cfg.depth),
        (Method::Qaoa, _) => format!("qaoa p={}", cfg.p),
    };
    if cfg.binary_search {
        s += &format!(" +search δ={}", cfg.delta);
    }
    if cfg.mode == ModeKind::Shots {
        s += &format!(" shots={}", cfg.shots);
        if cfg.noise.is_some() {
            s += " noisy";
        }
        if cfg.mitigate {
            s += " mitigated";
        }
    }
    s
}

fn summarize(path: &Path, doc: &Artifact<Solution>, top: usize) -> Result<Summary> {
    let (energy, top) = match &doc.data {
        Solution::Exact(sol) => (
            sol.ground_energy,
            sol.ground_bitstrings.iter().map(|x| (x.clone(), None)).collect(),
        ),
        Solution::Variational(r) => (
            r.energy,
            r.top_k
                .iter()
                .take(top)
                .map(|e| (e.bitstring.clone(), Some(e.probability)))
                .collect(),
        ),
        Solution::BinarySearch(r) => {
            let last = r.rounds.last().map(|round| round.top_probability);
            (r.energy, vec![(r.bitstring.clone(), last)])
        }
    };
    if top.is_empty() {
        bail!("{} has no top-k entries", path.display());
    }
    Ok(Summary {
        name: path
            .file_name()
            .map_or_else(|| path.display().to_string(), |f| f.to_string_lossy().into()),
        method: describe(&doc.config, &doc.data),
        energy,
        top,
    })
}

fn prob(p: Option<f64>) -> String {
    p.map_or("-".into(), |v| format!("{v:.4}"))
}

fn print_single(s: &Summary, seed: u64) {
    println!("{}: {}, seed {seed}", s.name, s.method);
    println!("energy {:.6}", s.energy);
    let w = s.top[0].0.len().max(9);
    println!("rank  {:<w$}  {:<w$}  probability", "bitstring", "H/D");
    for (i, (x, p)) in s.top.iter().enumerate() {
        println!("{:>4}  {:<w$}  {:<w$}  {}", i + 1, x.to_string(), x.to_hd(), prob(*p));
    }
}

fn print_side_by_side(all: &[Summary]) {
    let rows: Vec<(&str, Vec<String>)> = vec![
        ("", all.iter().map(|s| s.name.clone()).collect()),
        ("method", all.iter().map(|s| s.method.clone()).collect()),
        ("energy", all.iter().map(|s| format!("{:.6}", s.energy)).collect()),
        ("top bitstring", all.iter().map(|s| s.top[0].0.to_string()).collect()),
        ("H/D", all.iter().map(|s| s.top[0].0.to_hd()).collect()),
        ("probability", all.iter().map(|s| prob(s.top[0].1)).collect()),
    ];
    let widths: Vec<usize> = (0..all.len())
        .map(|c| rows.iter().map(|(_, v)| v[c].chars().count()).max().unwrap_or(0))
        .collect();
    for (label, cells) in &rows {
        let mut line = format!("{label:<13}");
        for (cell, w) in cells.iter().zip(&widths) {
            let pad = w - cell.chars().count();
            line += &format!("  {cell}{}", " ".repeat(pad));
        }
        println!("{}", line.trim_end());
    }
}

fn csv_path(dir: &Path, result: &Path, suffix: &str) -> PathBuf {
    let stem = result
        .file_stem()
        .map_or_else(|| "result".into(), |s| s.to_string_lossy().into_owned());
    dir.join(format!("{stem}_{suffix}.csv"))
}

fn write_csvs(dir: &Path, result: &Path, sol: &Solution) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut emit = |suffix: &str, body: &dyn Fn(&mut dyn Write) -> deutero::Result<()>| -> Result<()> {
        let path = csv_path(dir, result, suffix);
        write_atomic(&path, |w| Ok(body(w)?))?;
        written.push(path);
        Ok(())
    };
    match sol {
        Solution::Exact(sol) => {
            let share = 1.0 / sol.ground_bitstrings.len() as f64;
            emit("distribution", &|w| {
                writeln!(w, "bitstring,probability")?;
                for x in &sol.ground_bitstrings {
                    writeln!(w, "{x},{share}")?;
                }
                Ok(())
            })?;
        }
        Solution::Variational(r) => {
            emit("trace", &|w| r.write_trace_csv(w))?;
            emit("distribution", &|w| r.final_distribution.write_csv(w))?;
        }
        Solution::BinarySearch(r) => {
            emit("trace", &|w| {
                writeln!(w, "iteration,energy")?;
                for (i, round) in r.rounds.iter().enumerate() {
                    writeln!(w, "{},{}", i + 1, round.energy)?;
                }
                Ok(())
            })?;
            emit("marginals", &|w| r.write_marginals_csv(w))?;
        }
    }
    Ok(written)
}

pub fn report(args: &ReportArgs) -> Result<()> {
    let mut summaries = Vec::new();
    for path in &args.results {
        let doc = load::<Solution>(path, RESULT)?;
        summaries.push(summarize(path, &doc, args.top)?);
        let dir = match (&args.out_dir, path.parent()) {
            (Some(d), _) => d.clone(),
            (None, Some(p)) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        std::fs::create_dir_all(&dir)?;
        for written in write_csvs(&dir, path, &doc.data)? {
            eprintln!("wrote {}", written.display());
        }
        if args.results.len() == 1 {
            print_single(&summaries[0], doc.config.seed);
        }
    }
    if summaries.len() > 1 {
        print_side_by_side(&summaries);
    }
    Ok(())
}
