//! `deutero`: train a surrogate, build an Ising Hamiltonian, solve it and
//! report, with JSON/CSV files handing off between the stages.

mod artifact;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Method, ModeKind, Overrides, Penalty};

#[derive(Parser)]
#[command(
    name = "deutero",
    version,
    about = "Surrogate-driven search for optimal H/D labelings"
)]
struct Cli {
    /// `key = value` file; flags given on the command line win over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; every stage derives its own streams from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the factorization-machine surrogate stage by stage.
    Train(TrainArgs),
    /// Compile a trained model into an Ising Hamiltonian.
    Build(BuildArgs),
    /// Minimize a Hamiltonian exactly or variationally.
    Solve(SolveArgs),
    /// Print result tables and write CSV plot data.
    Report(ReportArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// `bitstring,value` CSV.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Output model file.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Held-out R² at which training stops adding records.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// Output Hamiltonian file.
    #[arg(long)]
    hamiltonian: Option<PathBuf>,
    /// `none` or `n0=K` (exactly K deuterium sites).
    #[arg(long)]
    penalty: Option<Penalty>,
    #[arg(long)]
    beta0: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    hamiltonian: Option<PathBuf>,
    /// Output result file.
    #[arg(long)]
    result: Option<PathBuf>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Ry ansatz depth.
    #[arg(long)]
    depth: Option<usize>,
    /// QAOA layers.
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeKind>,
    #[arg(long)]
    shots: Option<u64>,
    /// JSON noise model, shots mode only.
    #[arg(long)]
    noise: Option<PathBuf>,
    #[arg(long)]
    mitigate: bool,
    /// Refine by repeatedly fixing confident qubits.
    #[arg(long)]
    binary_search: bool,
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args)]
pub struct ReportArgs {
    /// One result prints a table; several print a side-by-side comparison.
    #[arg(required = true)]
    pub results: Vec<PathBuf>,
    /// Where CSVs go; defaults to next to each result.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut o = Overrides::default();
    o.set("seed", cli.seed);
    match cli.command {
        Command::Train(a) => {
            o.set("dataset", a.dataset);
            o.set("model", a.model);
            o.set("k", a.k);
            o.set("epochs", a.epochs);
            o.set("learning_rate", a.learning_rate);
            o.set("threshold", a.threshold);
            commands::train(&config::resolve(cli.config.as_deref(), o)?)
        }
        Command::Build(a) => {
            o.set("model", a.model);
            o.set("hamiltonian", a.hamiltonian);
            o.set("penalty", a.penalty);
            o.set("beta0", a.beta0);
            commands::build(&config::resolve(cli.config.as_deref(), o)?)
        }
        Command::Solve(a) => {
            o.set("hamiltonian", a.hamiltonian);
            o.set("result", a.result);
            o.set("method", a.method);
            o.set("depth", a.depth);
            o.set("p", a.p);
            o.set("restarts", a.restarts);
            o.set("max_iter", a.max_iter);
            o.set("mode", a.mode);
            o.set("shots", a.shots);
            o.set("noise", a.noise);
            o.flag("mitigate", a.mitigate);
            o.flag("binary_search", a.binary_search);
            o.set("delta", a.delta);
            commands::solve(&config::resolve(cli.config.as_deref(), o)?)
        }
        Command::Report(a) => commands::report(&a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
