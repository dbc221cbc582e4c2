//! `billiards`: command-line front end for the convex billiards library.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Environment variable that caps `--threads`.
pub const THREAD_CAP_VAR: &str = "BILLIARDS_MAX_THREADS";

#[derive(Debug, Parser)]
#[command(name = "billiards", version, about = "Billiards in smooth strictly convex bodies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Iterate the billiard map and export the orbit with its tangent data.
    Trace(TraceArgs),
    /// Search and classify periodic orbits over a period range.
    Orbits(OrbitsArgs),
    /// Scan a periodic orbit for F-admissible windows and optionally realize a target monodromy.
    Franks(FranksArgs),
    /// Split a coincident heteroclinic connection with a curvature bump.
    Donnay(DonnayArgs),
    /// Periodic-orbit growth table and Lyapunov exponent.
    Entropy(EntropyArgs),
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Body spec (JSON).
    #[arg(long)]
    pub body: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Seeds every random choice.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; capped by the BILLIARDS_MAX_THREADS environment variable.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Numerical tolerance of the command's main check.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of bounces.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Starting phase point (JSON `{chart, coords, v}`); drawn from `--seed` when absent.
    #[arg(long)]
    pub start: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OrbitsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Period `m` or inclusive range `a..b`.
    #[arg(long, default_value = "2")]
    pub period: String,
    /// Seeds per rotation class (planar) or per period (spatial).
    #[arg(long, default_value_t = 8)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct FranksArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 4)]
    pub period: usize,
    /// Seeds for the periodic-orbit search.
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    /// Target monodromy (JSON list of rows).
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Radius of the admissible ball around the current monodromy.
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct DonnayArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 2)]
    pub period: usize,
    /// Bump strength; half the admissible bound when absent.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Growth depth of the manifold curves, in periods.
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Also rerun the global search on the perturbed body.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Largest period in the growth table.
    #[arg(long, default_value_t = 12)]
    pub n: usize,
    /// Seeds per rotation class.
    #[arg(long, default_value_t = 8)]
    pub seeds: usize,
    /// Bounces of the Lyapunov run.
    #[arg(long, default_value_t = 20_000)]
    pub steps: usize,
    /// Heteroclinic datum written by `donnay`; the Lyapunov run then starts next to it.
    #[arg(long)]
    pub datum: Option<PathBuf>,
}

/// Failure classes, mapped to the exit codes 1, 2 and 3.
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Partial(String),
    Nothing(String),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.into())
    }
}

fn thread_count(requested: usize) -> usize {
    let cap = std::env::var(THREAD_CAP_VAR).ok().and_then(|v| v.parse::<usize>().ok()).unwrap_or(usize::MAX);
    requested.clamp(1, cap.max(1))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let common = match &cli.command {
        Command::Trace(a) => &a.common,
        Command::Orbits(a) => &a.common,
        Command::Franks(a) => &a.common,
        Command::Donnay(a) => &a.common,
        Command::Entropy(a) => &a.common,
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(thread_count(common.threads)).build()?;
    pool.install(|| match &cli.command {
        Command::Trace(a) => commands::trace(a),
        Command::Orbits(a) => commands::orbits(a),
        Command::Franks(a) => commands::franks(a),
        Command::Donnay(a) => commands::donnay(a),
        Command::Entropy(a) => commands::entropy(a),
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Partial(msg)) => {
            eprintln!("partial: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Nothing(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(3)
        }
    }
}
