//! `maxrep`: exact maximal dimensions, energy checks, the local log-gas and
//! estimates of the limit constant.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use maxrep::Error;

#[derive(Parser, Debug)]
#[command(name = "maxrep", version, about = "Maximal irreducible dimensions of S_N and the local log-gas")]
struct Cli {
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Write the main output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact d_N table by exhaustive enumeration.
    Maxdim(MaxdimArgs),
    /// Residuals of the exact energy identity over partitions of N.
    VerifyVk(VerifyArgs),
    /// Exact or annealed σ_n^ρ with a witness path.
    Sigma(SigmaArgs),
    /// Estimate the limit constant from σ data.
    EstimateD(EstimateArgs),
    /// Build a near-optimal shape of area N.
    Construct(ConstructArgs),
    /// Window decomposition of a partition's energy.
    Decompose(DecomposeArgs),
}

#[derive(Args, Debug)]
pub struct MaxdimArgs {
    #[arg(long)]
    pub n_max: u32,
    /// Also report McKay's bound d_N ≥ √(N!)/N at this N.
    #[arg(long)]
    pub check_mckay: Option<u32>,
    /// Progress file for resuming an interrupted scan.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Heuristic mode: drop shapes wider than 2√N + k·N^(2/3).
    #[arg(long)]
    pub prune: Option<f64>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub n: u32,
    /// Every partition of N.
    #[arg(long, conflicts_with = "samples")]
    pub exhaustive: bool,
    /// This many uniformly random partitions of N.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct SigmaArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: f64,
    #[arg(long, conflicts_with = "heuristic")]
    pub exact: bool,
    #[arg(long, requires = "seed")]
    pub heuristic: bool,
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Cache of σ records; overridden by MAXREP_CACHE.
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[arg(long, default_value_t = 33)]
    pub grid: usize,
    /// Largest exact length per slope.
    #[arg(long, default_value_t = 48)]
    pub n_exact: usize,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Compare with the exact d_N table up to this N.
    #[arg(long)]
    pub compare_n: Option<u32>,
}

#[derive(Args, Debug)]
pub struct ConstructArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub window: u32,
    /// Skip the exact-area correction.
    #[arg(long)]
    pub raw: bool,
    /// Score the shape against this value of the constant.
    #[arg(long)]
    pub d_hat: Option<f64>,
    /// Write the first 1000 parts and the run-length form here.
    #[arg(long)]
    pub dump_parts: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    /// Comma-separated parts, largest first.
    #[arg(long)]
    pub partition: String,
    #[arg(long)]
    pub window: u32,
}

/// 1: bad input, 2: resource limit, 3: internal failure.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Validation(_) | Error::Data(_) | Error::Io(_) | Error::Json(_) => 1,
        Error::ResourceLimit { .. } => 2,
        Error::Invariant(_) | Error::Construction(_) | Error::Convergence { .. } => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot start {t} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let ctx = output::Sink { format: cli.format, out: cli.out };
    let result = match cli.command {
        Command::Maxdim(a) => commands::maxdim(&a, &ctx),
        Command::VerifyVk(a) => commands::verify_vk(&a, &ctx),
        Command::Sigma(a) => commands::sigma(&a, &ctx),
        Command::EstimateD(a) => commands::estimate_d(&a, &ctx),
        Command::Construct(a) => commands::construct(&a, &ctx),
        Command::Decompose(a) => commands::decompose(&a, &ctx),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
