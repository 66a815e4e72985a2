//! `genuscount` command-line front-end.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "genuscount", version, propagate_version = true, about = "Map enumeration, Hermitian matrix partition functions and their genus expansion")]
pub struct Cli {
    /// Worker threads for the parallel parts (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Working precision in decimal digits for finite-N computations.
    #[arg(long, global = true)]
    pub precision: Option<u32>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Enumerate Wick couplings and write the map census.
    Enumerate(EnumerateArgs),
    /// Solve for the equilibrium measure of an external field.
    Equilibrium(EquilibriumArgs),
    /// Tabulate log Z_N and log Ẑ_N.
    Partition(PartitionArgs),
    /// Sample the finite-N, bulk and edge densities.
    Density(DensityArgs),
    /// Check log Ẑ_N against the genus expansion.
    Verify(VerifyArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct Common {
    /// Output file; stdout when absent.
    /// Report file; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Debug)]
pub struct EnumerateArgs {
    /// Valence of every vertex.
    #[arg(long, conflicts_with = "profile", requires = "vertices")]
    pub valence: Option<u32>,
    /// Number of vertices.
    #[arg(long, requires = "valence")]
    pub vertices: Option<u32>,
    /// Mixed profile as valence:count pairs, e.g. "4:2,3:2".
    #[arg(long)]
    pub profile: Option<String>,
    /// Largest number of half-edges to enumerate.
    #[arg(long, default_value_t = genuscount::combinatorics::DEFAULT_CAP)]
    pub cap: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct EquilibriumArgs {
    /// Field such as "t4=0.01" or "t2=0.1,t4=0.02"; "0" is the Gaussian.
    /// External field, as for `equilibrium`.
    #[arg(long, default_value = "0")]
    pub field: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct PartitionArgs {
    /// External field, as for `equilibrium`.
    #[arg(long, default_value = "0")]
    pub field: String,
    /// Comma-separated ascending matrix sizes.
    #[arg(long = "N", value_name = "N-LIST")]
    pub n: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct DensityArgs {
    /// External field, as for `equilibrium`.
    #[arg(long, default_value = "0")]
    pub field: String,
    /// Matrix size.
    #[arg(long = "N")]
    pub n: usize,
    /// Number of grid points.
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// Grid start; defaults to α - 0.5.
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<f64>,
    /// Grid end; defaults to β + 0.5.
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<f64>,
    /// Include the S_1/N correction in the edge model.
    #[arg(long)]
    pub s1: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// External field, as for `equilibrium`.
    #[arg(long, default_value = "0")]
    pub field: String,
    /// Comma-separated ascending matrix sizes.
    #[arg(long = "N", value_name = "N-LIST", default_value = "4,6,8")]
    pub n: String,
    /// t-index for the ∂ log Z / ∂t_ℓ checks.
    #[arg(long, default_value_t = 4)]
    pub ell: usize,
    /// Vertex truncation of the census-built genus series.
    #[arg(short, long, default_value_t = 3)]
    pub m: u32,
    /// Report file; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(d) = cli.precision {
        std::env::set_var(genuscount::finite_n::PRECISION_ENV, d.to_string());
    }
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            if let Some(hint) = f.hint() {
                eprintln!("hint: {hint}");
            }
            ExitCode::from(f.exit_code())
        }
    }
}
