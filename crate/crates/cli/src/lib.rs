//! Command-line front end: exponentials, band selection, block and heat
//! runs, and timing against the dense Padé oracle.
//!
//! Every command prints a [`RunReport`] as JSON on stdout and writes its data
//! to `--out` when given. Complex flags take `re+imj` (`-2+1j`, `4-3j`, `1j`,
//! `0.5`).

pub mod bench;
mod commands;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use toepexp::matrices::io::parse_complex;
use toepexp::C64;

pub use bench::Materialize;
pub use report::{Format, RunReport, Table};

#[derive(Debug, Parser)]
#[command(name = "toepexp", version, about = "Exponentials of tridiagonal Toeplitz matrices")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Data file to write.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Encoding of the data file.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Error tolerance for band selection and adaptive quadrature.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Seed for randomized inputs.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Also write the run report JSON to this path.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
}

fn complex(s: &str) -> Result<C64, String> {
    parse_complex(s).map_err(|e| e.to_string())
}

/// Tridiagonal Toeplitz coefficients `tridiag(a, b, c)` of order `n`.
#[derive(Debug, Clone, Args)]
pub struct TridiagArgs {
    /// Subdiagonal.
    #[arg(short = 'a', value_parser = complex, allow_hyphen_values = true)]
    pub a: C64,
    /// Diagonal.
    #[arg(short = 'b', value_parser = complex, allow_hyphen_values = true)]
    pub b: C64,
    /// Superdiagonal.
    #[arg(short = 'c', value_parser = complex, allow_hyphen_values = true)]
    pub c: C64,
    /// Order.
    #[arg(short = 'n')]
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExpmMode {
    Bessel,
    Exact,
    DenseOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Tridiag,
    Block,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Trajectory,
    Errors,
    Comparison,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    Sine,
    Spike,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Factors {
    Bessel,
    Exact,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// exp(tridiag(a, b, c)).
    Expm {
        #[command(flatten)]
        tri: TridiagArgs,
        #[arg(long, value_enum, default_value_t = ExpmMode::Bessel)]
        mode: ExpmMode,
        /// Half-bandwidth of the written matrix.
        #[arg(long)]
        band: Option<usize>,
        /// Second construction to measure the first against.
        #[arg(long, value_enum)]
        compare: Option<ExpmMode>,
        /// Count entries with negative real part.
        #[arg(long)]
        check_positivity: bool,
    },
    /// exp(Z) for Z anti-tridiagonal with `a` beside the anti-diagonal and `b` on it.
    Anti {
        #[arg(short = 'a', value_parser = complex, allow_hyphen_values = true)]
        a: C64,
        #[arg(short = 'b', value_parser = complex, allow_hyphen_values = true)]
        b: C64,
        #[arg(short = 'n')]
        n: usize,
        /// Report the gap to dense Padé on the assembled matrix.
        #[arg(long)]
        compare: bool,
        /// Report ‖exp(Z) exp(−Z) − I‖∞.
        #[arg(long)]
        identity_check: bool,
    },
    /// exp of the block tridiagonal matrix with blocks (zN, M, zN) or (aN, M, cN).
    Block {
        /// CSV file with the diagonal block M (built-in 3 × 3 pair when absent).
        #[arg(long = "m", requires = "nmat")]
        m: Option<PathBuf>,
        /// CSV file with the coupling block N.
        #[arg(long, requires = "m")]
        nmat: Option<PathBuf>,
        /// Symmetric coupling z.
        #[arg(short = 'z', value_parser = complex, allow_hyphen_values = true, conflicts_with_all = ["a", "c"])]
        z: Option<C64>,
        /// Coupling below the diagonal, with `-c`.
        #[arg(short = 'a', value_parser = complex, allow_hyphen_values = true, requires = "c")]
        a: Option<C64>,
        /// Coupling above the diagonal, with `-a`.
        #[arg(short = 'c', value_parser = complex, allow_hyphen_values = true, requires = "a")]
        c: Option<C64>,
        /// Number of blocks.
        #[arg(short = 'n')]
        n: usize,
        /// Quadrature intervals (adaptive when absent).
        #[arg(long)]
        t1: Option<usize>,
        /// Stabilization order (adaptive when absent).
        #[arg(long)]
        t2: Option<usize>,
        #[arg(long)]
        compare: bool,
    },
    /// Time the method against dense Padé.
    Bench {
        #[arg(long, value_enum, default_value_t = Family::Tridiag)]
        family: Family,
        /// Ascending sizes (block family: number of blocks).
        #[arg(long, value_delimiter = ',', default_value = "1000,2000")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(short = 'a', value_parser = complex, allow_hyphen_values = true, default_value = "4-3j")]
        a: C64,
        #[arg(short = 'b', value_parser = complex, allow_hyphen_values = true, default_value = "0+1j")]
        b: C64,
        #[arg(short = 'c', value_parser = complex, allow_hyphen_values = true, default_value = "-2+1j")]
        c: C64,
        /// Time tridiag(a, 0, −a) for each listed a instead.
        #[arg(long, value_delimiter = ',')]
        a_sweep: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = Materialize::Dense)]
        materialize: Materialize,
        /// Warn when the oracle would need more memory than this.
        #[arg(long, default_value_t = 4096)]
        memory_cap_mb: u64,
        /// Random blocks of this size from `--seed` (block family).
        #[arg(long)]
        block_size: Option<usize>,
    },
    /// Heat equation runs.
    Heat(HeatArgs),
    /// Smallest half-bandwidth meeting `--tol`, with the bound per d.
    Bandselect {
        #[command(flatten)]
        tri: TridiagArgs,
        /// Largest d tabulated (selected d when absent).
        #[arg(long)]
        max_d: Option<usize>,
        /// Add the measured truncation error per d.
        #[arg(long)]
        measure: bool,
    },
}

#[derive(Debug, Clone, Args)]
pub struct HeatArgs {
    /// JSON or TOML configuration; the flags below are ignored when given.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub dims: u8,
    #[arg(long, default_value_t = 20)]
    pub jx: usize,
    #[arg(long)]
    pub jy: Option<usize>,
    #[arg(long, conflicts_with = "mu")]
    pub dt: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[arg(long)]
    pub band: Option<usize>,
    #[arg(long)]
    pub band_y: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub diffusivity: f64,
    #[arg(long, value_enum, default_value_t = Profile::Sine)]
    pub initial: Profile,
    /// Spike location.
    #[arg(long, default_value_t = 0.5)]
    pub spike_x: f64,
    #[arg(long)]
    pub spike_y: Option<f64>,
    #[arg(long, value_enum, default_value_t = Emit::Errors)]
    pub emit: Emit,
    #[arg(long, value_enum, default_value_t = Factors::Bessel)]
    pub factors: Factors,
}

/// Failure classes mapped onto exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags, configuration or files: exit 2.
    Usage(String),
    /// Overflow or instability: exit 3.
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub(crate) fn io(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<toepexp::Error> for CliError {
    fn from(e: toepexp::Error) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

/// Runs one parsed command line.
pub fn run(cli: &Cli) -> Result<RunReport, CliError> {
    let report = commands::dispatch(cli)?;
    if let Some(path) = &cli.global.report {
        std::fs::write(path, report.to_json()).map_err(CliError::io)?;
    }
    Ok(report)
}
