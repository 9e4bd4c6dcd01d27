//! Command-line driver for building, verifying, and exporting certified
//! exponential-basis partitions.
//!
//! Exit status contract (stable, scripts may rely on it):
//!
//! - `0` — success: every requested check passed (or, with `--expect-fail`,
//!   the expected negative outcome was observed);
//! - `2` — a certificate or threshold was missed;
//! - `3` — a precision tie: a guarded value sat too close to an integer for
//!   a floor to be certified, usually a rational length declared `irr:`;
//! - `4` — malformed input: unparseable flags, lengths, or input files;
//! - `1` — any other failure.
//!
//! All JSON payloads are deterministic: equal configurations produce byte-
//! identical artifacts (no timestamps, fixed orderings).

mod config;
mod figures;
mod parse;
mod partition;
mod verify;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "expbasis",
    version,
    about = "Construct and certify partitions of the half-integer lattice into exponential Riesz bases"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a certified frequency-set partition for interval lengths.
    Partition(PartitionArgs),
    /// Re-verify a stored artifact, or measure bare frequency sets.
    Verify(VerifyArgs),
    /// Emit the exact point sets of the bundled reference figures (or of a
    /// custom build) for plotting.
    Figures(FiguresArgs),
}

#[derive(clap::Args)]
pub struct PartitionArgs {
    /// JSON config file; explicit flags override its fields.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Comma-separated interval lengths: `p/q` (exact rational),
    /// `irr:<decimal>` (guarded high-precision), or the named constants
    /// `sqrt2inv`, `golden`, `invpi`. Lengths summing to less than 1 get an
    /// automatic tail interval appended.
    #[arg(long, value_name = "LIST")]
    lengths: Option<String>,
    /// Frequency index window `lo:hi` (half-open, half-integer indices). The
    /// artifact reports the full certified window containing it.
    #[arg(long, value_name = "LO:HI", allow_hyphen_values = true)]
    window: Option<String>,
    /// Certification budget exponent K: per-set budgets are 4^-K.
    #[arg(long = "budget-K", value_name = "K")]
    budget_k: Option<u32>,
    /// Tie-detection radius for guarded (irrational) lengths.
    #[arg(long, value_name = "EPS")]
    guard: Option<f64>,
    /// Unions to certify: `all` (every subset within the budget), `none`,
    /// or explicit 1-based groups like `1+2,1+3`.
    #[arg(long, value_name = "SPEC")]
    unions: Option<String>,
    /// Output path for the JSON artifact (default: stdout).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct VerifyArgs {
    /// Partition artifact or bare `{"sets": [...]}` JSON file.
    input: PathBuf,
    /// JSON config file; explicit flags override its fields.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Truncation sizes for the Gram-spectrum trend diagnostic.
    #[arg(long, value_name = "LIST")]
    truncations: Option<String>,
    /// Expect verification to fail (negative control): exit 0 when it does.
    #[arg(long)]
    expect_fail: bool,
    /// Output path for the JSON report (default: stdout).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct FiguresArgs {
    /// Which bundled figure to emit (1 or 2). Mutually exclusive with
    /// --lengths.
    #[arg(long, value_name = "N", conflicts_with = "lengths")]
    figure: Option<u8>,
    /// Custom interval lengths (same syntax as `partition --lengths`).
    #[arg(long, value_name = "LIST")]
    lengths: Option<String>,
    /// Frequency index window `lo:hi` to emit points for.
    #[arg(long, value_name = "LO:HI", allow_hyphen_values = true)]
    window: Option<String>,
    /// Tie-detection radius for guarded (irrational) lengths.
    #[arg(long, value_name = "EPS")]
    guard: Option<f64>,
    /// Output path for the JSON point sets (default: stdout).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

/// A command failure carrying its exit code, already explained on stderr.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn malformed(message: impl Into<String>) -> Self {
        Failure {
            code: 4,
            message: message.into(),
        }
    }

    pub fn from_core(err: expbasis::Error) -> Self {
        use expbasis::Error as E;
        let code = match err {
            E::PrecisionTie { .. } => 3,
            E::BudgetExceeded { .. } | E::WindowTooSmall { .. } => 2,
            E::MalformedInput(_) | E::InvalidSpec(_) | E::DuplicateFrequency { .. } => 4,
            _ => 1,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

/// Writes a JSON payload to `--out` or stdout, newline-terminated.
pub fn emit(out: &Option<PathBuf>, payload: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, payload).map_err(|e| Failure {
            code: 1,
            message: format!("cannot write {}: {e}", path.display()),
        }),
        None => std::io::stdout()
            .write_all(payload.as_bytes())
            .map_err(|e| Failure {
                code: 1,
                message: format!("cannot write stdout: {e}"),
            }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(4),
            };
        }
    };
    let result = match cli.command {
        Command::Partition(args) => partition::run(&args),
        Command::Verify(args) => verify::run(&args),
        Command::Figures(args) => figures::run(&args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
