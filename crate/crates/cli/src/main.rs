use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Sparse recovery by basis pursuit and iterative tail minimization.
#[derive(Parser, Debug)]
#[command(name = "tailcs", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a Gaussian matrix or an oversampled Fourier frame.
    GenMatrix(GenMatrixArgs),
    /// Solve a single weighted l1 problem.
    Solve(SolveArgs),
    /// Run tail minimization on one measurement vector.
    Tailmin(TailminArgs),
    /// Spark, null space property, l1 certificate or l0 enumeration.
    Diagnose(DiagnoseArgs),
    /// Build a signal on which basis pursuit fails and check it.
    FailureDemo(FailureDemoArgs),
    /// Monte Carlo success rates over a range of sparsity levels.
    Sweep(SweepArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MatrixKind {
    Gaussian,
    Fourier,
}

#[derive(Args, Debug)]
struct GenMatrixArgs {
    #[arg(long, value_enum)]
    kind: MatrixKind,
    /// Rows (for a Fourier frame, used when --d is absent).
    #[arg(long)]
    m: usize,
    /// Columns.
    #[arg(long = "N")]
    n: usize,
    /// Rows of the Fourier frame.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SolveMethod {
    Bp,
    Weighted,
    Analysis,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long, value_enum)]
    method: SolveMethod,
    /// Measurement matrix A.
    #[arg(long)]
    input: PathBuf,
    /// Measurement vector.
    #[arg(long)]
    b: PathBuf,
    /// Dictionary D for the analysis form.
    #[arg(long)]
    dict: Option<PathBuf>,
    /// Nonnegative weights, one per penalized coefficient.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Absolute and relative stopping tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args, Debug)]
struct TailminArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// Number of entries kept unpenalized in each pass.
    #[arg(long)]
    s: usize,
    /// Dictionary D; switches to the analysis form.
    #[arg(long)]
    dict: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-8)]
    eps_outer: f64,
    #[arg(long, default_value_t = 50)]
    max_outer: usize,
    /// Write iterates and supports as JSON.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Check {
    Spark,
    FullSpark,
    Nsp,
    Certificate,
    L0,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    #[arg(value_enum)]
    check: Check,
    #[arg(long)]
    input: PathBuf,
    /// Support as comma-separated 0-based indices (nsp).
    #[arg(long = "T")]
    t: Option<String>,
    /// Candidate signal (certificate).
    #[arg(long)]
    x: Option<PathBuf>,
    /// Measurement vector (l0).
    #[arg(long)]
    b: Option<PathBuf>,
    /// Sparsity bound (l0).
    #[arg(long)]
    s: Option<usize>,
}

#[derive(Args, Debug)]
struct FailureDemoArgs {
    #[arg(long)]
    m: usize,
    #[arg(long = "N")]
    n: usize,
    #[arg(long)]
    s: usize,
    #[arg(long)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    m: usize,
    #[arg(long = "N")]
    n: usize,
    /// Rows of a Fourier dictionary (must equal --N).
    #[arg(long, requires = "dict_n")]
    dict_d: Option<usize>,
    /// Columns of a Fourier dictionary.
    #[arg(long = "dict-N", requires = "dict_d")]
    dict_n: Option<usize>,
    /// Sparsity range LO:HI:STEP, inclusive.
    #[arg(long)]
    s: String,
    /// Comma-separated methods: bp, tailmin, analysis, tailanalysis, l0.
    #[arg(long)]
    methods: String,
    /// Trials per (s, method) cell.
    #[arg(long)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    /// CSV output.
    #[arg(long)]
    out: PathBuf,
    /// Share one matrix across all trials.
    #[arg(long)]
    fixed_matrix: bool,
    /// Success-rate chart.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Raw trial records as JSON.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Record wall-clock times (output is then not reproducible).
    #[arg(long)]
    timing: bool,
    /// Relative error below which a trial counts as a success.
    #[arg(long, default_value_t = 1e-6)]
    success_tol: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = commands::configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.tag());
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
