use std::fs;

use tailcs_core::diagnostics::{
    construct_bp_failure, is_full_spark, l0_bruteforce_solutions, nsp_holds, recovery_certificate, spark,
    SparseSignal, SPARK_SIZE_LIMIT,
};
use tailcs_core::experiments::{
    fixed_matrix_seed, format_sig6, records_to_json, success, sweep_records, Dictionary, Method, SweepOptions,
    SweepTable, TrialSpec,
};
use tailcs_core::linalg::{
    fourier_frame, format_vector, gaussian_matrix, read_matrix, read_vector, write_matrix, AnyMatrix, AnyVector,
    Field, Matrix, Scalar, SupportSet, Vector,
};
use tailcs_core::solver::simplex::{SIMPLEX_MAX_COLS, SIMPLEX_MAX_ROWS};
use tailcs_core::solver::{simplex_bp, solve_weighted_l1, solve_weighted_l1_analysis, SolverOptions};
use tailcs_core::tailmin::{tail_min_analysis, tail_min_synthesis, OuterOptions};
use tailcs_core::{Error, Result};

use crate::{
    Check, Command, DiagnoseArgs, FailureDemoArgs, GenMatrixArgs, MatrixKind, SolveArgs, SolveMethod, SweepArgs,
    TailminArgs,
};

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}

/// Argument problems exit with 2, failed computations with 1.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Argument(_) | Error::ComplexUnsupported(_) => 2,
        _ => 1,
    }
}

/// Sizes the worker pool from `TAILCS_THREADS` (unset or 0: one per core).
pub fn configure_threads() -> std::result::Result<(), String> {
    let Ok(raw) = std::env::var("TAILCS_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("TAILCS_THREADS must be a nonnegative integer, got {raw:?}"))?;
    #[cfg(feature = "parallel")]
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::GenMatrix(args) => gen_matrix(args),
        Command::Solve(args) => solve(args),
        Command::Tailmin(args) => tailmin(args),
        Command::Diagnose(args) => diagnose(args),
        Command::FailureDemo(args) => failure_demo(args),
        Command::Sweep(args) => sweep(args),
    }
}

fn gen_matrix(args: GenMatrixArgs) -> Result<()> {
    match args.kind {
        MatrixKind::Gaussian => {
            if args.d.is_some() {
                return usage("--d only applies to --kind fourier");
            }
            write_matrix(&args.out, &gaussian_matrix(args.m, args.n, args.seed)?)
        }
        MatrixKind::Fourier => write_matrix(&args.out, &fourier_frame(args.d.unwrap_or(args.m), args.n)?),
    }
}

fn real_weights(path: Option<&std::path::PathBuf>) -> Result<Option<Vec<f64>>> {
    match path {
        None => Ok(None),
        Some(p) => match read_vector(p)? {
            AnyVector::Real(w) => Ok(Some(w.iter().copied().collect())),
            AnyVector::Complex(_) => usage("weights must be real"),
        },
    }
}

fn any_complex(a: &AnyMatrix, b: &AnyVector, dict: Option<&AnyMatrix>) -> bool {
    a.field() == Field::Complex
        || matches!(b, AnyVector::Complex(_))
        || dict.is_some_and(|d| d.field() == Field::Complex)
}

fn into_real(a: AnyMatrix) -> Matrix<f64> {
    a.into_real().expect("field checked")
}

fn summary<T: Scalar>(objective: f64, iterations: usize, converged: bool, x: &Vector<T>) {
    print!("{}", format_vector(x));
    eprintln!(
        "objective {} iterations {iterations} converged {converged}",
        format_sig6(objective)
    );
}

fn solve(args: SolveArgs) -> Result<()> {
    if !(args.tol.is_finite() && args.tol > 0.0) {
        return usage("--tol must be positive");
    }
    match args.method {
        SolveMethod::Analysis if args.dict.is_none() => return usage("--method analysis needs --dict"),
        SolveMethod::Bp | SolveMethod::Weighted if args.dict.is_some() => {
            return usage("--dict only applies to --method analysis")
        }
        SolveMethod::Weighted if args.weights.is_none() => return usage("--method weighted needs --weights"),
        SolveMethod::Bp if args.weights.is_some() => return usage("--method bp uses unit weights"),
        _ => {}
    }
    let a = read_matrix(&args.input)?;
    let b = read_vector(&args.b)?;
    let dict = args.dict.as_ref().map(read_matrix).transpose()?;
    let weights = real_weights(args.weights.as_ref())?;
    let opts = SolverOptions { abs_tol: args.tol, rel_tol: args.tol, ..Default::default() };
    if any_complex(&a, &b, dict.as_ref()) {
        solve_typed(args.method, a.into_complex(), b.into_complex(), dict.map(AnyMatrix::into_complex), weights, &opts)
    } else {
        let b = b.into_real().expect("field checked");
        solve_typed(args.method, into_real(a), b, dict.map(into_real), weights, &opts)
    }
}

fn solve_typed<T: Scalar>(
    method: SolveMethod,
    a: Matrix<T>,
    b: Vector<T>,
    dict: Option<Matrix<T>>,
    weights: Option<Vec<f64>>,
    opts: &SolverOptions,
) -> Result<()> {
    let report = match (method, dict) {
        (SolveMethod::Analysis, Some(d)) => {
            let w = weights.unwrap_or_else(|| vec![1.0; d.cols()]);
            solve_weighted_l1_analysis(&a, &d, &b, &w, opts)?
        }
        _ => {
            let w = weights.unwrap_or_else(|| vec![1.0; a.cols()]);
            solve_weighted_l1(&a, &b, &w, opts)?
        }
    };
    summary(report.objective, report.iterations, report.converged, &report.solution);
    Ok(())
}

fn tailmin(args: TailminArgs) -> Result<()> {
    let outer = OuterOptions { eps_outer: args.eps_outer, max_outer: args.max_outer };
    outer.validate()?;
    let a = read_matrix(&args.input)?;
    let b = read_vector(&args.b)?;
    let dict = args.dict.as_ref().map(read_matrix).transpose()?;
    let opts = SolverOptions::default();
    let out = if any_complex(&a, &b, dict.as_ref()) {
        tailmin_typed(a.into_complex(), b.into_complex(), dict.map(AnyMatrix::into_complex), args.s, &opts, &outer)?
    } else {
        let b = b.into_real().expect("field checked");
        tailmin_typed(into_real(a), b, dict.map(into_real), args.s, &opts, &outer)?
    };
    if let Some(path) = args.trace {
        fs::write(path, out)?;
    }
    Ok(())
}

/// Prints the result and returns the trace as JSON.
fn tailmin_typed<T: Scalar>(
    a: Matrix<T>,
    b: Vector<T>,
    dict: Option<Matrix<T>>,
    s: usize,
    opts: &SolverOptions,
    outer: &OuterOptions,
) -> Result<String> {
    let (report, trace) = match dict {
        Some(d) => tail_min_analysis(&a, &d, &b, s, opts, outer)?,
        None => tail_min_synthesis(&a, &b, s, opts, outer)?,
    };
    summary(report.objective, report.iterations, report.converged, &report.solution);
    eprintln!("passes {} terminated_by {:?}", trace.iterates.len(), trace.terminated_by);
    Ok(serde_json::to_string_pretty(&trace).expect("trace serializes"))
}

fn parse_support(raw: &str, ambient: usize) -> Result<SupportSet> {
    let indices = raw
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<usize>().map_err(|_| Error::Argument(format!("bad index {t:?} in --T"))))
        .collect::<Result<Vec<_>>>()?;
    SupportSet::new(indices, ambient)
}

fn require_real(a: AnyMatrix, what: &str) -> Result<Matrix<f64>> {
    a.into_real()
        .ok_or_else(|| Error::ComplexUnsupported(format!("{what} is only defined for real matrices")))
}

fn diagnose(args: DiagnoseArgs) -> Result<()> {
    let needs = |ok: bool, flag: &str| if ok { Ok(()) } else { usage(format!("{:?} needs {flag}", args.check)) };
    match args.check {
        Check::Nsp => needs(args.t.is_some(), "--T")?,
        Check::Certificate => needs(args.x.is_some(), "--x")?,
        Check::L0 => needs(args.b.is_some() && args.s.is_some(), "--b and --s")?,
        Check::Spark | Check::FullSpark => {}
    }
    let a = read_matrix(&args.input)?;
    match args.check {
        Check::Spark => {
            let k = match &a {
                AnyMatrix::Real(m) => spark(m, SPARK_SIZE_LIMIT)?,
                AnyMatrix::Complex(m) => spark(m, SPARK_SIZE_LIMIT)?,
            };
            println!("{k}");
        }
        Check::FullSpark => {
            let full = match &a {
                AnyMatrix::Real(m) => is_full_spark(m)?,
                AnyMatrix::Complex(m) => is_full_spark(m)?,
            };
            println!("{full}");
        }
        Check::Nsp => {
            let a = require_real(a, "the null space property check")?;
            let t = parse_support(args.t.as_deref().unwrap_or_default(), a.cols())?;
            println!("{}", nsp_holds(&a, &t)?);
        }
        Check::Certificate => {
            let a = require_real(a, "the recovery certificate")?;
            let x = match read_vector(args.x.as_ref().expect("checked"))? {
                AnyVector::Real(x) => x,
                AnyVector::Complex(_) => {
                    return Err(Error::ComplexUnsupported("the recovery certificate needs a real x".into()))
                }
            };
            println!("{}", recovery_certificate(&a, &SparseSignal::from_dense(&x, 0.0))?);
        }
        Check::L0 => {
            let b = read_vector(args.b.as_ref().expect("checked"))?;
            let s = args.s.expect("checked");
            if a.field() == Field::Complex || matches!(b, AnyVector::Complex(_)) {
                print_l0(&a.into_complex(), &b.into_complex(), s)?;
            } else {
                print_l0(&into_real(a), &b.into_real().expect("field checked"), s)?;
            }
        }
    }
    Ok(())
}

fn print_l0<T: Scalar>(a: &Matrix<T>, b: &Vector<T>, s: usize) -> Result<()> {
    let set = l0_bruteforce_solutions(a, b, s, 1e-9 * (1.0 + b.norm()))?;
    println!("{}", set.solutions.len());
    for z in &set.solutions {
        let line: Vec<String> = z.to_dense().iter().map(|v| v.format_entry()).collect();
        println!("{}", line.join(" "));
    }
    if !set.skipped.is_empty() {
        eprintln!("skipped {} rank-deficient supports", set.skipped.len());
    }
    Ok(())
}

fn failure_demo(args: FailureDemoArgs) -> Result<()> {
    let a = gaussian_matrix(args.m, args.n, args.seed)?;
    let w = construct_bp_failure(&a, args.s, args.seed)?;
    let x = w.x.to_dense();
    let b = a.mul_vec(&x);
    let certified = recovery_certificate(&a, &w.x)?;
    let bp = if a.rows() <= SIMPLEX_MAX_ROWS && a.cols() <= SIMPLEX_MAX_COLS {
        simplex_bp(&a, &b)?
    } else {
        solve_weighted_l1(&a, &b, &vec![1.0; a.cols()], &SolverOptions::default())?
    };
    let (_, rel) = success(&bp.solution, &x, 1e-6);
    let entries: Vec<String> = x.iter().map(|v| v.format_entry()).collect();
    println!("columns: {}", w.columns);
    println!("T0: {}", w.t0);
    println!("x: {}", entries.join(" "));
    println!("mass_T0: {}", format_sig6(w.mass_t0));
    println!("mass_complement: {}", format_sig6(w.mass_complement));
    println!("mass_ratio: {}", format_sig6(w.mass_t0 / w.mass_complement));
    println!("certificate: {certified}");
    println!("x_l1: {}", format_sig6(x.abs().sum()));
    println!("bp_l1: {}", format_sig6(bp.objective));
    println!("bp_relative_error: {}", format_sig6(rel));
    Ok(())
}

fn parse_range(raw: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = raw.split(':').collect();
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| Error::Argument(format!("bad number {t:?} in --s")))
    };
    let (lo, hi, step) = match parts.as_slice() {
        [one] => (num(one)?, num(one)?, 1),
        [lo, hi] => (num(lo)?, num(hi)?, 1),
        [lo, hi, step] => (num(lo)?, num(hi)?, num(step)?),
        _ => return usage(format!("--s expects LO:HI:STEP, got {raw:?}")),
    };
    if step == 0 || lo > hi {
        return usage(format!("--s range {raw:?} is empty"));
    }
    Ok((lo..=hi).step_by(step).collect())
}

fn parse_methods(raw: &str) -> Result<Vec<Method>> {
    let methods = raw
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<Method>>>()?;
    if methods.is_empty() {
        return usage("--methods is empty");
    }
    Ok(methods)
}

fn sweep(args: SweepArgs) -> Result<()> {
    let s_values = parse_range(&args.s)?;
    let methods = parse_methods(&args.methods)?;
    let mut base = TrialSpec::new(args.m, args.n, s_values[0], methods[0], args.seed);
    base.success_tol = args.success_tol;
    if let (Some(d), Some(n)) = (args.dict_d, args.dict_n) {
        base.dictionary = Dictionary::Fourier { d, n };
    }
    if args.fixed_matrix {
        base.matrix_seed = Some(fixed_matrix_seed(args.seed));
    }
    let opts = SweepOptions { timing: args.timing, ..Default::default() };
    let records = sweep_records(&base, &s_values, &methods, args.trials, &opts)?;
    let table = SweepTable::from_records(&records);
    fs::write(&args.out, table.to_csv())?;
    if let Some(path) = &args.svg {
        fs::write(path, table.to_svg())?;
    }
    if let Some(path) = &args.records {
        fs::write(path, records_to_json(&records))?;
    }
    for row in &table.rows {
        eprintln!("s={} {}: {}/{}", row.s, row.method, row.successes, row.trials);
    }
    Ok(())
}
