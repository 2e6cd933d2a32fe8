//! Seeded Monte Carlo recovery trials and sparsity sweeps.
//!
//! Every random draw of a trial derives from its 64-bit seed through
//! [`derive_seed`], so a trial can be replayed in isolation and a sweep gives
//! the same table whatever order its trials finish in.

mod report;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::diagnostics::{binomial, l0_bruteforce_solutions, L0_MAX_SUPPORTS};
use crate::error::{arg_err, Error, Result};
use crate::exec::Execution;
use crate::linalg::{fourier_frame, gaussian_matrix, Complex64, Matrix, Scalar, Vector};
use crate::solver::{solve_weighted_l1, solve_weighted_l1_analysis, SolverOptions};
use crate::tailmin::{tail_min_analysis, tail_min_synthesis, OuterOptions};

pub use report::{format_sig6, SweepRow, SweepTable, CSV_HEADER};

/// Recovery method evaluated by a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "bp")]
    Bp,
    #[serde(rename = "tailmin")]
    TailMin,
    #[serde(rename = "analysis")]
    Analysis,
    #[serde(rename = "tailanalysis")]
    TailAnalysis,
    #[serde(rename = "l0")]
    L0Oracle,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Bp, Method::TailMin, Method::Analysis, Method::TailAnalysis, Method::L0Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Method::Bp => "bp",
            Method::TailMin => "tailmin",
            Method::Analysis => "analysis",
            Method::TailAnalysis => "tailanalysis",
            Method::L0Oracle => "l0",
        }
    }

    fn code(self) -> u64 {
        self as u64
    }

    /// Whether the method works on a frame-sparse signal `f = Dx`.
    pub fn needs_dictionary(self) -> bool {
        matches!(self, Method::Analysis | Method::TailAnalysis)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bp" => Ok(Method::Bp),
            "tailmin" | "tail-min" => Ok(Method::TailMin),
            "analysis" => Ok(Method::Analysis),
            "tailanalysis" | "tail-analysis" => Ok(Method::TailAnalysis),
            "l0" | "l0oracle" => Ok(Method::L0Oracle),
            other => arg_err(format!("unknown method {other:?}")),
        }
    }
}

/// Dictionary in which the signal is sparse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Dictionary {
    None,
    /// `fourier_frame(d, n)`; `d` must equal the number of columns of `A`.
    Fourier { d: usize, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub dictionary: Dictionary,
    pub s: usize,
    pub method: Method,
    pub seed: u64,
    pub success_tol: f64,
    pub solver_opts: SolverOptions,
    pub outer: OuterOptions,
    /// Seed of `A` when the matrix is shared across trials; `None` draws it
    /// from `seed`.
    pub matrix_seed: Option<u64>,
}

impl TrialSpec {
    /// Gaussian `m × n` synthesis trial with default tolerances.
    pub fn new(m: usize, n: usize, s: usize, method: Method, seed: u64) -> Self {
        Self {
            m,
            n,
            dictionary: Dictionary::None,
            s,
            method,
            seed,
            success_tol: 1e-6,
            solver_opts: SolverOptions::default(),
            outer: OuterOptions::default(),
            matrix_seed: None,
        }
    }

    /// Length of the sparse coefficient vector.
    pub fn signal_len(&self) -> usize {
        match self.dictionary {
            Dictionary::None => self.n,
            Dictionary::Fourier { n, .. } => n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.m > self.n {
            return arg_err(format!("need 1 <= m <= N, got m={} N={}", self.m, self.n));
        }
        if !(self.success_tol.is_finite() && self.success_tol > 0.0) {
            return arg_err("success tolerance must be positive");
        }
        self.solver_opts.validate()?;
        self.outer.validate()?;
        match (self.dictionary, self.method.needs_dictionary()) {
            (Dictionary::None, true) => {
                return arg_err(format!("method {} needs a dictionary", self.method));
            }
            (Dictionary::Fourier { .. }, false) => {
                return arg_err(format!("method {} does not take a dictionary", self.method));
            }
            (Dictionary::Fourier { d, n }, true) if d != self.n || n < d => {
                return arg_err(format!("dictionary must be {}xK with K >= {}, got {d}x{n}", self.n, self.n));
            }
            _ => {}
        }
        let len = self.signal_len();
        let upper = match self.method {
            Method::TailMin | Method::TailAnalysis => len - 1,
            _ => len,
        };
        if self.s == 0 || self.s > upper {
            return arg_err(format!("s must lie in 1..={upper} for method {}, got {}", self.method, self.s));
        }
        if self.method == Method::L0Oracle {
            let count = binomial(self.n, self.s.min(self.m));
            if count > L0_MAX_SUPPORTS {
                return Err(Error::SizeLimit(format!(
                    "l0 oracle would enumerate {count} supports (limit {L0_MAX_SUPPORTS})"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub spec: TrialSpec,
    pub success: bool,
    /// Not finite when the trial errored or the oracle found no solution.
    pub relative_error: f64,
    pub iterations: usize,
    pub wall_ms: f64,
    /// Error tag when the method failed to produce an estimate.
    pub error: Option<String>,
}

/// Relative `ℓ2` error of `x_hat`, or its norm when `x_true = 0`; success
/// iff it is below `tol`.
pub fn success<T: Scalar>(x_hat: &Vector<T>, x_true: &Vector<T>, tol: f64) -> (bool, f64) {
    let diff = (x_hat - x_true).norm();
    let scale = x_true.norm();
    let err = if scale > 0.0 { diff / scale } else { x_hat.norm() };
    (err < tol, err)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a sequence of words into a seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x243F_6A88_85A3_08D3, |h, &p| splitmix64(h ^ p))
}

/// Seed of one trial of a sweep cell.
pub fn trial_seed(base: u64, s: usize, method: Method, trial_index: usize) -> u64 {
    derive_seed(&[base, s as u64, method.code(), trial_index as u64])
}

/// Seed shared by every trial of a fixed-matrix sweep.
pub fn fixed_matrix_seed(base: u64) -> u64 {
    derive_seed(&[base, u64::MAX])
}

const STREAM_MATRIX: u64 = 1;
const STREAM_SUPPORT: u64 = 2;
const STREAM_VALUES: u64 = 3;

/// Real `s`-sparse vector of length `n`: uniform support, standard normal
/// values.
pub fn random_sparse_signal(n: usize, s: usize, support_seed: u64, value_seed: u64) -> Vector<f64> {
    let mut support_rng = ChaCha8Rng::seed_from_u64(support_seed);
    let mut support = sample(&mut support_rng, n, s).into_vec();
    support.sort_unstable();
    let mut value_rng = ChaCha8Rng::seed_from_u64(value_seed);
    let mut x = Vector::zeros(n);
    for j in support {
        x[j] = StandardNormal.sample(&mut value_rng);
    }
    x
}

struct Outcome {
    relative_error: f64,
    iterations: usize,
}

/// Runs one trial. Invalid specs are rejected; solver failures are recorded
/// in the returned record.
pub fn run_trial(spec: &TrialSpec) -> Result<TrialRecord> {
    spec.validate()?;
    let start = Instant::now();
    let outcome = execute(spec);
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(match outcome {
        Ok(o) => TrialRecord {
            spec: *spec,
            success: o.relative_error < spec.success_tol,
            relative_error: o.relative_error,
            iterations: o.iterations,
            wall_ms,
            error: None,
        },
        Err(e) => TrialRecord {
            spec: *spec,
            success: false,
            relative_error: f64::NAN,
            iterations: 0,
            wall_ms,
            error: Some(e.tag().to_string()),
        },
    })
}

fn execute(spec: &TrialSpec) -> Result<Outcome> {
    let matrix_seed = spec.matrix_seed.unwrap_or_else(|| derive_seed(&[spec.seed, STREAM_MATRIX]));
    let a = gaussian_matrix(spec.m, spec.n, matrix_seed)?;
    let x = random_sparse_signal(
        spec.signal_len(),
        spec.s,
        derive_seed(&[spec.seed, STREAM_SUPPORT]),
        derive_seed(&[spec.seed, STREAM_VALUES]),
    );
    let tol = spec.success_tol;
    match spec.dictionary {
        Dictionary::None => synthesis_trial(spec, &a, &x, tol),
        Dictionary::Fourier { d, n } => {
            let dict = fourier_frame(d, n)?;
            analysis_trial(spec, &a.to_complex(), &dict, &x, tol)
        }
    }
}

fn synthesis_trial(spec: &TrialSpec, a: &Matrix<f64>, x: &Vector<f64>, tol: f64) -> Result<Outcome> {
    let b = a.mul_vec(x);
    let ones = vec![1.0; spec.n];
    let (estimate, iterations) = match spec.method {
        Method::Bp => {
            let r = solve_weighted_l1(a, &b, &ones, &spec.solver_opts)?;
            (r.solution, r.iterations)
        }
        Method::TailMin => {
            let (r, _) = tail_min_synthesis(a, &b, spec.s, &spec.solver_opts, &spec.outer)?;
            (r.solution, r.iterations)
        }
        Method::L0Oracle => {
            let residual_tol = 1e-9 * (1.0 + b.norm());
            let set = l0_bruteforce_solutions(a, &b, spec.s, residual_tol)?;
            // worst member, so that success means the set is exactly {x}
            let err = set
                .solutions
                .iter()
                .map(|z| success(&z.to_dense(), x, tol).1)
                .fold(if set.solutions.is_empty() { f64::INFINITY } else { 0.0 }, f64::max);
            let count = binomial(spec.n, spec.s.min(spec.m)) as usize;
            return Ok(Outcome { relative_error: err, iterations: count });
        }
        Method::Analysis | Method::TailAnalysis => unreachable!("validated"),
    };
    Ok(Outcome { relative_error: success(&estimate, x, tol).1, iterations })
}

fn analysis_trial(
    spec: &TrialSpec,
    a: &Matrix<Complex64>,
    dict: &Matrix<Complex64>,
    x: &Vector<f64>,
    tol: f64,
) -> Result<Outcome> {
    let f = dict.mul_vec(&x.map(|v| Complex64::new(v, 0.0)));
    let b = a.mul_vec(&f);
    let r = match spec.method {
        Method::Analysis => {
            solve_weighted_l1_analysis(a, dict, &b, &vec![1.0; dict.cols()], &spec.solver_opts)?
        }
        Method::TailAnalysis => tail_min_analysis(a, dict, &b, spec.s, &spec.solver_opts, &spec.outer)?.0,
        _ => unreachable!("validated"),
    };
    Ok(Outcome { relative_error: success(&r.solution, &f, tol).1, iterations: r.iterations })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub exec: Execution,
    /// Record wall-clock times. Off by default so repeated sweeps produce
    /// identical output.
    pub timing: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { exec: Execution::default(), timing: false }
    }
}

/// Every trial of a sweep, ordered by `s` ascending, then by position in
/// `methods`, then by trial index.
pub fn sweep_records(
    base: &TrialSpec,
    s_values: &[usize],
    methods: &[Method],
    trials_per_cell: usize,
    opts: &SweepOptions,
) -> Result<Vec<TrialRecord>> {
    let mut s_sorted = s_values.to_vec();
    s_sorted.sort_unstable();
    s_sorted.dedup();
    let mut method_list: Vec<Method> = Vec::new();
    for &m in methods {
        if !method_list.contains(&m) {
            method_list.push(m);
        }
    }

    let mut jobs = Vec::with_capacity(s_sorted.len() * method_list.len() * trials_per_cell);
    for &s in &s_sorted {
        for &method in &method_list {
            let cell = TrialSpec { s, method, ..*base };
            cell.validate()?;
            for t in 0..trials_per_cell {
                jobs.push(TrialSpec { seed: trial_seed(base.seed, s, method, t), ..cell });
            }
        }
    }
    let records = opts.exec.map(&jobs, |spec| {
        let mut rec = run_trial(spec).expect("cell specs are validated");
        if !opts.timing {
            rec.wall_ms = 0.0;
        }
        rec
    });
    Ok(records)
}

/// Success statistics per `(s, method)` cell; see [`sweep_records`] for the
/// row order.
pub fn sweep_sparsity(
    base: &TrialSpec,
    s_values: &[usize],
    methods: &[Method],
    trials_per_cell: usize,
) -> Result<SweepTable> {
    sweep_sparsity_with(base, s_values, methods, trials_per_cell, &SweepOptions::default())
}

pub fn sweep_sparsity_with(
    base: &TrialSpec,
    s_values: &[usize],
    methods: &[Method],
    trials_per_cell: usize,
    opts: &SweepOptions,
) -> Result<SweepTable> {
    Ok(SweepTable::from_records(&sweep_records(base, s_values, methods, trials_per_cell, opts)?))
}

/// Pretty-printed JSON array of trial records.
pub fn records_to_json(records: &[TrialRecord]) -> String {
    serde_json::to_string_pretty(records).expect("records serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn success_examples() {
        let x = dvector![1.0, -2.0, 0.5];
        assert_eq!(success(&x, &x, 1e-6), (true, 0.0));
        let z = Vector::<f64>::zeros(3);
        assert_eq!(success(&z, &z, 1e-6), (true, 0.0));
        let (ok, err) = success(&(&x * 1.0000009), &x, 1e-6);
        assert!(ok);
        assert!((err - 9e-7).abs() < 1e-12);
        assert!(!success(&(&x * 1.00001), &x, 1e-6).0);
        assert_eq!(success(&dvector![3.0, 4.0], &dvector![0.0, 0.0], 1e-6), (false, 5.0));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
        }
        assert!("lasso".parse::<Method>().is_err());
    }

    #[test]
    fn seeds_are_isolated() {
        let a = trial_seed(7, 16, Method::Bp, 0);
        assert_eq!(a, trial_seed(7, 16, Method::Bp, 0));
        assert_ne!(a, trial_seed(7, 16, Method::Bp, 1));
        assert_ne!(a, trial_seed(7, 16, Method::TailMin, 0));
        assert_ne!(a, trial_seed(7, 20, Method::Bp, 0));
        assert_ne!(a, trial_seed(8, 16, Method::Bp, 0));
    }

    #[test]
    fn random_signal_shape() {
        let x = random_sparse_signal(50, 7, 1, 2);
        assert_eq!(x.iter().filter(|v| **v != 0.0).count(), 7);
        assert_eq!(x, random_sparse_signal(50, 7, 1, 2));
        // changing the value stream keeps the support
        let y = random_sparse_signal(50, 7, 1, 3);
        assert!((0..50).all(|j| (x[j] == 0.0) == (y[j] == 0.0)));
    }

    #[test]
    fn spec_validation() {
        assert!(TrialSpec::new(8, 12, 5, Method::Bp, 0).validate().is_ok());
        assert!(TrialSpec::new(8, 12, 0, Method::Bp, 0).validate().is_err());
        assert!(TrialSpec::new(8, 12, 12, Method::TailMin, 0).validate().is_err());
        assert!(TrialSpec::new(13, 12, 2, Method::Bp, 0).validate().is_err());
        assert!(TrialSpec::new(8, 12, 2, Method::Analysis, 0).validate().is_err());
        let mut fourier = TrialSpec::new(8, 16, 2, Method::TailAnalysis, 0);
        fourier.dictionary = Dictionary::Fourier { d: 16, n: 32 };
        assert!(fourier.validate().is_ok());
        fourier.method = Method::Bp;
        assert!(fourier.validate().is_err());
        fourier.method = Method::Analysis;
        fourier.dictionary = Dictionary::Fourier { d: 12, n: 32 };
        assert!(fourier.validate().is_err());
        let big = TrialSpec::new(20, 40, 15, Method::L0Oracle, 0);
        assert!(matches!(big.validate(), Err(Error::SizeLimit(_))));
    }

    #[test]
    fn trials_are_deterministic() {
        for method in [Method::Bp, Method::TailMin, Method::L0Oracle] {
            let spec = TrialSpec::new(8, 12, 3, method, 99);
            let r1 = run_trial(&spec).unwrap();
            let r2 = run_trial(&spec).unwrap();
            assert_eq!(r1.relative_error.to_bits(), r2.relative_error.to_bits());
            assert_eq!(r1.iterations, r2.iterations);
            assert!(r1.success, "{method}: {}", r1.relative_error);
        }
    }

    #[test]
    fn l0_trial_matches_oracle() {
        // the oracle succeeds exactly when the enumerated set is {x}
        for seed in 0..10 {
            let spec = TrialSpec::new(8, 12, 5, Method::L0Oracle, seed);
            let rec = run_trial(&spec).unwrap();
            let a = gaussian_matrix(8, 12, derive_seed(&[seed, STREAM_MATRIX])).unwrap();
            let x = random_sparse_signal(
                12,
                5,
                derive_seed(&[seed, STREAM_SUPPORT]),
                derive_seed(&[seed, STREAM_VALUES]),
            );
            let b = a.mul_vec(&x);
            let set = l0_bruteforce_solutions(&a, &b, 5, 1e-9 * (1.0 + b.norm())).unwrap();
            assert_eq!(rec.success, set.is_unique_solution(&x));
        }
    }

    #[test]
    fn analysis_trial_runs() {
        let mut spec = TrialSpec::new(8, 16, 1, Method::Analysis, 3);
        spec.dictionary = Dictionary::Fourier { d: 16, n: 32 };
        let rec = run_trial(&spec).unwrap();
        assert!(rec.error.is_none());
        assert!(rec.relative_error.is_finite());
        spec.method = Method::TailAnalysis;
        assert!(run_trial(&spec).unwrap().error.is_none());
    }

    #[test]
    fn fixed_matrix_is_shared() {
        let mut spec = TrialSpec::new(4, 8, 1, Method::Bp, 1);
        spec.matrix_seed = Some(5);
        let mut other = spec;
        other.seed = 2;
        // same matrix, different signals: both trials still run
        assert!(run_trial(&spec).unwrap().error.is_none());
        assert!(run_trial(&other).unwrap().error.is_none());
    }

    #[test]
    fn sweep_shapes() {
        let base = TrialSpec::new(8, 16, 1, Method::Bp, 11);
        let empty = sweep_sparsity(&base, &[2, 3], &[Method::Bp], 0).unwrap();
        assert!(empty.rows.is_empty());
        let table = sweep_sparsity(&base, &[3, 2, 3], &[Method::TailMin, Method::Bp], 4).unwrap();
        let cells: Vec<(usize, Method)> = table.rows.iter().map(|r| (r.s, r.method)).collect();
        assert_eq!(
            cells,
            vec![(2, Method::TailMin), (2, Method::Bp), (3, Method::TailMin), (3, Method::Bp)]
        );
        for row in &table.rows {
            assert_eq!(row.trials, 4);
            assert!(row.successes <= row.trials);
            assert_eq!(row.success_rate, row.successes as f64 / 4.0);
            assert_eq!(row.mean_wall_ms, 0.0);
        }
        assert!(sweep_sparsity(&base, &[20], &[Method::Bp], 1).is_err());
    }

    #[test]
    fn sequential_and_default_execution_agree() {
        let base = TrialSpec::new(6, 12, 1, Method::Bp, 5);
        let seq = SweepOptions { exec: Execution::Sequential, timing: false };
        let a = sweep_records(&base, &[2, 4], &[Method::Bp, Method::TailMin], 3, &seq).unwrap();
        let b = sweep_records(&base, &[2, 4], &[Method::Bp, Method::TailMin], 3, &SweepOptions::default()).unwrap();
        assert_eq!(a, b);
        let json = records_to_json(&a);
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        let first = &parsed[0];
        for key in ["spec", "success", "relative_error", "iterations", "wall_ms", "error"] {
            assert!(first.get(key).is_some(), "missing {key}");
        }
        assert_eq!(first["spec"]["N"], 12);
        assert_eq!(first["spec"]["method"], "bp");
    }
}
