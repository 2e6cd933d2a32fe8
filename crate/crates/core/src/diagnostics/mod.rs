//! Checks for the combinatorial conditions behind sparse recovery.
//!
//! Spark and the ℓ0 enumeration work over either field. The null space
//! property, the single-vector ℓ1 certificate and the failure constructor take
//! `Matrix<f64>` only: their sign-pattern characterizations do not carry over
//! to complex data.

mod kernel;

use std::collections::BTreeMap;

use itertools::Itertools;

use crate::error::{arg_err, Error, Result};
use crate::exec::Execution;
use crate::linalg::{least_squares, submatrix_columns, Matrix, Scalar, SupportSet, Vector, DEFAULT_RANK_TOL};

pub use kernel::{construct_bp_failure, nsp_holds, recovery_certificate, FailureWitness, NSP_MAX_SUPPORT};

/// Column-count guard for [`spark`].
pub const SPARK_SIZE_LIMIT: usize = 24;
/// Largest number of supports [`l0_bruteforce_solutions`] will enumerate.
pub const L0_MAX_SUPPORTS: u128 = 1_000_000;
/// Entries at or below this modulus are treated as zero when trimming
/// solutions and comparing them.
pub const ZERO_TOL: f64 = 1e-9;

const CHUNK: usize = 4096;

/// A vector stored by its nonzero entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal<T: Scalar> {
    support: SupportSet,
    values: Vec<T>,
}

impl<T: Scalar> SparseSignal<T> {
    /// Every value must have modulus above `1e-12`.
    pub fn new(support: SupportSet, values: Vec<T>) -> Result<Self> {
        if support.len() != values.len() {
            return arg_err(format!("{} support indices but {} values", support.len(), values.len()));
        }
        if values.iter().any(|v| !(v.modulus() > 1e-12)) {
            return arg_err("sparse signal values must be nonzero");
        }
        Ok(Self { support, values })
    }

    /// Keeps the entries of `x` with modulus above `threshold`.
    pub fn from_dense(x: &Vector<T>, threshold: f64) -> Self {
        let threshold = threshold.max(1e-12);
        let indices: Vec<usize> = (0..x.len()).filter(|&j| x[j].modulus() > threshold).collect();
        let values = indices.iter().map(|&j| x[j]).collect();
        Self { support: SupportSet::from_sorted_unchecked(indices, x.len()), values }
    }

    pub fn to_dense(&self) -> Vector<T> {
        let mut x = Vector::zeros(self.ambient());
        for (&j, &v) in self.support.indices().iter().zip(&self.values) {
            x[j] = v;
        }
        x
    }

    pub fn ambient(&self) -> usize {
        self.support.ambient()
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Number of nonzero entries.
    pub fn sparsity(&self) -> usize {
        self.values.len()
    }
}

/// Every vector with at most `s_bound` nonzeros reproducing `b` to within
/// `residual_tol`.
#[derive(Debug, Clone)]
pub struct L0SolutionSet<T: Scalar> {
    /// Distinct solutions, ordered lexicographically by support.
    pub solutions: Vec<SparseSignal<T>>,
    pub s_bound: usize,
    pub residual_tol: f64,
    /// Supports whose column submatrix was numerically rank deficient.
    pub skipped: Vec<SupportSet>,
}

impl<T: Scalar> L0SolutionSet<T> {
    /// Whether the set is exactly `{x}` up to [`ZERO_TOL`].
    pub fn is_unique_solution(&self, x: &Vector<T>) -> bool {
        self.solutions.len() == 1 && max_abs_diff(&self.solutions[0].to_dense(), x) <= ZERO_TOL
    }
}

fn max_abs_diff<T: Scalar>(a: &Vector<T>, b: &Vector<T>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (*x - *y).modulus()).fold(0.0, f64::max)
}

/// `C(n, k)`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

fn rank_threshold<T: Scalar>(a: &Matrix<T>) -> f64 {
    DEFAULT_RANK_TOL * a.spectral_norm()
}

fn columns_dependent<T: Scalar>(a: &Matrix<T>, cols: &[usize], threshold: f64) -> bool {
    if cols.len() > a.rows() {
        return true;
    }
    let sub = a.as_inner().select_columns(cols);
    let smin = sub.singular_values().min();
    smin <= threshold
}

fn numerical_rank<T: Scalar>(a: &Matrix<T>, threshold: f64) -> usize {
    a.singular_values().iter().filter(|&&s| s > threshold).count()
}

/// Whether some `k`-subset of the columns is linearly dependent.
fn some_subset_dependent<T: Scalar>(a: &Matrix<T>, k: usize, threshold: f64, exec: Execution) -> bool {
    for chunk in &(0..a.cols()).combinations(k).chunks(CHUNK) {
        let chunk: Vec<Vec<usize>> = chunk.collect();
        if exec.any(&chunk, |cols| columns_dependent(a, cols, threshold)) {
            return true;
        }
    }
    false
}

/// Smallest number of linearly dependent columns, found by enumerating
/// column subsets in increasing size. Returns `cols + 1` when the columns are
/// linearly independent.
///
/// A subset counts as dependent when its smallest singular value is at most
/// `1e-10·‖A‖₂`.
pub fn spark<T: Scalar>(a: &Matrix<T>, size_limit: usize) -> Result<usize> {
    if a.cols() > size_limit {
        return Err(Error::SizeLimit(format!(
            "spark enumeration limited to {size_limit} columns, got {}",
            a.cols()
        )));
    }
    let threshold = rank_threshold(a);
    let rank = numerical_rank(a, threshold);
    let exec = Execution::default();
    for k in 1..=a.cols() {
        // any rank + 1 columns are dependent
        if k > rank || some_subset_dependent(a, k, threshold, exec) {
            return Ok(k);
        }
    }
    Ok(a.cols() + 1)
}

/// Whether every `rows` columns are linearly independent.
///
/// Checks the `rows`-subsets directly rather than going through [`spark`];
/// the two agree because independence of every `m`-subset implies it for all
/// smaller subsets.
pub fn is_full_spark<T: Scalar>(a: &Matrix<T>) -> Result<bool> {
    let (m, n) = (a.rows(), a.cols());
    if m > n {
        return arg_err(format!("full spark needs rows <= cols, got {m}x{n}"));
    }
    if n > SPARK_SIZE_LIMIT {
        return Err(Error::SizeLimit(format!(
            "spark enumeration limited to {SPARK_SIZE_LIMIT} columns, got {n}"
        )));
    }
    let threshold = rank_threshold(a);
    Ok(a.spectral_norm() > 0.0 && !some_subset_dependent(a, m, threshold, Execution::default()))
}

enum Fit<T: Scalar> {
    Admitted(SparseSignal<T>),
    Rejected,
    Skipped,
}

/// All solutions of `Az = b` with at most `s` nonzeros, by least squares on
/// every support of size `min(s, rows)`.
///
/// A support is admitted when its least-squares residual is at most `tol`;
/// its solution is trimmed to the entries above [`ZERO_TOL`], so sparser
/// solutions surface through every support containing them and are
/// deduplicated. With `s ≥ rows` every full-rank `rows`-subset yields an
/// exact fit and all of them are returned.
pub fn l0_bruteforce_solutions<T: Scalar>(
    a: &Matrix<T>,
    b: &Vector<T>,
    s: usize,
    tol: f64,
) -> Result<L0SolutionSet<T>> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m {
        return arg_err(format!("b has length {}, A has {m} rows", b.len()));
    }
    if s == 0 || s > n {
        return arg_err(format!("sparsity must be in 1..={n}, got {s}"));
    }
    if !(tol >= 0.0) {
        return arg_err("residual tolerance must be nonnegative");
    }
    let k = s.min(m);
    let count = binomial(n, k);
    if count > L0_MAX_SUPPORTS {
        return Err(Error::SizeLimit(format!(
            "C({n}, {k}) = {count} supports exceeds the limit of {L0_MAX_SUPPORTS}"
        )));
    }

    let exec = Execution::default();
    let mut groups: BTreeMap<Vec<usize>, Vec<SparseSignal<T>>> = BTreeMap::new();
    let mut skipped = Vec::new();
    for chunk in &(0..n).combinations(k).chunks(CHUNK) {
        let chunk: Vec<Vec<usize>> = chunk.collect();
        let fits = exec.map(&chunk, |cols| {
            let support = SupportSet::from_sorted_unchecked(cols.clone(), n);
            let sub = match submatrix_columns(a, &support) {
                Ok(sub) => sub,
                Err(_) => return Fit::Skipped,
            };
            match least_squares(&sub, b, DEFAULT_RANK_TOL) {
                Ok((coef, residual)) if residual <= tol => {
                    let mut z = Vector::zeros(n);
                    for (i, &j) in cols.iter().enumerate() {
                        z[j] = coef[i];
                    }
                    Fit::Admitted(SparseSignal::from_dense(&z, ZERO_TOL))
                }
                Ok(_) => Fit::Rejected,
                Err(_) => Fit::Skipped,
            }
        });
        for (cols, fit) in chunk.into_iter().zip(fits) {
            match fit {
                Fit::Admitted(z) => {
                    let group = groups.entry(z.support().indices().to_vec()).or_default();
                    let dense = z.to_dense();
                    if !group.iter().any(|w| max_abs_diff(&w.to_dense(), &dense) <= ZERO_TOL) {
                        group.push(z);
                    }
                }
                Fit::Rejected => {}
                Fit::Skipped => skipped.push(SupportSet::from_sorted_unchecked(cols, n)),
            }
        }
    }

    Ok(L0SolutionSet {
        solutions: groups.into_values().flatten().collect(),
        s_bound: s,
        residual_tol: tol,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_matrix, Complex64};
    use nalgebra::{dvector, DVector};
    use proptest::prelude::*;

    fn toy() -> Matrix<f64> {
        Matrix::from_row_major(2, 3, vec![1.0, 0.0, 1.0, 0.0, 1.0, 1.0]).unwrap()
    }

    fn doubled_identity() -> Matrix<f64> {
        Matrix::from_row_major(2, 4, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]).unwrap()
    }

    fn det3(a: &Matrix<f64>, c: [usize; 3]) -> f64 {
        let g = |i: usize, j: usize| a.get(i, c[j]);
        g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1)) - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
            + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0))
    }

    #[test]
    fn spark_examples() {
        assert_eq!(spark(&doubled_identity(), SPARK_SIZE_LIMIT).unwrap(), 2);
        let zero_col = Matrix::from_row_major(2, 3, vec![1.0, 0.0, 2.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(spark(&zero_col, SPARK_SIZE_LIMIT).unwrap(), 1);
        assert_eq!(spark(&toy(), SPARK_SIZE_LIMIT).unwrap(), 3);
        assert_eq!(spark(&Matrix::<f64>::identity(3), SPARK_SIZE_LIMIT).unwrap(), 4);
    }

    #[test]
    fn spark_size_guard() {
        let a = gaussian_matrix(2, 25, 0).unwrap();
        assert!(matches!(spark(&a, SPARK_SIZE_LIMIT), Err(Error::SizeLimit(_))));
        assert!(matches!(is_full_spark(&a), Err(Error::SizeLimit(_))));
    }

    #[test]
    fn full_spark_examples() {
        assert!(is_full_spark(&toy()).unwrap());
        assert!(!is_full_spark(&doubled_identity()).unwrap());
        assert!(is_full_spark(&toy().adjoint()).is_err());
    }

    #[test]
    fn gaussian_full_spark_matches_determinants() {
        for seed in 0..5 {
            let a = gaussian_matrix(3, 6, seed).unwrap();
            let oracle = (0..6)
                .combinations(3)
                .all(|c| det3(&a, [c[0], c[1], c[2]]).abs() > 1e-10);
            assert_eq!(is_full_spark(&a).unwrap(), oracle);
            assert!(oracle);
            assert_eq!(spark(&a, SPARK_SIZE_LIMIT).unwrap(), 4);
        }
    }

    #[test]
    fn planted_dependency_lowers_spark() {
        // column 4 is a combination of columns 0..3, so 4 columns are dependent
        let mut a = gaussian_matrix(4, 7, 3).unwrap().into_inner();
        let combo = a.column(0) + a.column(1) * 2.0 - a.column(2) * 0.5;
        a.set_column(4, &combo);
        let a = Matrix::new(a).unwrap();
        assert_eq!(spark(&a, SPARK_SIZE_LIMIT).unwrap(), 4);
        assert!(!is_full_spark(&a).unwrap());
    }

    #[test]
    fn complex_spark() {
        let z = Complex64::new(0.0, 1.0);
        let a = Matrix::from_row_major(2, 3, vec![Complex64::new(1.0, 0.0), z, z, z, -Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)])
            .unwrap();
        // second column is i times the first
        assert_eq!(spark(&a, SPARK_SIZE_LIMIT).unwrap(), 2);
    }

    #[test]
    fn l0_examples() {
        let a = toy();
        let b = dvector![1.0, 1.0];
        let one = l0_bruteforce_solutions(&a, &b, 1, 1e-12).unwrap();
        assert_eq!(one.solutions.len(), 1);
        assert!(one.is_unique_solution(&dvector![0.0, 0.0, 1.0]));

        let two = l0_bruteforce_solutions(&a, &b, 2, 1e-12).unwrap();
        let dense: Vec<DVector<f64>> = two.solutions.iter().map(|z| z.to_dense()).collect();
        // lexicographic by support: {0,1} before {2}
        assert_eq!(dense, vec![dvector![1.0, 1.0, 0.0], dvector![0.0, 0.0, 1.0]]);
        assert!(!two.is_unique_solution(&dvector![0.0, 0.0, 1.0]));

        let zero = l0_bruteforce_solutions(&a, &dvector![0.0, 0.0], 2, 1e-12).unwrap();
        assert_eq!(zero.solutions.len(), 1);
        assert_eq!(zero.solutions[0].sparsity(), 0);
    }

    #[test]
    fn l0_skips_rank_deficient_supports() {
        let a = doubled_identity();
        let set = l0_bruteforce_solutions(&a, &dvector![1.0, 0.0], 2, 1e-12).unwrap();
        assert_eq!(set.skipped.len(), 2);
        assert!(set.skipped.iter().all(|t| t.indices() == [0, 2] || t.indices() == [1, 3]));
        let dense: Vec<DVector<f64>> = set.solutions.iter().map(|z| z.to_dense()).collect();
        assert_eq!(dense, vec![dvector![1.0, 0.0, 0.0, 0.0], dvector![0.0, 0.0, 1.0, 0.0]]);
    }

    #[test]
    fn l0_guards() {
        let a = gaussian_matrix(10, 40, 1).unwrap();
        let b = DVector::zeros(10);
        assert!(matches!(l0_bruteforce_solutions(&a, &b, 10, 1e-9), Err(Error::SizeLimit(_))));
        assert!(l0_bruteforce_solutions(&a, &b, 0, 1e-9).is_err());
        assert!(l0_bruteforce_solutions(&a, &DVector::zeros(3), 2, 1e-9).is_err());
    }

    #[test]
    fn sparse_signal_contract() {
        let t = SupportSet::new(vec![1, 3], 5).unwrap();
        assert!(SparseSignal::new(t.clone(), vec![1.0]).is_err());
        assert!(SparseSignal::new(t.clone(), vec![1.0, 0.0]).is_err());
        let x = SparseSignal::new(t, vec![2.0, -1.0]).unwrap();
        assert_eq!(x.to_dense(), dvector![0.0, 2.0, 0.0, -1.0, 0.0]);
        assert_eq!(SparseSignal::from_dense(&x.to_dense(), ZERO_TOL), x);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(12, 5), 792);
        assert_eq!(binomial(5, 7), 0);
        assert_eq!(binomial(60, 30), 118264581564861424);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn below_half_spark_solutions_are_unique(seed in 0u64..10_000, s in 1usize..=2) {
            // 5x8 Gaussian has spark 6, so any 2-sparse x is the only solution with <= 2 nonzeros
            let a = gaussian_matrix(5, 8, seed).unwrap();
            let x = DVector::from_fn(8, |j, _| if j < s { 1.0 + j as f64 } else { 0.0 });
            let b = a.mul_vec(&x);
            let set = l0_bruteforce_solutions(&a, &b, s, 1e-9).unwrap();
            prop_assert!(set.is_unique_solution(&x));
            for z in &set.solutions {
                prop_assert!(z.sparsity() <= s);
                prop_assert!((a.mul_vec(&z.to_dense()) - &b).norm() <= 1e-9);
            }
        }
    }
}
