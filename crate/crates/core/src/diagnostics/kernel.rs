use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SparseSignal;
use crate::error::{arg_err, Error, Result};
use crate::exec::Execution;
use crate::linalg::{kernel_basis, submatrix_columns, Matrix, SupportSet, Vector, DEFAULT_RANK_TOL};
use crate::solver::simplex::{solve_standard_form, LpOutcome};
use crate::tailmin::top_s_support;

/// Largest support [`nsp_holds`] accepts (it solves `2^(|T|-1)` LPs).
pub const NSP_MAX_SUPPORT: usize = 20;

// LP optima at or above 1 - this count as violations
const STRICT_MARGIN: f64 = 1e-9;

/// Rows of an orthonormal kernel basis split by a support: `on` holds the
/// rows in the support, `off` the rest.
struct SplitKernel {
    on: DMatrix<f64>,
    off: DMatrix<f64>,
}

impl SplitKernel {
    fn new(a: &Matrix<f64>, support: &SupportSet) -> Option<Self> {
        let basis = kernel_basis(a, DEFAULT_RANK_TOL);
        if basis.cols() == 0 {
            return None;
        }
        let v = basis.as_inner();
        let off_rows = support.complement();
        Some(Self { on: v.select_rows(support.indices()), off: v.select_rows(off_rows.indices()) })
    }

    fn dim(&self) -> usize {
        self.on.ncols()
    }

    /// Whether some nonzero kernel vector vanishes off the support. The basis
    /// is orthonormal, so the threshold is absolute.
    fn degenerate(&self) -> bool {
        self.off.nrows() < self.dim() || self.off.clone().singular_values().min() <= DEFAULT_RANK_TOL
    }

    /// `max g·c` over `‖off·c‖₁ ≤ 1`, written in standard form with
    /// `c = c⁺ − c⁻` and `off·c = e⁺ − e⁻`. Bounded when `off` has full
    /// column rank.
    fn max_over_unit_tail(&self, g: &DVector<f64>) -> Result<f64> {
        let (r, k) = self.off.shape();
        let cols = 2 * k + 2 * r + 1;
        let mut lp = DMatrix::zeros(r + 1, cols);
        lp.view_mut((0, 0), (r, k)).copy_from(&self.off);
        lp.view_mut((0, k), (r, k)).copy_from(&(-&self.off));
        for i in 0..r {
            lp[(i, 2 * k + i)] = -1.0;
            lp[(i, 2 * k + r + i)] = 1.0;
        }
        for j in 2 * k..cols {
            lp[(r, j)] = 1.0;
        }
        let mut rhs = DVector::zeros(r + 1);
        rhs[r] = 1.0;
        let mut cost = DVector::zeros(cols);
        for j in 0..k {
            cost[j] = -g[j];
            cost[k + j] = g[j];
        }
        match solve_standard_form(&lp, &rhs, &cost)? {
            LpOutcome::Optimal { objective, .. } => Ok(-objective),
            LpOutcome::Infeasible => Err(Error::Infeasible("tail LP has no feasible point".into())),
            LpOutcome::Unbounded => Err(Error::RankDeficient("tail LP is unbounded".into())),
        }
    }
}

/// Null space property on `t`: `‖v_T‖₁ < ‖v_{T^c}‖₁` for every nonzero
/// `v ∈ ker A`.
///
/// By homogeneity this is `max ‖v_T‖₁ < 1` over kernel vectors with
/// `‖v_{T^c}‖₁ ≤ 1`; the maximum is taken over one LP per sign pattern on
/// `T`, with patterns identified up to a global sign. An optimum within
/// `1e-9` of 1 counts as a violation.
pub fn nsp_holds(a: &Matrix<f64>, t: &SupportSet) -> Result<bool> {
    if t.ambient() != a.cols() {
        return arg_err(format!("support lives in dimension {}, A has {} columns", t.ambient(), a.cols()));
    }
    if t.len() > NSP_MAX_SUPPORT {
        return Err(Error::SizeLimit(format!(
            "null space property check limited to |T| <= {NSP_MAX_SUPPORT}, got {}",
            t.len()
        )));
    }
    let Some(kernel) = SplitKernel::new(a, t) else {
        return Ok(true);
    };
    if kernel.degenerate() {
        return Ok(false);
    }
    if t.is_empty() {
        return Ok(true);
    }
    let patterns: Vec<u32> = (0..1u32 << (t.len() - 1)).collect();
    let optima = Execution::default().map(&patterns, |&bits| {
        // entry 0 fixed to +1
        let signs = DVector::from_fn(t.len(), |i, _| if i > 0 && bits >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 });
        kernel.max_over_unit_tail(&(kernel.on.transpose() * signs))
    });
    for opt in optima {
        if opt? >= 1.0 - STRICT_MARGIN {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether `x` is the unique minimizer of `‖z‖₁` subject to `Az = Ax`:
/// `|Σ_{j∈S} sgn(xⱼ)vⱼ| < ‖v_{S^c}‖₁` for every nonzero `v ∈ ker A`, with
/// `S` the support of `x`.
///
/// A nonzero kernel vector vanishing off `S` makes the inequality impossible,
/// so such kernels give `false`. Otherwise one LP suffices since the
/// feasible set is symmetric.
pub fn recovery_certificate(a: &Matrix<f64>, x: &SparseSignal<f64>) -> Result<bool> {
    if x.ambient() != a.cols() {
        return arg_err(format!("signal has length {}, A has {} columns", x.ambient(), a.cols()));
    }
    let Some(kernel) = SplitKernel::new(a, x.support()) else {
        return Ok(true);
    };
    if kernel.degenerate() {
        return Ok(false);
    }
    if x.sparsity() == 0 {
        return Ok(true);
    }
    let signs = DVector::from_iterator(x.sparsity(), x.values().iter().map(|v| v.signum()));
    let opt = kernel.max_over_unit_tail(&(kernel.on.transpose() * signs))?;
    Ok(opt < 1.0 - STRICT_MARGIN)
}

/// A signal on which basis pursuit cannot succeed uniquely, with the kernel
/// vector that proves it.
#[derive(Debug, Clone)]
pub struct FailureWitness {
    pub x: SparseSignal<f64>,
    /// Unit kernel vector supported on `columns`.
    pub v: Vector<f64>,
    pub columns: SupportSet,
    pub t0: SupportSet,
    /// `‖v_{T0}‖₁`.
    pub mass_t0: f64,
    /// `‖v_{T0^c}‖₁`.
    pub mass_complement: f64,
}

/// Builds an `s`-sparse signal that basis pursuit does not recover uniquely.
///
/// Picks `rows + 1` columns at random, takes the kernel vector `v` of that
/// submatrix and puts `x` on the `s` largest entries of `v` with matching
/// signs and magnitudes drawn from `[1, 2]`. Since `2s > rows` those entries
/// carry at least half of `‖v‖₁`, so `‖x − tv‖₁ ≤ ‖x‖₁` for small `t > 0`.
///
/// Requires the chosen columns to be in general position (guaranteed for a
/// full spark matrix); otherwise fails with `RankDeficient`.
pub fn construct_bp_failure(a: &Matrix<f64>, s: usize, seed: u64) -> Result<FailureWitness> {
    let (m, n) = (a.rows(), a.cols());
    if n < m + 1 {
        return arg_err(format!("need at least {} columns, got {n}", m + 1));
    }
    if 2 * s <= m || s >= m {
        return arg_err(format!("s must satisfy {m}/2 < s < {m}, got {s}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, n, m + 1).into_vec();
    picked.sort_unstable();
    let columns = SupportSet::from_sorted_unchecked(picked, n);
    let sub = submatrix_columns(a, &columns)?;
    let basis = kernel_basis(&sub, DEFAULT_RANK_TOL);
    if basis.cols() != 1 {
        return Err(Error::RankDeficient(format!(
            "columns {columns} span a kernel of dimension {}",
            basis.cols()
        )));
    }
    let local = basis.as_inner().column(0);
    let scale = local.amax();
    if local.iter().any(|c| c.abs() <= 1e-12 * scale) {
        return Err(Error::RankDeficient(format!("kernel vector on columns {columns} has a zero entry")));
    }
    // first entry positive
    let sign = local[0].signum();
    let mut v = Vector::zeros(n);
    for (k, &j) in columns.indices().iter().enumerate() {
        v[j] = sign * local[k];
    }

    let t0 = top_s_support(&v, s)?;
    let values = t0
        .indices()
        .iter()
        .map(|&j| v[j].signum() * rng.random_range(1.0..=2.0))
        .collect();
    let x = SparseSignal::new(t0.clone(), values)?;
    let mass_t0 = t0.indices().iter().map(|&j| v[j].abs()).sum();
    let mass_complement = t0.complement().indices().iter().map(|&j| v[j].abs()).sum();
    Ok(FailureWitness { x, v, columns, t0, mass_t0, mass_complement })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gaussian_matrix;
    use crate::solver::simplex_bp;
    use nalgebra::dvector;
    use proptest::prelude::*;

    fn toy() -> Matrix<f64> {
        Matrix::from_row_major(2, 3, vec![1.0, 0.0, 1.0, 0.0, 1.0, 1.0]).unwrap()
    }

    fn set(idx: &[usize], n: usize) -> SupportSet {
        SupportSet::new(idx.to_vec(), n).unwrap()
    }

    fn l1_on(v: &DVector<f64>, idx: &[usize]) -> f64 {
        idx.iter().map(|&j| v[j].abs()).sum()
    }

    #[test]
    fn nsp_examples() {
        // kernel is t(1, 1, -1)
        assert!(nsp_holds(&toy(), &set(&[2], 3)).unwrap());
        assert!(!nsp_holds(&toy(), &set(&[0, 1], 3)).unwrap());
        let a = Matrix::from_row_major(2, 4, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(!nsp_holds(&a, &set(&[0], 4)).unwrap());
    }

    #[test]
    fn nsp_trivial_and_degenerate_cases() {
        assert!(nsp_holds(&Matrix::<f64>::identity(3), &set(&[0, 1, 2], 3)).unwrap());
        // kernel vector vanishing off T
        assert!(!nsp_holds(&toy(), &set(&[0, 1, 2], 3)).unwrap());
        assert!(nsp_holds(&toy(), &SupportSet::empty(3)).unwrap());
        let wide = gaussian_matrix(2, 30, 0).unwrap();
        let big = SupportSet::new((0..21).collect(), 30).unwrap();
        assert!(matches!(nsp_holds(&wide, &big), Err(Error::SizeLimit(_))));
    }

    #[test]
    fn certificate_examples() {
        let a = toy();
        let good = SparseSignal::from_dense(&dvector![0.0, 0.0, 1.0], 0.0);
        assert!(recovery_certificate(&a, &good).unwrap());
        let bp = simplex_bp(&a, &dvector![1.0, 1.0]).unwrap();
        assert!((bp.solution - good.to_dense()).norm() < 1e-12);

        let bad = SparseSignal::from_dense(&dvector![1.0, 1.0, 0.0], 0.0);
        assert!(!recovery_certificate(&a, &bad).unwrap());

        let square = Matrix::from_row_major(2, 2, vec![2.0, 1.0, 1.0, 3.0]).unwrap();
        let any = SparseSignal::from_dense(&dvector![1.0, -4.0], 0.0);
        assert!(recovery_certificate(&square, &any).unwrap());
    }

    #[test]
    fn failure_on_toy() {
        let w = construct_bp_failure(&toy(), 2, 0).unwrap_err();
        // s = 2 is not below m = 2
        assert!(matches!(w, Error::Argument(_)));
        let a = gaussian_matrix(3, 5, 4).unwrap();
        assert!(construct_bp_failure(&a, 1, 0).is_err());
        assert!(construct_bp_failure(&a, 3, 0).is_err());
        assert!(construct_bp_failure(&Matrix::<f64>::identity(3), 2, 0).is_err());
    }

    #[test]
    fn failure_witness_contract() {
        for seed in 0..20 {
            let a = gaussian_matrix(6, 10, 40 + seed).unwrap();
            let w = construct_bp_failure(&a, 4, seed).unwrap();
            assert!(a.mul_vec(&w.v).norm() <= 1e-8 * a.spectral_norm());
            assert!(w.v.iter().filter(|c| **c != 0.0).count() <= 7);
            assert!(w.mass_t0 >= w.mass_complement);
            assert_eq!(w.x.support(), &w.t0);
            for (&j, &xj) in w.t0.indices().iter().zip(w.x.values()) {
                assert_eq!(xj.signum() * w.v[j], w.v[j].abs());
                assert!((1.0..=2.0).contains(&xj.abs()));
            }
            assert!(!recovery_certificate(&a, &w.x).unwrap());
        }
    }

    #[test]
    fn failure_is_deterministic() {
        let a = gaussian_matrix(5, 9, 2).unwrap();
        let w1 = construct_bp_failure(&a, 3, 17).unwrap();
        let w2 = construct_bp_failure(&a, 3, 17).unwrap();
        assert_eq!(w1.x, w2.x);
        assert_eq!(w1.v, w2.v);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        // with a one-dimensional kernel both conditions reduce to comparing
        // masses of the single kernel vector
        #[test]
        fn one_dimensional_kernel_oracle(seed in 0u64..100_000, mask in 0u32..(1 << 6)) {
            let a = gaussian_matrix(5, 6, seed).unwrap();
            let k = kernel_basis(&a, DEFAULT_RANK_TOL);
            let v = k.as_inner().column(0).into_owned();
            let on: Vec<usize> = (0..6).filter(|j| mask >> j & 1 == 1).collect();
            let off: Vec<usize> = (0..6).filter(|j| mask >> j & 1 == 0).collect();
            let (mt, mc) = (l1_on(&v, &on), l1_on(&v, &off));
            prop_assume!((mt - mc).abs() > 1e-6);
            prop_assert_eq!(nsp_holds(&a, &set(&on, 6)).unwrap(), mt < mc);

            let x = DVector::from_fn(6, |j, _| if on.contains(&j) { if j % 2 == 0 { 1.5 } else { -0.5 } } else { 0.0 });
            let xs = SparseSignal::from_dense(&x, 0.0);
            let phi: f64 = on.iter().map(|&j| x[j].signum() * v[j]).sum();
            prop_assume!((phi.abs() - mc).abs() > 1e-6);
            prop_assert_eq!(recovery_certificate(&a, &xs).unwrap(), phi.abs() < mc);
        }

        #[test]
        fn certificate_agrees_with_simplex(seed in 0u64..100_000, s in 1usize..=4) {
            let a = gaussian_matrix(5, 9, seed).unwrap();
            let x = DVector::from_fn(9, |j, _| if j < s { (j as f64 + 1.0) * if j % 2 == 0 { 1.0 } else { -1.0 } } else { 0.0 });
            let b = a.mul_vec(&x);
            let bp = simplex_bp(&a, &b).unwrap();
            let rel = (&bp.solution - &x).norm() / x.norm();
            if recovery_certificate(&a, &SparseSignal::from_dense(&x, 0.0)).unwrap() {
                prop_assert!(rel < 1e-6);
            } else {
                prop_assert!(rel > 1e-6 || (bp.objective - x.abs().sum()).abs() < 1e-9);
            }
        }
    }
}
