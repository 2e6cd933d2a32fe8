//! Equality-constrained weighted ℓ1 minimization.
//!
//! * [`solve_weighted_l1`]: `min Σ wⱼ|xⱼ|` subject to `Ax = b`.
//! * [`solve_weighted_l1_analysis`]: `min Σ wⱼ|(D*f)ⱼ|` subject to `Af = b`.
//! * [`simplex_bp`]: exact basis pursuit for real data via a dense simplex LP.
//!
//! The first two share one operator-splitting engine (ADMM). Zero weights are
//! admitted, in which case the proximal step is the identity on that entry.

mod admm;
pub mod simplex;

use nalgebra::ComplexField;
use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{arg_err, Result};
use crate::linalg::{Field, Matrix, Scalar, Vector};

pub use simplex::simplex_bp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Splitting penalty ρ.
    pub penalty: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
    /// After the splitting iterations, re-solve on the detected support
    /// (synthesis) or cosupport (analysis) and keep the result if it is
    /// feasible and no worse.
    pub polish: bool,
    /// Rebalance ρ every few iterations so primal and dual residuals stay
    /// within a factor of ten of each other.
    pub adaptive_penalty: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { penalty: 1.0, abs_tol: 1e-8, rel_tol: 1e-8, max_iter: 20_000, polish: true, adaptive_penalty: false }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.penalty) || !positive(self.abs_tol) || !positive(self.rel_tol) {
            return arg_err("solver penalty and tolerances must be positive and finite");
        }
        if self.max_iter == 0 {
            return arg_err("max_iter must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverReport<T: Scalar> {
    #[serde(serialize_with = "serialize_vector")]
    pub solution: Vector<T>,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Real vectors as a list of numbers, complex vectors as `[re, im]` pairs.
pub fn serialize_vector<T: Scalar, S: Serializer>(v: &Vector<T>, ser: S) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = ser.serialize_seq(Some(v.len()))?;
    for x in v.iter() {
        match T::FIELD {
            Field::Real => seq.serialize_element(&x.re())?,
            Field::Complex => seq.serialize_element(&[x.re(), x.im()])?,
        }
    }
    seq.end()
}

/// Proximal map of `κ|·|`: shrinks the modulus by `κ`, keeps the phase.
pub fn soft_threshold<T: Scalar>(z: T, kappa: f64) -> T {
    let m = z.modulus();
    if m <= kappa {
        T::zero()
    } else {
        z.scale(1.0 - kappa / m)
    }
}

fn check_weights(weights: &[f64], expected: usize) -> Result<()> {
    if weights.len() != expected {
        return arg_err(format!("expected {expected} weights, got {}", weights.len()));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return arg_err("weights must be finite and nonnegative");
    }
    Ok(())
}

/// Weighted ℓ1 objective `Σ wⱼ|xⱼ|`.
pub fn weighted_l1<T: Scalar>(x: &Vector<T>, weights: &[f64]) -> f64 {
    x.iter().zip(weights).map(|(v, w)| w * v.modulus()).sum()
}

/// `min Σ wⱼ|xⱼ|` subject to `Ax = b`, for `A` of full row rank.
pub fn solve_weighted_l1<T: Scalar>(
    a: &Matrix<T>,
    b: &Vector<T>,
    weights: &[f64],
    opts: &SolverOptions,
) -> Result<SolverReport<T>> {
    opts.validate()?;
    check_weights(weights, a.cols())?;
    admm::Splitting::synthesis(a, b)?.solve(weights, opts)
}

/// `min Σ wⱼ|(D*f)ⱼ|` subject to `Af = b`, for `A` of full row rank and `D`
/// of full row rank.
pub fn solve_weighted_l1_analysis<T: Scalar>(
    a: &Matrix<T>,
    d: &Matrix<T>,
    b: &Vector<T>,
    weights: &[f64],
    opts: &SolverOptions,
) -> Result<SolverReport<T>> {
    opts.validate()?;
    if a.cols() != d.rows() {
        return arg_err(format!("A has {} columns but D has {} rows", a.cols(), d.rows()));
    }
    check_weights(weights, d.cols())?;
    admm::Splitting::analysis(a, d, b)?.solve(weights, opts)
}

pub use admm::Splitting;
