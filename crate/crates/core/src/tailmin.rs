//! Iterative ℓ1 tail minimization.
//!
//! Start from basis pursuit, then repeatedly take the `s` largest
//! coefficients as the estimated support `T` and solve
//! `min ‖(coefficients)_{Tᶜ}‖₁` subject to the measurements. Stops when two
//! successive iterates are closer than `eps_outer`, when a support repeats,
//! or after `max_outer` solves.

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Result};
use crate::linalg::{norm1, Matrix, Scalar, SupportSet, Vector};
use crate::solver::{SolverOptions, SolverReport, Splitting};

/// Indices of the `s` entries of largest modulus, ties toward the smaller
/// index, returned in ascending order.
pub fn top_s_support<T: Scalar>(x: &Vector<T>, s: usize) -> Result<SupportSet> {
    if s == 0 || s > x.len() {
        return arg_err(format!("s must lie in 1..={} (got {s})", x.len()));
    }
    Ok(top_indices(x, s))
}

fn top_indices<T: Scalar>(x: &Vector<T>, s: usize) -> SupportSet {
    let mut order: Vec<usize> = (0..x.len()).collect();
    // stable sort keeps equal moduli in index order
    order.sort_by(|&i, &j| x[j].modulus().total_cmp(&x[i].modulus()));
    let mut picked = order[..s].to_vec();
    picked.sort_unstable();
    SupportSet::from_sorted_unchecked(picked, x.len())
}

/// Sum of moduli outside the `s` largest entries.
pub fn tail_l1<T: Scalar>(x: &Vector<T>, s: usize) -> Result<f64> {
    if s > x.len() {
        return arg_err(format!("s must be at most {} (got {s})", x.len()));
    }
    if s == 0 {
        return Ok(norm1(x));
    }
    let top = top_indices(x, s);
    let mask = top.mask();
    Ok(x.iter().zip(mask).filter(|(_, inside)| !inside).map(|(v, _)| v.modulus()).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Converged,
    MaxIter,
    SupportCycle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterOptions {
    pub eps_outer: f64,
    pub max_outer: usize,
}

impl Default for OuterOptions {
    fn default() -> Self {
        Self { eps_outer: 1e-8, max_outer: 50 }
    }
}

impl OuterOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_outer.is_finite() && self.eps_outer > 0.0) || self.max_outer == 0 {
            return arg_err("eps_outer must be positive and max_outer at least 1");
        }
        Ok(())
    }
}

/// Iterates `x̂₁, x̂₂, …` and the supports `T₁, T₂, …` used to produce
/// `x̂₂, x̂₃, …`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailMinTrace<T: Scalar> {
    #[serde(serialize_with = "serialize_iterates")]
    pub iterates: Vec<Vector<T>>,
    pub supports: Vec<SupportSet>,
    pub terminated_by: Termination,
}

fn serialize_iterates<T: Scalar, S: serde::Serializer>(
    v: &[Vector<T>],
    ser: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    struct Wrap<'a, T: Scalar>(&'a Vector<T>);
    impl<T: Scalar> Serialize for Wrap<'_, T> {
        fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            crate::solver::serialize_vector(self.0, s)
        }
    }
    let mut seq = ser.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&Wrap(x))?;
    }
    seq.end()
}

/// Tail minimization in synthesis form: `b = Ax` with `x` sparse.
pub fn tail_min_synthesis<T: Scalar>(
    a: &Matrix<T>,
    b: &Vector<T>,
    s: usize,
    opts: &SolverOptions,
    outer: &OuterOptions,
) -> Result<(SolverReport<T>, TailMinTrace<T>)> {
    if s == 0 || s >= a.cols() {
        return arg_err(format!("s must lie in 1..{} (got {s})", a.cols()));
    }
    let splitting = Splitting::synthesis(a, b)?;
    run(&splitting, s, opts, outer, |x| x.clone())
}

/// Tail minimization in analysis form: `b = Af` with `D*f` compressible;
/// supports are estimated from `D*f̂`.
pub fn tail_min_analysis<T: Scalar>(
    a: &Matrix<T>,
    d: &Matrix<T>,
    b: &Vector<T>,
    s: usize,
    opts: &SolverOptions,
    outer: &OuterOptions,
) -> Result<(SolverReport<T>, TailMinTrace<T>)> {
    if a.cols() != d.rows() {
        return arg_err(format!("A has {} columns but D has {} rows", a.cols(), d.rows()));
    }
    if s == 0 || s >= d.cols() {
        return arg_err(format!("s must lie in 1..{} (got {s})", d.cols()));
    }
    let splitting = Splitting::analysis(a, d, b)?;
    let adjoint = d.as_inner().adjoint();
    run(&splitting, s, opts, outer, |f| &adjoint * f)
}

fn run<T: Scalar>(
    splitting: &Splitting<T>,
    s: usize,
    opts: &SolverOptions,
    outer: &OuterOptions,
    coefficients: impl Fn(&Vector<T>) -> Vector<T>,
) -> Result<(SolverReport<T>, TailMinTrace<T>)> {
    outer.validate()?;
    let n = splitting.coefficients();
    let first = splitting.solve(&vec![1.0; n], opts)?;
    let mut total_iterations = first.iterations;
    let mut iterates = vec![first.solution.clone()];
    let mut reports = vec![first];
    let mut supports: Vec<SupportSet> = Vec::new();
    let mut terminated_by = Termination::MaxIter;

    while iterates.len() < outer.max_outer {
        let prev = iterates.last().expect("at least one iterate");
        let support = top_indices(&coefficients(prev), s);
        if let Some(pos) = supports.iter().position(|t| *t == support) {
            if pos + 1 == supports.len() {
                // same support as the last solve: the next iterate is identical
                let again = reports.last().expect("a report per iterate").clone();
                supports.push(support);
                iterates.push(again.solution.clone());
                reports.push(again);
                terminated_by = Termination::Converged;
            } else {
                terminated_by = Termination::SupportCycle;
            }
            break;
        }
        let mut weights = vec![1.0; n];
        for &j in support.indices() {
            weights[j] = 0.0;
        }
        supports.push(support);
        let report = splitting.solve(&weights, opts)?;
        total_iterations += report.iterations;
        let step = (&report.solution - prev).norm();
        iterates.push(report.solution.clone());
        reports.push(report);
        if step < outer.eps_outer {
            terminated_by = Termination::Converged;
            break;
        }
    }

    let pick = match terminated_by {
        Termination::SupportCycle => {
            let mut best = (0, f64::INFINITY);
            for (k, x) in iterates.iter().enumerate() {
                let tail = tail_l1(&coefficients(x), s)?;
                if tail < best.1 {
                    best = (k, tail);
                }
            }
            best.0
        }
        _ => iterates.len() - 1,
    };
    let mut report = reports.swap_remove(pick);
    report.iterations = total_iterations;
    Ok((report, TailMinTrace { iterates, supports, terminated_by }))
}
