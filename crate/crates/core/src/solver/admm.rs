use nalgebra::{DMatrix, DVector, SVD};

use super::{soft_threshold, weighted_l1, SolverOptions, SolverReport};
use crate::error::{arg_err, Error, Result};
use crate::linalg::{kernel_basis, AffineProjector, Matrix, Scalar, Vector, DEFAULT_RANK_TOL};

const ADAPT_EVERY: usize = 10;
const ADAPT_UNTIL: usize = 5_000;
const ADAPT_RATIO: f64 = 10.0;
const CERTIFY_EVERY: usize = 25;
const ZERO_FLOOR: f64 = 1e-7;
const COEFF_FLOORS: [f64; 3] = [1e-6, 1e-5, 1e-4];

/// Analysis operator `D*` together with `D` (for the dual residual), and the
/// constraint data for the cosparse refit.
#[derive(Debug, Clone)]
struct AnalysisOp<T: Scalar> {
    adjoint: DMatrix<T>,
    forward: DMatrix<T>,
    a: DMatrix<T>,
    b: DVector<T>,
}

/// Data for support refits in the synthesis form: `A`, `b` and the factors
/// of `A* = QR`.
#[derive(Debug, Clone)]
struct Refit<T: Scalar> {
    a: DMatrix<T>,
    b: DVector<T>,
    q: DMatrix<T>,
    r: DMatrix<T>,
}

struct Certified<T: Scalar> {
    x: DVector<T>,
    residual: f64,
    violation: f64,
}

/// ADMM for `min Σ wⱼ|(D*f)ⱼ|` subject to `Af = b`, with `D = I` in the
/// synthesis case.
///
/// Splitting `z = D*f`, the `f`-step minimizes `‖D*f − y‖₂²` over the affine
/// set, which is an affine map `f = K·y + k₀` precomputed at construction.
/// The `z`-step is entrywise soft thresholding with `κⱼ = wⱼ/ρ`. The
/// factorization depends on `(A, D, b)` only, so one instance serves any
/// number of weight vectors.
///
/// In the synthesis form with `polish` set, the support of `z` is refit by
/// least squares every few iterations. The refit is returned as soon as a
/// multiplier `y` with `A*y` in the subdifferential at the refit is found,
/// which proves it optimal.
#[derive(Debug, Clone)]
pub struct Splitting<T: Scalar> {
    update: DMatrix<T>,
    offset: DVector<T>,
    op: Option<AnalysisOp<T>>,
    refit: Option<Refit<T>>,
}

impl<T: Scalar> Splitting<T> {
    pub fn synthesis(a: &Matrix<T>, b: &Vector<T>) -> Result<Self> {
        if b.len() != a.rows() {
            return arg_err(format!("b has length {}, A has {} rows", b.len(), a.rows()));
        }
        let proj = AffineProjector::new(a)?;
        Ok(Self {
            update: proj.kernel_projector(),
            offset: proj.particular(b)?,
            op: None,
            refit: Some(Refit {
                a: a.as_inner().clone(),
                b: b.clone(),
                q: proj.row_space().clone(),
                r: proj.triangular().clone(),
            }),
        })
    }

    pub fn analysis(a: &Matrix<T>, d: &Matrix<T>, b: &Vector<T>) -> Result<Self> {
        if b.len() != a.rows() {
            return arg_err(format!("b has length {}, A has {} rows", b.len(), a.rows()));
        }
        if a.cols() != d.rows() {
            return arg_err(format!("A has {} columns but D has {} rows", a.cols(), d.rows()));
        }
        let proj = AffineProjector::new(a)?;
        let f0 = proj.particular(b)?;
        let adjoint = d.as_inner().adjoint();
        let kernel = kernel_basis(a, DEFAULT_RANK_TOL);
        let update = if kernel.cols() == 0 {
            DMatrix::zeros(a.cols(), d.cols())
        } else {
            // restricted to f = f0 + N·c, the f-step is least squares in c
            let g = &adjoint * kernel.as_inner();
            let svd = SVD::new(g, true, true);
            let smax = svd.singular_values.max();
            let smin = svd.singular_values.min();
            if smax == 0.0 || smin <= DEFAULT_RANK_TOL * smax {
                return Err(Error::RankDeficient("D* is not injective on ker A".into()));
            }
            let pinv = svd
                .pseudo_inverse(0.0)
                .map_err(|e| Error::RankDeficient(e.to_string()))?;
            kernel.as_inner() * pinv
        };
        let offset = &f0 - &update * (&adjoint * &f0);
        Ok(Self {
            update,
            offset,
            op: Some(AnalysisOp {
                adjoint,
                forward: d.as_inner().clone(),
                a: a.as_inner().clone(),
                b: b.clone(),
            }),
            refit: None,
        })
    }

    /// Number of penalized coefficients (length of the weight vector).
    pub fn coefficients(&self) -> usize {
        self.update.ncols()
    }

    pub fn solve(&self, weights: &[f64], opts: &SolverOptions) -> Result<SolverReport<T>> {
        opts.validate()?;
        super::check_weights(weights, self.coefficients())?;
        let n = self.coefficients();
        let dim = self.update.nrows();
        let mut rho = opts.penalty;
        let mut kappa: Vec<f64> = weights.iter().map(|w| w / rho).collect();
        let sqrt_n = (n as f64).sqrt();
        let sqrt_d = (dim as f64).sqrt();
        let refit = self.refit.as_ref().filter(|_| opts.polish);

        let mut z = DVector::<T>::zeros(n);
        let mut u = DVector::<T>::zeros(n);
        let mut y = DVector::<T>::zeros(n);
        let mut dz = DVector::<T>::zeros(n);
        let mut f = self.offset.clone();
        let mut df = DVector::<T>::zeros(n);

        let mut iterations = 0;
        let mut converged = false;
        let mut primal = f64::INFINITY;
        let mut dual = f64::INFINITY;

        for it in 1..=opts.max_iter {
            iterations = it;
            y.copy_from(&z);
            y -= &u;
            f.copy_from(&self.offset);
            f.gemv(T::one(), &self.update, &y, T::one());
            match &self.op {
                Some(op) => df.gemv(T::one(), &op.adjoint, &f, T::zero()),
                None => df.copy_from(&f),
            }

            let mut r2 = 0.0;
            for j in 0..n {
                let v = df[j] + u[j];
                let znew = soft_threshold(v, kappa[j]);
                dz[j] = znew - z[j];
                z[j] = znew;
                u[j] = v - znew;
                r2 += (df[j] - znew).modulus_squared();
            }
            primal = r2.sqrt();

            if opts.adaptive_penalty && it % ADAPT_EVERY == 0 && it <= ADAPT_UNTIL {
                let dual_est = rho * self.forward_norm(&dz);
                let factor = if primal > ADAPT_RATIO * dual_est {
                    2.0
                } else if dual_est > ADAPT_RATIO * primal {
                    0.5
                } else {
                    1.0
                };
                if factor != 1.0 {
                    rho *= factor;
                    u.unscale_mut(factor);
                    for (k, w) in kappa.iter_mut().zip(weights) {
                        *k = w / rho;
                    }
                }
            }

            if let Some(refit) = refit {
                if it % CERTIFY_EVERY == 0 {
                    if let Some(c) = refit.certify(&z, &u, rho, weights, opts) {
                        let objective = weighted_l1(&c.x, weights);
                        return Ok(SolverReport {
                            solution: c.x,
                            objective,
                            primal_residual: c.residual,
                            dual_residual: c.violation,
                            iterations,
                            converged: true,
                        });
                    }
                }
            }

            let eps_pri = sqrt_n * opts.abs_tol + opts.rel_tol * df.norm().max(z.norm());
            if primal > eps_pri {
                continue;
            }
            dual = rho * self.forward_norm(&dz);
            let eps_dual = sqrt_d * opts.abs_tol + opts.rel_tol * rho * self.forward_norm(&u);
            if dual <= eps_dual {
                converged = true;
                break;
            }
        }

        let mut solution = f;
        let mut objective = weighted_l1(&df, weights);
        let polished = match (&self.op, refit) {
            (None, Some(refit)) => refit.polish(&solution, &z, weights, opts, objective),
            (Some(op), None) if opts.polish => op.polish(&solution, &z, weights, opts, objective),
            _ => None,
        };
        if let Some((x, obj)) = polished {
            solution = x;
            objective = obj;
        }

        Ok(SolverReport { solution, objective, primal_residual: primal, dual_residual: dual, iterations, converged })
    }

    fn forward_norm(&self, v: &DVector<T>) -> f64 {
        match &self.op {
            Some(op) => (&op.forward * v).norm(),
            None => v.norm(),
        }
    }
}

/// Accepts `cand` in place of the splitting iterate `x` when it is no worse
/// in objective and close to `x`.
fn accept<T: Scalar>(cand: DVector<T>, obj: f64, x: &DVector<T>, objective: f64) -> Option<(DVector<T>, f64)> {
    let close = (&cand - x).norm() <= 1e-3 * (1.0 + x.norm());
    (obj <= objective + 1e-9 * (1.0 + objective) && close).then_some((cand, obj))
}

impl<T: Scalar> AnalysisOp<T> {
    /// Projects `f` onto `{Af = b, (D*f)_Z = 0}` for a few guesses of the
    /// zero set `Z`: the entries `z` thresholds away, then the entries of
    /// `D*f` below growing fractions of its largest entry. Only positively
    /// weighted entries are constrained. Keeps the best accepted refit.
    fn polish(
        &self,
        f: &DVector<T>,
        z: &DVector<T>,
        weights: &[f64],
        opts: &SolverOptions,
        objective: f64,
    ) -> Option<(DVector<T>, f64)> {
        let coeffs = &self.adjoint * f;
        let zmax = z.iter().map(|v| v.modulus()).fold(0.0, f64::max);
        let cmax = coeffs.iter().map(|v| v.modulus()).fold(0.0, f64::max);
        let mut guesses: Vec<Vec<usize>> = Vec::new();
        let mut push = |zeros: Vec<usize>| {
            if !zeros.is_empty() && !guesses.contains(&zeros) {
                guesses.push(zeros);
            }
        };
        push((0..z.len()).filter(|&j| weights[j] > 0.0 && z[j].modulus() <= ZERO_FLOOR * zmax).collect());
        for floor in COEFF_FLOORS {
            push((0..z.len()).filter(|&j| weights[j] > 0.0 && coeffs[j].modulus() <= floor * cmax).collect());
        }

        let mut best: Option<(DVector<T>, f64)> = None;
        for zeros in &guesses {
            let bound = best.as_ref().map_or(objective, |b| b.1);
            if let Some(found) = self.project(f, zeros, weights, opts).and_then(|(c, o)| accept(c, o, f, bound)) {
                best = Some(found);
            }
        }
        best
    }

    fn project(
        &self,
        f: &DVector<T>,
        zeros: &[usize],
        weights: &[f64],
        opts: &SolverOptions,
    ) -> Option<(DVector<T>, f64)> {
        let (m, n) = self.a.shape();
        let mut stacked = DMatrix::<T>::zeros(m + zeros.len(), n);
        stacked.view_mut((0, 0), (m, n)).copy_from(&self.a);
        stacked
            .view_mut((m, 0), (zeros.len(), n))
            .copy_from(&self.adjoint.select_rows(zeros));
        let mut target = DVector::<T>::zeros(m + zeros.len());
        target.rows_mut(0, m).copy_from(&self.b);

        let gap = &stacked * f - &target;
        let svd = SVD::new(stacked.clone(), true, true);
        let cutoff = DEFAULT_RANK_TOL * svd.singular_values.max();
        let cand = f - svd.solve(&gap, cutoff).ok()?;

        let feas = opts.abs_tol * (m as f64).sqrt() + opts.rel_tol * self.b.norm();
        let consistent = (&stacked * &cand - &target).norm();
        if (&self.a * &cand - &self.b).norm() > feas || consistent > feas + 1e-9 * cand.norm() {
            return None;
        }
        let obj = weighted_l1(&(&self.adjoint * &cand), weights);
        Some((cand, obj))
    }
}

impl<T: Scalar> Refit<T> {
    fn feasibility_bound(&self, opts: &SolverOptions) -> f64 {
        opts.abs_tol * (self.a.nrows() as f64).sqrt() + opts.rel_tol * self.b.norm()
    }

    /// Nonzeros of `z` plus every zero-weight index, if few enough for a
    /// unique refit.
    fn support(&self, z: &DVector<T>, weights: &[f64]) -> Option<Vec<usize>> {
        let support: Vec<usize> = (0..z.len())
            .filter(|&j| weights[j] == 0.0 || z[j] != T::zero())
            .collect();
        (!support.is_empty() && support.len() <= self.a.nrows()).then_some(support)
    }

    /// Least-squares fit of `b` on the columns in `support`: coefficients,
    /// residual norm and the thin QR factors of `A_S`.
    fn fit(&self, support: &[usize]) -> Option<(DVector<T>, f64, DMatrix<T>, DMatrix<T>)> {
        let sub = self.a.select_columns(support);
        let (qs, rs) = sub.clone().qr().unpack();
        let diag = rs.diagonal().map(|v| v.modulus());
        let (dmin, dmax) = (diag.min(), diag.max());
        if dmax == 0.0 || dmin <= DEFAULT_RANK_TOL * dmax {
            return None;
        }
        let coef = rs.solve_upper_triangular(&(qs.adjoint() * &self.b))?;
        let residual = (&sub * &coef - &self.b).norm();
        Some((coef, residual, qs, rs))
    }

    fn embed(&self, support: &[usize], coef: &DVector<T>) -> DVector<T> {
        let mut x = DVector::zeros(self.a.ncols());
        for (k, &j) in support.iter().enumerate() {
            x[j] = coef[k];
        }
        x
    }

    /// The scaled dual `ρu` approximates a multiplier. It is projected onto
    /// `range(A*)` and then corrected by the minimum-norm step that makes it
    /// match the subgradient exactly on the support; the result certifies the
    /// refit if it stays within the weights off the support.
    fn certify(
        &self,
        z: &DVector<T>,
        u: &DVector<T>,
        rho: f64,
        weights: &[f64],
        opts: &SolverOptions,
    ) -> Option<Certified<T>> {
        let support = self.support(z, weights)?;
        let (coef, residual, qs, rs) = self.fit(&support)?;
        if residual > self.feasibility_bound(opts) {
            return None;
        }
        let mut target = DVector::<T>::zeros(support.len());
        for (k, &j) in support.iter().enumerate() {
            if weights[j] > 0.0 {
                let m = coef[k].modulus();
                if m == 0.0 {
                    return None;
                }
                target[k] = coef[k].scale(weights[j] / m);
            }
        }
        let y0 = self.r.solve_upper_triangular(&(self.q.adjoint() * u.scale(rho)))?;
        let a_s = self.a.select_columns(&support);
        let gap = &target - a_s.adjoint() * &y0;
        let mult = y0 + &qs * rs.ad_solve_upper_triangular(&gap)?;
        let grad = self.a.adjoint() * &mult;

        let mut on_support = vec![false; z.len()];
        for &j in &support {
            on_support[j] = true;
        }
        let mut violation = 0.0f64;
        for j in (0..z.len()).filter(|&j| !on_support[j]) {
            let excess = grad[j].modulus() - weights[j];
            if excess > 1e-9 * (1.0 + weights[j]) {
                return None;
            }
            violation = violation.max(excess);
        }
        Some(Certified { x: self.embed(&support, &coef), residual, violation })
    }

    /// Refit after the iterations stop. Kept when it is feasible, no worse in
    /// objective and close to the splitting iterate.
    fn polish(
        &self,
        x: &DVector<T>,
        z: &DVector<T>,
        weights: &[f64],
        opts: &SolverOptions,
        objective: f64,
    ) -> Option<(DVector<T>, f64)> {
        let support = self.support(z, weights)?;
        let (coef, residual, _, _) = self.fit(&support)?;
        if residual > self.feasibility_bound(opts) {
            return None;
        }
        let cand = self.embed(&support, &coef);
        let obj = weighted_l1(&cand, weights);
        accept(cand, obj, x, objective)
    }
}
