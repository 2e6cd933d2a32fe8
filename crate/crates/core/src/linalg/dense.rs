use nalgebra::{DMatrix, DVector, SVD};

use super::{Matrix, Scalar, Vector};
use crate::error::{arg_err, Error, Result};

fn extreme_singular_values(s: &DVector<f64>) -> (f64, f64) {
    let max = s.iter().copied().fold(0.0, f64::max);
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    (min, max)
}

/// Minimizer of `‖Ax − b‖₂` for `A` of full column rank, with the residual norm.
pub fn least_squares<T: Scalar>(a: &Matrix<T>, b: &Vector<T>, tol: f64) -> Result<(Vector<T>, f64)> {
    if a.rows() != b.len() {
        return arg_err(format!("least_squares: {} rows but b has length {}", a.rows(), b.len()));
    }
    if a.rows() < a.cols() {
        return Err(Error::RankDeficient(format!(
            "{}x{} matrix cannot have full column rank",
            a.rows(),
            a.cols()
        )));
    }
    let svd = SVD::new(a.as_inner().clone(), true, true);
    let (smin, smax) = extreme_singular_values(&svd.singular_values);
    if smax == 0.0 || smin <= tol * smax {
        return Err(Error::RankDeficient(format!(
            "smallest singular value {smin:e} <= {tol:e} * {smax:e}"
        )));
    }
    let x = svd
        .solve(b, 0.0)
        .map_err(|e| Error::RankDeficient(e.to_string()))?;
    let residual = (a.as_inner() * &x - b).norm();
    Ok((x, residual))
}

/// Orthonormal basis (as columns) of the numerical null space of `a`:
/// right singular vectors whose singular value is `<= tol·σmax`.
///
/// The result may have zero columns.
pub fn kernel_basis<T: Scalar>(a: &Matrix<T>, tol: f64) -> Matrix<T> {
    let (m, n) = (a.rows(), a.cols());
    // pad with zero rows so the SVD returns a full set of right singular vectors
    let padded = if m < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a.as_inner());
        p
    } else {
        a.as_inner().clone()
    };
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let (_, smax) = extreme_singular_values(&svd.singular_values);
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| smax == 0.0 || s <= tol * smax)
        .map(|(i, _)| i)
        .collect();
    let mut basis = DMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        basis.set_column(c, &v_t.row(i).adjoint());
    }
    Matrix::from_inner_unchecked(basis)
}

/// Cached factorization for projecting onto `{x : Ax = b}`.
///
/// Holds a thin QR factorization `A* = QR`; the projection of `x0` is
/// `x0 − QQ*x0 + QR^{-*}b`.
#[derive(Debug, Clone)]
pub struct AffineProjector<T: Scalar> {
    q: DMatrix<T>,
    r: DMatrix<T>,
}

impl<T: Scalar> AffineProjector<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        Self::with_tol(a, super::DEFAULT_RANK_TOL)
    }

    pub fn with_tol(a: &Matrix<T>, tol: f64) -> Result<Self> {
        if a.rows() > a.cols() {
            return Err(Error::RankDeficient(format!(
                "{}x{} matrix cannot have full row rank",
                a.rows(),
                a.cols()
            )));
        }
        let qr = a.as_inner().adjoint().qr();
        let (q, r) = qr.unpack();
        let (smin, smax) = extreme_singular_values(&r.clone().singular_values());
        if smax == 0.0 || smin <= tol * smax {
            return Err(Error::RankDeficient(format!(
                "A·A* is numerically singular (σmin {smin:e}, σmax {smax:e})"
            )));
        }
        Ok(Self { q, r })
    }

    pub fn rows(&self) -> usize {
        self.r.nrows()
    }

    pub fn cols(&self) -> usize {
        self.q.nrows()
    }

    /// Orthonormal basis of the row space of `A` (columns of `Q`).
    pub fn row_space(&self) -> &DMatrix<T> {
        &self.q
    }

    /// Upper-triangular factor `R` of `A* = QR`.
    pub fn triangular(&self) -> &DMatrix<T> {
        &self.r
    }

    /// Minimum-norm solution of `Ax = b`.
    pub fn particular(&self, b: &Vector<T>) -> Result<Vector<T>> {
        if b.len() != self.rows() {
            return arg_err(format!("b has length {}, expected {}", b.len(), self.rows()));
        }
        let y = self
            .r
            .ad_solve_upper_triangular(b)
            .ok_or_else(|| Error::RankDeficient("triangular factor is singular".into()))?;
        Ok(&self.q * y)
    }

    pub fn project(&self, b: &Vector<T>, x0: &Vector<T>) -> Result<Vector<T>> {
        if x0.len() != self.cols() {
            return arg_err(format!("x0 has length {}, expected {}", x0.len(), self.cols()));
        }
        let coeff = self.q.adjoint() * x0;
        Ok(x0 - &self.q * coeff + self.particular(b)?)
    }

    /// Dense `N × N` projector onto `ker A`, i.e. `I − QQ*`.
    pub fn kernel_projector(&self) -> DMatrix<T> {
        let n = self.cols();
        DMatrix::identity(n, n) - &self.q * self.q.adjoint()
    }
}

/// Euclidean projection of `x0` onto `{x : Ax = b}`. Pass `cache` to reuse a
/// factorization of `A` across calls.
pub fn affine_project<T: Scalar>(
    a: &Matrix<T>,
    b: &Vector<T>,
    x0: &Vector<T>,
    cache: Option<&AffineProjector<T>>,
) -> Result<Vector<T>> {
    match cache {
        Some(p) => {
            if p.rows() != a.rows() || p.cols() != a.cols() {
                return arg_err("cached factorization does not match the matrix shape");
            }
            p.project(b, x0)
        }
        None => AffineProjector::new(a)?.project(b, x0),
    }
}
