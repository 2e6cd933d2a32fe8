use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Complex64, Matrix, Scalar, SupportSet};
use crate::error::{arg_err, Result};

/// `m × n` matrix with i.i.d. standard normal entries, filled row by row from
/// a ChaCha stream keyed by `seed`.
pub fn gaussian_matrix(m: usize, n: usize, seed: u64) -> Result<Matrix<f64>> {
    if m == 0 || n == 0 {
        return arg_err(format!("gaussian_matrix needs m, n >= 1 (got {m}x{n})"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries: Vec<f64> = (0..m * n).map(|_| StandardNormal.sample(&mut rng)).collect();
    Matrix::from_row_major(m, n, entries)
}

/// Oversampled DFT frame: `d × n`, entry `(j, k) = exp(2πi·jk/n)/√d`.
///
/// Columns have unit norm and `D·D* = (n/d)·I`.
pub fn fourier_frame(d: usize, n: usize) -> Result<Matrix<Complex64>> {
    if d == 0 || d > n {
        return arg_err(format!("fourier_frame needs 1 <= d <= n (got d={d}, n={n})"));
    }
    let scale = 1.0 / (d as f64).sqrt();
    let inner = DMatrix::from_fn(d, n, |j, k| {
        // reduce jk mod n first so the angle stays small and exact
        let phase = ((j * k) % n) as f64 / n as f64;
        Complex64::from_polar(scale, 2.0 * PI * phase)
    });
    Ok(Matrix::from_inner_unchecked(inner))
}

/// Columns of `a` indexed by `t`, in the order of `t`.
pub fn submatrix_columns<T: Scalar>(a: &Matrix<T>, t: &SupportSet) -> Result<Matrix<T>> {
    if t.ambient() != a.cols() {
        return arg_err(format!(
            "support ambient dimension {} does not match {} columns",
            t.ambient(),
            a.cols()
        ));
    }
    Ok(Matrix::from_inner_unchecked(a.as_inner().select_columns(t.indices())))
}
