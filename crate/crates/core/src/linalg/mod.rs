//! Dense linear algebra over real and complex scalars.
//!
//! Matrices are thin wrappers around `nalgebra::DMatrix` that enforce finite
//! entries. The scalar field is carried in the type (`Matrix<f64>` versus
//! `Matrix<Complex64>`); [`AnyMatrix`] is used where the field is only known
//! at runtime, e.g. when reading a matrix file.

mod dense;
mod generate;
mod io;

pub use dense::{affine_project, kernel_basis, least_squares, AffineProjector};
pub use generate::{fourier_frame, gaussian_matrix, submatrix_columns};
pub use io::{
    format_matrix, format_vector, parse_matrix, parse_vector, read_matrix, read_vector, write_matrix, AnyVector,
};

use std::fmt;

use nalgebra::{ComplexField, DMatrix, DVector};
pub use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Result};

/// Default relative tolerance for rank decisions (`σ ≤ tol·σmax`).
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

pub type Vector<T> = DVector<T>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Real => f.write_str("real"),
            Field::Complex => f.write_str("complex"),
        }
    }
}

/// Scalar types the toolkit computes over: `f64` and `Complex64`.
pub trait Scalar: ComplexField<RealField = f64> + Copy {
    const FIELD: Field;

    fn from_parts(re: f64, im: f64) -> Self;

    fn re(self) -> f64 {
        self.real()
    }

    fn im(self) -> f64 {
        self.imaginary()
    }

    /// Text form used by the matrix file format.
    fn format_entry(self) -> String;

    fn parse_entry(s: &str) -> std::result::Result<Self, String>;
}

fn format_real(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn parse_real(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("non-finite entry: {s:?}"))
    }
}

impl Scalar for f64 {
    const FIELD: Field = Field::Real;

    fn from_parts(re: f64, _im: f64) -> Self {
        re
    }

    fn format_entry(self) -> String {
        format_real(self)
    }

    fn parse_entry(s: &str) -> std::result::Result<Self, String> {
        if s.contains(',') {
            return Err(format!("complex entry {s:?} in a real matrix"));
        }
        parse_real(s)
    }
}

impl Scalar for Complex64 {
    const FIELD: Field = Field::Complex;

    fn from_parts(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }

    fn format_entry(self) -> String {
        format!("{},{}", format_real(self.re), format_real(self.im))
    }

    fn parse_entry(s: &str) -> std::result::Result<Self, String> {
        let (re, im) = s
            .split_once(',')
            .ok_or_else(|| format!("expected re,im pair, got {s:?}"))?;
        Ok(Complex64::new(parse_real(re)?, parse_real(im)?))
    }
}

/// Dense matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T: Scalar> {
    inner: DMatrix<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn new(inner: DMatrix<T>) -> Result<Self> {
        if inner.nrows() == 0 || inner.ncols() == 0 {
            return arg_err("matrix dimensions must be positive");
        }
        if inner.iter().any(|v| !v.is_finite()) {
            return arg_err("matrix entries must be finite");
        }
        Ok(Self { inner })
    }

    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<T>) -> Result<Self> {
        if entries.len() != rows * cols {
            return arg_err(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            ));
        }
        Self::new(DMatrix::from_row_slice(rows, cols, &entries))
    }

    pub fn identity(n: usize) -> Self {
        Self { inner: DMatrix::identity(n, n) }
    }

    /// Construct without the finiteness check. Callers guarantee the invariant.
    pub(crate) fn from_inner_unchecked(inner: DMatrix<T>) -> Self {
        Self { inner }
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn field(&self) -> Field {
        T::FIELD
    }

    pub fn as_inner(&self) -> &DMatrix<T> {
        &self.inner
    }

    pub fn into_inner(self) -> DMatrix<T> {
        self.inner
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.inner[(i, j)]
    }

    pub fn row_major(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            out.extend(self.inner.row(i).iter().copied());
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self { inner: self.inner.adjoint() }
    }

    pub fn mul_vec(&self, x: &Vector<T>) -> Vector<T> {
        &self.inner * x
    }

    pub fn singular_values(&self) -> Vector<f64> {
        self.inner.clone().singular_values()
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        self.singular_values().max()
    }
}

impl Matrix<f64> {
    pub fn to_complex(&self) -> Matrix<Complex64> {
        Matrix { inner: self.inner.map(|v| Complex64::new(v, 0.0)) }
    }
}

/// A matrix whose field is decided at runtime.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyMatrix {
    Real(Matrix<f64>),
    Complex(Matrix<Complex64>),
}

impl AnyMatrix {
    pub fn rows(&self) -> usize {
        match self {
            AnyMatrix::Real(m) => m.rows(),
            AnyMatrix::Complex(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            AnyMatrix::Real(m) => m.cols(),
            AnyMatrix::Complex(m) => m.cols(),
        }
    }

    pub fn field(&self) -> Field {
        match self {
            AnyMatrix::Real(_) => Field::Real,
            AnyMatrix::Complex(_) => Field::Complex,
        }
    }

    /// Promote to the complex field.
    pub fn into_complex(self) -> Matrix<Complex64> {
        match self {
            AnyMatrix::Real(m) => m.to_complex(),
            AnyMatrix::Complex(m) => m,
        }
    }

    pub fn into_real(self) -> Option<Matrix<f64>> {
        match self {
            AnyMatrix::Real(m) => Some(m),
            AnyMatrix::Complex(_) => None,
        }
    }
}

impl From<Matrix<f64>> for AnyMatrix {
    fn from(m: Matrix<f64>) -> Self {
        AnyMatrix::Real(m)
    }
}

impl From<Matrix<Complex64>> for AnyMatrix {
    fn from(m: Matrix<Complex64>) -> Self {
        AnyMatrix::Complex(m)
    }
}

/// Strictly increasing index set inside `0..ambient`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SupportSet {
    indices: Vec<usize>,
    ambient: usize,
}

impl SupportSet {
    /// Indices may be given in any order; duplicates and out-of-range
    /// indices are rejected.
    pub fn new(mut indices: Vec<usize>, ambient: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return arg_err("support set contains duplicate indices");
        }
        if let Some(&last) = indices.last() {
            if last >= ambient {
                return arg_err(format!("index {last} out of range for ambient dimension {ambient}"));
            }
        }
        Ok(Self { indices, ambient })
    }

    pub(crate) fn from_sorted_unchecked(indices: Vec<usize>, ambient: usize) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Self { indices, ambient }
    }

    pub fn full(ambient: usize) -> Self {
        Self { indices: (0..ambient).collect(), ambient }
    }

    pub fn empty(ambient: usize) -> Self {
        Self { indices: Vec::new(), ambient }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn complement(&self) -> SupportSet {
        let indices = (0..self.ambient).filter(|i| !self.contains(*i)).collect();
        Self { indices, ambient: self.ambient }
    }

    /// Boolean membership mask of length `ambient`.
    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.ambient];
        for &i in &self.indices {
            mask[i] = true;
        }
        mask
    }
}

impl fmt::Display for SupportSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.indices.iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// Euclidean norm of a vector.
pub fn norm2<T: Scalar>(x: &Vector<T>) -> f64 {
    x.norm()
}

/// Sum of entry moduli.
pub fn norm1<T: Scalar>(x: &Vector<T>) -> f64 {
    x.iter().map(|v| v.modulus()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_entries() {
        assert!(Matrix::from_row_major(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::from_row_major(1, 2, vec![1.0, f64::INFINITY]).is_err());
        assert!(Matrix::<f64>::from_row_major(2, 2, vec![1.0]).is_err());
    }

    #[test]
    fn support_set_validation() {
        assert!(SupportSet::new(vec![1, 1], 3).is_err());
        assert!(SupportSet::new(vec![3], 3).is_err());
        let t = SupportSet::new(vec![2, 0], 4).unwrap();
        assert_eq!(t.indices(), &[0, 2]);
        assert_eq!(t.complement().indices(), &[1, 3]);
        assert_eq!(t.to_string(), "0,2");
    }

    #[test]
    fn entry_text_forms() {
        assert_eq!(1.5f64.format_entry(), "1.5");
        assert_eq!(1e-12f64.format_entry(), "1e-12");
        assert_eq!(Complex64::new(1.0, -2.0).format_entry(), "1,-2");
        assert!(f64::parse_entry("1,2").is_err());
        assert_eq!(Complex64::parse_entry("0.5,3e-3").unwrap(), Complex64::new(0.5, 3e-3));
    }
}
