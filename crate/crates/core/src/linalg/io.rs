//! Plain-text matrix format.
//!
//! ```text
//! matrix <real|complex> <rows> <cols>
//! <row 0 entries separated by single spaces>
//! ...
//! ```
//!
//! Complex entries are written as `re,im`. Vectors use the same format with
//! one column.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use super::{AnyMatrix, Complex64, Field, Matrix, Scalar, Vector};
use crate::error::{Error, Result};

pub fn format_matrix<T: Scalar>(a: &Matrix<T>) -> String {
    let mut out = format!("matrix {} {} {}\n", T::FIELD, a.rows(), a.cols());
    for i in 0..a.rows() {
        let row: Vec<String> = a.as_inner().row(i).iter().map(|v| v.format_entry()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn format_vector<T: Scalar>(x: &Vector<T>) -> String {
    let mut out = format!("matrix {} {} 1\n", T::FIELD, x.len());
    for v in x.iter() {
        out.push_str(&v.format_entry());
        out.push('\n');
    }
    out
}

fn parse_err<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse { line, msg: msg.into() })
}

fn parse_body<T: Scalar>(lines: &[&str], rows: usize, cols: usize) -> Result<Matrix<T>> {
    let mut entries = Vec::with_capacity(rows * cols);
    for (i, line) in lines.iter().enumerate() {
        let lineno = i + 2;
        let mut count = 0;
        for tok in line.split_whitespace() {
            let v = T::parse_entry(tok).map_err(|msg| Error::Parse { line: lineno, msg })?;
            entries.push(v);
            count += 1;
        }
        if count != cols {
            return parse_err(lineno, format!("expected {cols} entries, found {count}"));
        }
    }
    Matrix::from_row_major(rows, cols, entries).map_err(|e| Error::Parse { line: 1, msg: e.to_string() })
}

pub fn parse_matrix(text: &str) -> Result<AnyMatrix> {
    let mut lines: Vec<&str> = text.lines().collect();
    while lines.last().is_some_and(|l| l.trim().is_empty()) {
        lines.pop();
    }
    let Some(header) = lines.first() else {
        return parse_err(1, "empty input");
    };
    let tokens: Vec<&str> = header.split_whitespace().collect();
    let [tag, field, rows, cols] = tokens[..] else {
        return parse_err(1, "header must be `matrix <real|complex> <rows> <cols>`");
    };
    if tag != "matrix" {
        return parse_err(1, format!("unknown header tag {tag:?}"));
    }
    let field = match field {
        "real" => Field::Real,
        "complex" => Field::Complex,
        other => return parse_err(1, format!("unknown field {other:?}")),
    };
    let rows: usize = rows.parse().map_err(|_| Error::Parse { line: 1, msg: format!("bad row count {rows:?}") })?;
    let cols: usize = cols.parse().map_err(|_| Error::Parse { line: 1, msg: format!("bad column count {cols:?}") })?;
    if rows == 0 || cols == 0 {
        return parse_err(1, "dimensions must be positive");
    }
    let body = &lines[1..];
    if body.len() != rows {
        return parse_err(lines.len(), format!("expected {rows} rows, found {}", body.len()));
    }
    Ok(match field {
        Field::Real => AnyMatrix::Real(parse_body(body, rows, cols)?),
        Field::Complex => AnyMatrix::Complex(parse_body(body, rows, cols)?),
    })
}

/// Vectors are `n × 1` matrices.
pub fn parse_vector(text: &str) -> Result<AnyVector> {
    match parse_matrix(text)? {
        AnyMatrix::Real(m) if m.cols() == 1 => Ok(AnyVector::Real(column(m))),
        AnyMatrix::Complex(m) if m.cols() == 1 => Ok(AnyVector::Complex(column(m))),
        other => parse_err(1, format!("expected a single column, found {}", other.cols())),
    }
}

fn column<T: Scalar>(m: Matrix<T>) -> Vector<T> {
    let inner: DMatrix<T> = m.into_inner();
    inner.column(0).into_owned()
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<AnyMatrix> {
    parse_matrix(&fs::read_to_string(path)?)
}

pub fn write_matrix<T: Scalar>(path: impl AsRef<Path>, a: &Matrix<T>) -> Result<()> {
    fs::write(path, format_matrix(a))?;
    Ok(())
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<AnyVector> {
    parse_vector(&fs::read_to_string(path)?)
}

/// A vector whose field is decided at runtime.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyVector {
    Real(Vector<f64>),
    Complex(Vector<Complex64>),
}

impl AnyVector {
    pub fn len(&self) -> usize {
        match self {
            AnyVector::Real(v) => v.len(),
            AnyVector::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn into_complex(self) -> Vector<Complex64> {
        match self {
            AnyVector::Real(v) => v.map(|x| Complex64::new(x, 0.0)),
            AnyVector::Complex(v) => v,
        }
    }

    pub fn into_real(self) -> Option<Vector<f64>> {
        match self {
            AnyVector::Real(v) => Some(v),
            AnyVector::Complex(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fourier_frame, gaussian_matrix};
    use proptest::prelude::*;

    #[test]
    fn header_and_rows() {
        let a = Matrix::from_row_major(2, 3, vec![1.0, 0.0, 1.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(format_matrix(&a), "matrix real 2 3\n1 0 1\n0 1 1\n");
        let z = Matrix::from_row_major(1, 2, vec![Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.0)]).unwrap();
        assert_eq!(format_matrix(&z), "matrix complex 1 2\n1,2 -0.5,0\n");
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_matrix("").is_err());
        assert!(parse_matrix("matrix real 2 2\n1 2\n").is_err());
        assert!(parse_matrix("matrix real 1 2\n1 2 3\n").is_err());
        assert!(parse_matrix("matrix real 1 2\n1 nan\n").is_err());
        assert!(parse_matrix("matrix quaternion 1 1\n1\n").is_err());
        assert!(parse_matrix("matrix real 1 1\n1,0\n").is_err());
        assert!(parse_vector("matrix real 1 2\n1 2\n").is_err());
    }

    #[test]
    fn gaussian_and_fourier_round_trip() {
        let a = gaussian_matrix(4, 6, 3).unwrap();
        assert_eq!(parse_matrix(&format_matrix(&a)).unwrap(), AnyMatrix::Real(a));
        let d = fourier_frame(4, 8).unwrap();
        assert_eq!(parse_matrix(&format_matrix(&d)).unwrap(), AnyMatrix::Complex(d));
    }

    proptest! {
        #[test]
        fn real_entries_round_trip_exactly(v in prop::collection::vec(-1e300f64..1e300, 1..12)) {
            let x = Vector::from_vec(v);
            prop_assert_eq!(parse_vector(&format_vector(&x)).unwrap(), AnyVector::Real(x));
        }

        #[test]
        fn tiny_and_complex_entries_round_trip(re in -1e-200f64..1e-200, im in -1e5f64..1e5) {
            let x = Vector::from_vec(vec![Complex64::new(re, im), Complex64::new(im, re)]);
            prop_assert_eq!(parse_vector(&format_vector(&x)).unwrap(), AnyVector::Complex(x));
        }
    }
}
