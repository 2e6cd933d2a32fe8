//! Sparse recovery by basis pursuit and iterative ℓ1 tail minimization.
//!
//! * [`linalg`]: dense real/complex matrices, Gaussian and Fourier ensembles,
//!   least squares, null spaces, affine projection, text I/O.
//! * [`solver`]: weighted ℓ1 solvers (synthesis and analysis form) and an
//!   exact simplex oracle for real basis pursuit.
//! * [`tailmin`]: the support-re-estimating tail minimization loop.
//! * [`diagnostics`]: spark, null space property, ℓ0 enumeration, recovery
//!   certificates and basis-pursuit failure witnesses.
//! * [`experiments`]: seeded Monte Carlo trials and sparsity sweeps.

pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod linalg;
pub mod solver;
pub mod tailmin;

pub use error::{Error, Result};
