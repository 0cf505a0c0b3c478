//! Stochastic inversion of large sparse matrices.
//!
//! The core of the crate is the correlated chains (CC) sampler: two coupled
//! Gauss-Seidel-like sweeps driven by a shared noise stream whose stationary
//! cross-covariance is the inverse of the swept matrix. Around it sit the
//! stochastic estimation (SE) baseline built on repeated linear solves,
//! deterministic iterative solvers and a dense LU oracle for ground truth,
//! Monte Carlo error diagnostics with Geyer's effective sample size, and
//! generators for two sparse test-matrix families (mixed-model pedigree
//! matrices and the free Wilson-Dirac lattice operator).

pub mod cc;
pub mod diagnostics;
pub mod error;
pub mod generators;
pub mod mm;
pub mod noise;
pub mod report;
pub mod scalar;
pub mod se;
pub mod solvers;
pub mod sparse;

pub use error::{Error, Result};
pub use scalar::{Complex64, Scalar};
pub use sparse::SparseMatrix;
