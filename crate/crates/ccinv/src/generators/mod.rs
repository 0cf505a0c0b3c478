//! Builders for the two sparse test-matrix families: mixed-model
//! pedigree coefficient matrices and the free Wilson-Dirac lattice
//! operator.

mod dirac;
mod pedigree;

pub use dirac::{build_dirac_matrix, dirac_dimensions, dirac_exact_trace, gamma, LatticeSpec};
pub use pedigree::{
    build_atilde_inverse, build_mixed_model_matrix, simulate_pedigree, MixedModelSpec, Pedigree,
};
