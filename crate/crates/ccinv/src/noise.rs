//! Seedable per-cycle noise vectors with zero mean and unit covariance.
//!
//! Generation is keyed on `(seed, cycle)` rather than one long stream: the
//! `z` sweep, the `w` sweep, and all four coupled burn-in chains must see
//! the same noise vector for a given cycle without any buffering.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFamily {
    /// Components are exactly +1 or -1.
    Z2,
    /// Standard normal components.
    Gaussian,
}

#[derive(Debug, Clone, Copy)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    pub seed: u64,
    pub dim: usize,
}

impl NoiseSpec {
    pub fn new(family: NoiseFamily, seed: u64, dim: usize) -> Self {
        Self { family, seed, dim }
    }

    /// Noise vector for cycle `k`; a pure function of `(seed, k)`.
    ///
    /// The noise is real-valued for both scalar types: the covariance
    /// condition E(phi phi†) = I needs no imaginary part, and bounded Z²
    /// components keep the chain iterates bounded.
    pub fn draw<T: Scalar>(&self, cycle: u64) -> Vec<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(cycle);
        match self.family {
            NoiseFamily::Z2 => (0..self.dim)
                .map(|_| T::from_re(if rng.gen::<bool>() { 1.0 } else { -1.0 }))
                .collect(),
            NoiseFamily::Gaussian => (0..self.dim)
                .map(|_| T::from_re(rng.sample(StandardNormal)))
                .collect(),
        }
    }
}
