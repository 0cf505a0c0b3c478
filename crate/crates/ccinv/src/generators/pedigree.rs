//! Pedigree simulation and mixed-model coefficient matrices.
//!
//! The coefficient matrix is the block system
//! `[[X†X, X†], [X, I + Ã⁻¹ σe²/σa²]]` where `X` maps animals to herds
//! and `Ã⁻¹` is the asymmetric relationship-matrix inverse assembled by
//! the Wu-Schaeffer accumulation rules. At λ = 0 the rules reduce to the
//! symmetric Henderson inverse.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Per-animal parentage and herd assignment. Parents always precede
/// their offspring in index order.
#[derive(Debug, Clone)]
pub struct Pedigree {
    pub sire: Vec<Option<usize>>,
    pub dam: Vec<Option<usize>>,
    pub herd: Vec<usize>,
    pub n_herds: usize,
}

impl Pedigree {
    pub fn n_animals(&self) -> usize {
        self.sire.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MixedModelSpec {
    /// σe²/σa², the multiplier of Ã⁻¹ in the animal block.
    pub variance_ratio: f64,
    pub lambda: f64,
}

impl MixedModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.variance_ratio <= 0.0 {
            return Err(Error::InvalidInput("variance ratio must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidInput("lambda must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Discrete-generation random-mating pedigree, deterministic in `seed`.
///
/// Animals split into `generations` cohorts; the first cohort are
/// founders with unknown parents, later cohorts draw sire and dam from
/// the previous cohort. `unknown_fraction` of non-founders lose one or
/// both recorded parents at random. Herds are assigned uniformly.
pub fn simulate_pedigree(
    n_animals: usize,
    n_herds: usize,
    generations: usize,
    unknown_fraction: f64,
    seed: u64,
) -> Result<Pedigree> {
    if n_animals == 0 || n_herds == 0 || n_animals < n_herds {
        return Err(Error::InvalidInput(format!(
            "need n_animals >= n_herds >= 1, got {n_animals} animals, {n_herds} herds"
        )));
    }
    if generations == 0 || generations > n_animals {
        return Err(Error::InvalidInput(format!(
            "need 1 <= generations <= n_animals, got {generations}"
        )));
    }
    if !(0.0..=1.0).contains(&unknown_fraction) {
        return Err(Error::InvalidInput("unknown fraction must lie in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cohort = n_animals.div_ceil(generations);

    let mut sire = vec![None; n_animals];
    let mut dam = vec![None; n_animals];
    for i in cohort..n_animals {
        let gen = i / cohort;
        let prev = ((gen - 1) * cohort)..(gen * cohort).min(n_animals);
        let s = rng.gen_range(prev.clone());
        let d = rng.gen_range(prev);
        if rng.gen_bool(unknown_fraction) {
            // Drop one or both parents.
            if rng.gen_bool(0.5) {
                sire[i] = Some(s);
            }
        } else {
            sire[i] = Some(s);
            dam[i] = Some(d);
        }
    }

    // Uniform herd assignment; round-robin base guarantees no empty herd.
    let mut herd: Vec<usize> = (0..n_animals).map(|i| i % n_herds).collect();
    for i in (1..n_animals).rev() {
        let j = rng.gen_range(0..=i);
        herd.swap(i, j);
    }
    Ok(Pedigree {
        sire,
        dam,
        herd,
        n_herds,
    })
}

/// Assemble `Ã⁻¹` by the per-animal accumulation rules. `δ_i` is 2 with
/// both parents known, 4/3 with one, 1 with none. For each animal i with
/// known parents p (and q):
///   (i,i)   += (1-λ)δ + λ
///   (i,p)   += -(1-λ)δ/2
///   (p,i)   += -δ/2
///   (p,q)   += δ/4 over all ordered known-parent pairs
/// The parent-parent term is positive so that λ = 0 reproduces the
/// symmetric Henderson inverse relationship matrix.
/// Asymmetric for λ != 0; exactly symmetric at λ = 0.
pub fn build_atilde_inverse(ped: &Pedigree, lambda: f64) -> Result<SparseMatrix<f64>> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidInput("lambda must lie in [0, 1]".into()));
    }
    let n = ped.n_animals();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n {
        let parents: Vec<usize> = [ped.sire[i], ped.dam[i]].into_iter().flatten().collect();
        let delta = match parents.len() {
            2 => 2.0,
            1 => 4.0 / 3.0,
            _ => 1.0,
        };
        triplets.push((i, i, (1.0 - lambda) * delta + lambda));
        for &p in &parents {
            triplets.push((i, p, -(1.0 - lambda) * delta / 2.0));
            triplets.push((p, i, -delta / 2.0));
            for &q in &parents {
                triplets.push((p, q, delta / 4.0));
            }
        }
    }
    SparseMatrix::build(n, &triplets)
}

/// The full mixed-model coefficient matrix of order `n_herds + n_animals`:
/// herd equations first, then animal equations.
pub fn build_mixed_model_matrix(
    ped: &Pedigree,
    spec: &MixedModelSpec,
) -> Result<SparseMatrix<f64>> {
    spec.validate()?;
    let nh = ped.n_herds;
    let na = ped.n_animals();
    let mut herd_counts = vec![0usize; nh];
    for &h in &ped.herd {
        if h >= nh {
            return Err(Error::IndexOutOfRange {
                row: h,
                col: h,
                n: nh,
            });
        }
        herd_counts[h] += 1;
    }
    if let Some(empty) = herd_counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidInput(format!(
            "herd {empty} has no animals; X†X would be singular"
        )));
    }

    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    // X†X: diagonal herd counts.
    for (h, &count) in herd_counts.iter().enumerate() {
        triplets.push((h, h, count as f64));
    }
    // X† (top right) and X (bottom left).
    for (animal, &h) in ped.herd.iter().enumerate() {
        triplets.push((h, nh + animal, 1.0));
        triplets.push((nh + animal, h, 1.0));
    }
    // I + Ã⁻¹ σe²/σa².
    for a in 0..na {
        triplets.push((nh + a, nh + a, 1.0));
    }
    let atilde_inv = build_atilde_inverse(ped, spec.lambda)?;
    for (i, j, v) in atilde_inv.triplets() {
        triplets.push((nh + i, nh + j, v * spec.variance_ratio));
    }
    SparseMatrix::build(nh + na, &triplets)
}
