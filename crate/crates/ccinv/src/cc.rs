//! The correlated chains sampler.
//!
//! Two vectors `z` and `w` are swept Gauss-Seidel style against `C` and
//! `C†` respectively, sharing the same noise vector each cycle. After
//! burn-in the cross products `z w†` average to `C⁻¹`, and `z† Q w`
//! averages to `tr Q C⁻¹`. Burn-in length is determined by the coupling
//! method: pairs of chains started apart but driven by identical noise,
//! whose difference follows the deterministic Gauss-Seidel iteration and
//! decays to zero exactly when the sweeps converge.

use std::collections::BTreeMap;

use crate::diagnostics;
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::scalar::{max_norm, max_norm_diff, Scalar};
use crate::sparse::SparseMatrix;

/// Iterates above this max-norm abort the run as divergent.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// Coupled pair of chain vectors plus the cycle counter.
#[derive(Debug, Clone)]
pub struct ChainState<T> {
    pub z: Vec<T>,
    pub w: Vec<T>,
    pub cycle: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct BurnInConfig {
    /// Relative max-norm tolerance on the coupled-chain difference.
    pub tolerance: f64,
    pub max_cycles: usize,
}

impl Default for BurnInConfig {
    fn default() -> Self {
        Self {
            tolerance: 5e-5,
            max_cycles: 100_000,
        }
    }
}

/// Stopping rule for the sampling phase: relative Monte Carlo standard
/// error (Geyer-corrected) below `rel_tolerance`, checked every
/// `check_every` cycles, with a hard cap.
#[derive(Debug, Clone, Copy)]
pub struct StoppingRule {
    pub rel_tolerance: f64,
    pub check_every: usize,
    pub max_cycles: usize,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            rel_tolerance: 5e-5,
            check_every: 100,
            max_cycles: 1_000_000,
        }
    }
}

/// The weighting matrix Q of `tr Q C⁻¹`.
#[derive(Debug, Clone)]
pub enum TraceQuery<T> {
    Identity,
    /// Indicator over an index subset: Q = diag(1 on the subset, 0 off).
    DiagonalIndicator(Vec<usize>),
    General(SparseMatrix<T>),
}

impl<T: Scalar> TraceQuery<T> {
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            TraceQuery::Identity => Ok(()),
            TraceQuery::DiagonalIndicator(idx) => {
                for &i in idx {
                    if i >= n {
                        return Err(Error::IndexOutOfRange { row: i, col: i, n });
                    }
                }
                Ok(())
            }
            TraceQuery::General(q) => {
                if q.order() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: q.order(),
                    });
                }
                Ok(())
            }
        }
    }

    /// `z† Q w`.
    pub fn quadratic_form(&self, z: &[T], w: &[T]) -> T {
        match self {
            TraceQuery::Identity => z.iter().zip(w).map(|(a, b)| a.conj() * *b).sum(),
            TraceQuery::DiagonalIndicator(idx) => {
                idx.iter().map(|&i| z[i].conj() * w[i]).sum()
            }
            TraceQuery::General(q) => {
                let mut acc = T::ZERO;
                for i in 0..q.order() {
                    let mut qw = T::ZERO;
                    for (j, v) in q.row(i) {
                        qw += v * w[j];
                    }
                    acc += z[i].conj() * qw;
                }
                acc
            }
        }
    }

    /// Exact `tr Q A` for a dense matrix `A` (oracle side).
    pub fn dense_trace(&self, a: &[Vec<T>]) -> T {
        match self {
            TraceQuery::Identity => (0..a.len()).map(|i| a[i][i]).sum(),
            TraceQuery::DiagonalIndicator(idx) => idx.iter().map(|&i| a[i][i]).sum(),
            TraceQuery::General(q) => {
                // tr Q A = sum_ij q_ij a_ji
                let mut acc = T::ZERO;
                for (i, j, v) in q.triplets() {
                    acc += v * a[j][i];
                }
                acc
            }
        }
    }
}

/// Monte Carlo estimate with its error machinery.
#[derive(Debug, Clone)]
pub struct CcEstimate<T> {
    pub value: T,
    pub mc_std_error: f64,
    /// Per-cycle scalar samples, post-burn-in.
    pub samples: Vec<T>,
    pub burn_in: usize,
    pub total_cycles: usize,
    pub effective_length: f64,
    pub sample_variance: f64,
    /// False when the hard cycle cap stopped the run first.
    pub converged: bool,
}

fn check_diagonal_for_sweeps<T: Scalar>(c: &SparseMatrix<T>) -> Result<()> {
    for (i, &d) in c.diagonal().iter().enumerate() {
        if d == T::ZERO {
            return Err(Error::ZeroDiagonal { index: i });
        }
        if !T::IS_COMPLEX && d.re() < 0.0 {
            return Err(Error::NegativeDiagonal { index: i });
        }
    }
    Ok(())
}

/// One forward sweep of the `z` chain, in place:
/// `z_i <- phi_i / sqrt(c_ii) - (1/c_ii) sum_{j != i} c_ij z_j`,
/// where `z_j` for `j < i` is the value updated earlier in this sweep.
pub fn sweep_z<T: Scalar>(c: &SparseMatrix<T>, z: &mut [T], phi: &[T]) -> Result<()> {
    debug_assert_eq!(z.len(), c.order());
    debug_assert_eq!(phi.len(), c.order());
    for i in 0..c.order() {
        let d = c.diagonal()[i];
        if d == T::ZERO {
            return Err(Error::ZeroDiagonal { index: i });
        }
        let mut acc = T::ZERO;
        for (j, v) in c.row(i) {
            if j != i {
                acc += v * z[j];
            }
        }
        z[i] = phi[i] / d.sqrt() - acc / d;
    }
    Ok(())
}

/// One forward sweep of the `w` chain against the adjoint rows:
/// `w_i <- phi_i / conj(sqrt(c_ii)) - (1/conj(c_ii)) sum_{j != i} conj(c_ji) w_j`.
///
/// The scale is `conj(sqrt(c_ii))`, not `sqrt(conj(c_ii))`: the two differ
/// on the branch cut and only the former makes the product of the z and w
/// scale factors equal `|c_ii|`-free `sqrt(D) sqrt(D)† = D` in the
/// stationary cross-covariance.
pub fn sweep_w<T: Scalar>(c: &SparseMatrix<T>, w: &mut [T], phi: &[T]) -> Result<()> {
    debug_assert_eq!(w.len(), c.order());
    debug_assert_eq!(phi.len(), c.order());
    for i in 0..c.order() {
        let d = c.diagonal()[i];
        if d == T::ZERO {
            return Err(Error::ZeroDiagonal { index: i });
        }
        let dc = d.conj();
        let mut acc = T::ZERO;
        for (j, v) in c.adjoint_row(i) {
            if j != i {
                acc += v * w[j];
            }
        }
        w[i] = phi[i] / d.sqrt().conj() - acc / dc;
    }
    Ok(())
}

fn guard_divergence<T: Scalar>(vectors: &[&[T]], cycle: usize) -> Result<()> {
    for v in vectors {
        let norm = max_norm(v);
        if !norm.is_finite() || norm > DIVERGENCE_NORM {
            return Err(Error::Diverged { cycle, norm });
        }
    }
    Ok(())
}

/// Coupled-chain burn-in: four chains (two z, two w) from distinct starts
/// share the noise of each cycle; burn-in ends at the first cycle where
/// both coupled differences fall below the relative tolerance. Returns the
/// burn-in length and the surviving chain pair.
pub fn run_burn_in<T: Scalar>(
    c: &SparseMatrix<T>,
    noise: &NoiseSpec,
    cfg: &BurnInConfig,
) -> Result<(usize, ChainState<T>)> {
    if cfg.tolerance <= 0.0 {
        return Err(Error::InvalidInput("burn-in tolerance must be positive".into()));
    }
    check_diagonal_for_sweeps(c)?;
    let n = c.order();
    let mut z1 = vec![T::ZERO; n];
    let mut z2: Vec<T> = (0..n).map(|i| T::from_re(i as f64)).collect();
    let mut w1 = vec![T::ZERO; n];
    let mut w2: Vec<T> = (0..n).map(|i| T::from_re(i as f64)).collect();

    let mut last_diff = f64::INFINITY;
    for k in 1..=cfg.max_cycles {
        let phi: Vec<T> = noise.draw(k as u64);
        sweep_z(c, &mut z1, &phi)?;
        sweep_z(c, &mut z2, &phi)?;
        sweep_w(c, &mut w1, &phi)?;
        sweep_w(c, &mut w2, &phi)?;
        guard_divergence(&[&z1, &z2, &w1, &w2], k)?;

        let scale_z = max_norm(&z1).max(f64::MIN_POSITIVE);
        let scale_w = max_norm(&w1).max(f64::MIN_POSITIVE);
        let dz = max_norm_diff(&z1, &z2) / scale_z;
        let dw = max_norm_diff(&w1, &w2) / scale_w;
        last_diff = dz.max(dw);
        if dz < cfg.tolerance && dw < cfg.tolerance {
            return Ok((
                k,
                ChainState {
                    z: z1,
                    w: w1,
                    cycle: k as u64,
                },
            ));
        }
    }
    Err(Error::BurnInExceeded {
        max_cycles: cfg.max_cycles,
        last_diff,
    })
}

fn summarize<T: Scalar>(samples: &[T]) -> Result<(T, f64, f64, f64)> {
    let re: Vec<f64> = samples.iter().map(|s| s.re()).collect();
    let n = re.len() as f64;
    let mean_re = re.iter().sum::<f64>() / n;
    if T::IS_COMPLEX {
        let im: Vec<f64> = samples.iter().map(|s| s.im()).collect();
        let mean_im = im.iter().sum::<f64>() / n;
        let (err, eff, var) = diagnostics::mc_std_error_complex(&re, &im)?;
        Ok((T::from_parts(mean_re, mean_im), err, eff, var))
    } else {
        let eff = diagnostics::effective_length(&re)?;
        let var = diagnostics::sample_variance(&re);
        let err = diagnostics::mc_std_error(&re)?;
        Ok((T::from_re(mean_re), err, eff, var))
    }
}

/// Estimate `tr Q C⁻¹` by accumulating `z† Q w` per cycle after burn-in.
pub fn estimate_trace<T: Scalar>(
    c: &SparseMatrix<T>,
    q: &TraceQuery<T>,
    noise: &NoiseSpec,
    burn_in: &BurnInConfig,
    stop: &StoppingRule,
) -> Result<CcEstimate<T>> {
    q.validate(c.order())?;
    let (n_burn, mut state) = run_burn_in(c, noise, burn_in)?;

    let mut samples: Vec<T> = Vec::new();
    let mut converged = false;
    loop {
        let k = state.cycle + 1;
        let phi: Vec<T> = noise.draw(k);
        sweep_z(c, &mut state.z, &phi)?;
        sweep_w(c, &mut state.w, &phi)?;
        state.cycle = k;

        // E(z w†) = C⁻¹, so tr Q C⁻¹ = E(w† Q z).
        let s = q.quadratic_form(&state.w, &state.z);
        if !s.is_finite() {
            return Err(Error::NonFiniteSample { cycle: k as usize });
        }
        guard_divergence(&[&state.z, &state.w], k as usize)?;
        samples.push(s);

        if samples.len() % stop.check_every == 0 && samples.len() >= 10 {
            let (value, err, _, _) = summarize(&samples)?;
            let scale = value.abs().max(f64::MIN_POSITIVE);
            if err / scale < stop.rel_tolerance {
                converged = true;
                break;
            }
        }
        if samples.len() >= stop.max_cycles {
            break;
        }
    }

    let (value, err, eff, var) = summarize(&samples)?;
    Ok(CcEstimate {
        value,
        mc_std_error: err,
        total_cycles: n_burn + samples.len(),
        burn_in: n_burn,
        effective_length: eff,
        sample_variance: var,
        samples,
        converged,
    })
}

/// Estimate selected elements of `C⁻¹`: the `(i, j)` entry accumulates
/// `z_i conj(w_j)` per cycle. Stops when every tracked entry's error bar
/// is below the tolerance relative to the largest entry magnitude.
pub fn estimate_inverse_elements<T: Scalar>(
    c: &SparseMatrix<T>,
    entries: &[(usize, usize)],
    noise: &NoiseSpec,
    burn_in: &BurnInConfig,
    stop: &StoppingRule,
) -> Result<BTreeMap<(usize, usize), CcEstimate<T>>> {
    if entries.is_empty() {
        return Err(Error::InvalidInput("entry list is empty".into()));
    }
    let n = c.order();
    for &(i, j) in entries {
        if i >= n || j >= n {
            return Err(Error::IndexOutOfRange { row: i, col: j, n });
        }
    }
    let (n_burn, mut state) = run_burn_in(c, noise, burn_in)?;

    let mut series: Vec<Vec<T>> = vec![Vec::new(); entries.len()];
    let mut converged = false;
    let mut count = 0usize;
    loop {
        let k = state.cycle + 1;
        let phi: Vec<T> = noise.draw(k);
        sweep_z(c, &mut state.z, &phi)?;
        sweep_w(c, &mut state.w, &phi)?;
        state.cycle = k;
        guard_divergence(&[&state.z, &state.w], k as usize)?;

        for (slot, &(i, j)) in entries.iter().enumerate() {
            let s = state.z[i] * state.w[j].conj();
            if !s.is_finite() {
                return Err(Error::NonFiniteSample { cycle: k as usize });
            }
            series[slot].push(s);
        }
        count += 1;

        if count % stop.check_every == 0 && count >= 10 {
            let mut worst = 0.0f64;
            let mut scale = f64::MIN_POSITIVE;
            for s in &series {
                let (value, err, _, _) = summarize(s)?;
                scale = scale.max(value.abs());
                worst = worst.max(err);
            }
            if worst / scale < stop.rel_tolerance {
                converged = true;
                break;
            }
        }
        if count >= stop.max_cycles {
            break;
        }
    }

    let mut out = BTreeMap::new();
    for (slot, &(i, j)) in entries.iter().enumerate() {
        let samples = std::mem::take(&mut series[slot]);
        let (value, err, eff, var) = summarize(&samples)?;
        out.insert(
            (i, j),
            CcEstimate {
                value,
                mc_std_error: err,
                total_cycles: n_burn + count,
                burn_in: n_burn,
                effective_length: eff,
                sample_variance: var,
                samples,
                converged,
            },
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseFamily;
    use crate::scalar::Complex64;
    use crate::solvers;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn z2(seed: u64, dim: usize) -> NoiseSpec {
        NoiseSpec::new(NoiseFamily::Z2, seed, dim)
    }

    #[test]
    fn sweep_z_diagonal_matrix() {
        // C = diag(d): z_i = phi_i / sqrt(d_i) exactly.
        let c = SparseMatrix::build(3, &[(0, 0, 4.0), (1, 1, 9.0), (2, 2, 16.0)]).unwrap();
        let mut z = vec![5.0, -3.0, 7.0];
        let phi = vec![1.0, -1.0, 2.0];
        sweep_z(&c, &mut z, &phi).unwrap();
        assert_eq!(z, vec![0.5, -1.0 / 3.0, 0.5]);
    }

    #[test]
    fn sweep_z_identity() {
        let c = SparseMatrix::<f64>::identity(4).unwrap();
        let mut z = vec![9.0; 4];
        let phi = vec![1.0; 4];
        sweep_z(&c, &mut z, &phi).unwrap();
        assert_eq!(z, vec![1.0; 4]);
    }

    #[test]
    fn sweep_z_matches_hand_unrolled_recurrence() {
        // Lower triangular plus diagonal, n = 3.
        let c = SparseMatrix::build(
            3,
            &[
                (0, 0, 4.0),
                (1, 0, 1.0),
                (1, 1, 9.0),
                (2, 0, 2.0),
                (2, 1, -1.0),
                (2, 2, 16.0),
            ],
        )
        .unwrap();
        let mut z = vec![0.5, -0.25, 1.0];
        let phi = vec![1.0, 2.0, -1.0];
        sweep_z(&c, &mut z, &phi).unwrap();
        let z0 = 1.0 / 2.0;
        let z1 = 2.0 / 3.0 - (z0 * 1.0) / 9.0;
        let z2 = -1.0 / 4.0 - (z0 * 2.0 + z1 * (-1.0)) / 16.0;
        assert!((z[0] - z0).abs() < 1e-15);
        assert!((z[1] - z1).abs() < 1e-15);
        assert!((z[2] - z2).abs() < 1e-15);
    }

    #[test]
    fn sweep_w_diagonal_real() {
        let c = SparseMatrix::build(2, &[(0, 0, 4.0), (1, 1, 25.0)]).unwrap();
        let mut w = vec![3.0, 3.0];
        let phi = vec![1.0, -2.0];
        sweep_w(&c, &mut w, &phi).unwrap();
        assert_eq!(w, vec![0.5, -0.4]);
    }

    #[test]
    fn sweep_w_matches_hand_unrolled_complex() {
        let i = Complex64::new(0.0, 1.0);
        let a00 = Complex64::new(4.0, 1.0);
        let a01 = Complex64::new(1.0, -2.0);
        let a10 = Complex64::new(-1.0, 0.5);
        let a11 = Complex64::new(5.0, -1.0);
        let a20 = Complex64::new(0.5, 0.0);
        let a12 = Complex64::new(2.0, 1.0);
        let a22 = Complex64::new(6.0, 2.0);
        let c = SparseMatrix::build(
            3,
            &[
                (0, 0, a00),
                (0, 1, a01),
                (1, 0, a10),
                (1, 1, a11),
                (2, 0, a20),
                (1, 2, a12),
                (2, 2, a22),
            ],
        )
        .unwrap();
        let w_old = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 1.0),
        ];
        let phi = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        let mut w = w_old.clone();
        sweep_w(&c, &mut w, &phi).unwrap();

        // Hand-unrolled: w_i = phi_i/conj(sqrt(c_ii)) - (1/c*_ii) [
        //   sum_{j<i} c*_ji w_j_new + sum_{j>i} c*_ji w_j_old ]
        let w0 = phi[0] / a00.sqrt().conj()
            - (a10.conj() * w_old[1] + a20.conj() * w_old[2]) / a00.conj();
        let w1 = phi[1] / a11.sqrt().conj() - (a01.conj() * w0) / a11.conj();
        let w2 = phi[2] / a22.sqrt().conj() - (a12.conj() * w1) / a22.conj();
        assert!((w[0] - w0).norm() < 1e-14);
        assert!((w[1] - w1).norm() < 1e-14);
        assert!((w[2] - w2).norm() < 1e-14);
        let _ = i;
    }

    #[test]
    fn sweep_rejects_zero_diagonal() {
        let c = SparseMatrix::build(2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let mut z = vec![0.0; 2];
        let err = sweep_z(&c, &mut z, &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::ZeroDiagonal { index: 1 }));
    }

    #[test]
    fn burn_in_identity_couples_after_one_cycle() {
        let c = SparseMatrix::<f64>::identity(8).unwrap();
        let (n, _) = run_burn_in(&c, &z2(1, 8), &BurnInConfig::default()).unwrap();
        assert_eq!(n, 1);
    }

    #[test]
    fn burn_in_rejects_negative_real_diagonal() {
        let c = SparseMatrix::build(2, &[(0, 0, -1.0), (1, 1, 1.0)]).unwrap();
        let err = run_burn_in(&c, &z2(1, 2), &BurnInConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NegativeDiagonal { index: 0 }));
    }

    #[test]
    fn divergent_matrix_raises_divergence_error() {
        // Strong off-diagonal dominance; sp(T) > 1 verified in the
        // solvers tests against the dense eigenvalue oracle.
        let c = SparseMatrix::build(
            4,
            &[
                (0, 0, 1.0),
                (1, 1, 1.0),
                (2, 2, 1.0),
                (3, 3, 1.0),
                (0, 1, 3.0),
                (1, 2, 3.0),
                (2, 3, 3.0),
                (0, 3, 2.0),
                (1, 3, 2.0),
                (1, 0, 3.0),
                (2, 1, 3.0),
                (3, 2, 3.0),
            ],
        )
        .unwrap();
        let err = run_burn_in(
            &c,
            &z2(1, 4),
            &BurnInConfig {
                tolerance: 5e-5,
                max_cycles: 10_000,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Diverged { .. } | Error::BurnInExceeded { .. }));
    }

    #[test]
    fn trace_of_diag_2_4() {
        // tr C^{-1} = 0.5 + 0.25 = 0.75.
        let c = SparseMatrix::build(2, &[(0, 0, 2.0), (1, 1, 4.0)]).unwrap();
        let est = estimate_trace(
            &c,
            &TraceQuery::Identity,
            &z2(7, 2),
            &BurnInConfig::default(),
            &StoppingRule {
                rel_tolerance: 1e-3,
                check_every: 100,
                max_cycles: 200_000,
            },
        )
        .unwrap();
        assert!(
            (est.value - 0.75).abs() <= 3.0 * est.mc_std_error.max(1e-12),
            "estimate {} +- {}",
            est.value,
            est.mc_std_error
        );
    }

    #[test]
    fn partial_trace_matches_dense_lu_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 16;
        let mut triplets = Vec::new();
        for i in 0..n {
            let mut off = 0.0;
            for j in 0..n {
                if i != j && rng.gen_bool(0.3) {
                    let v = Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
                    off += v.norm();
                    triplets.push((i, j, v));
                }
            }
            triplets.push((i, i, Complex64::new(2.0 * off + 1.0, rng.gen_range(-0.2..0.2))));
        }
        let c = SparseMatrix::build(n, &triplets).unwrap();
        let q = TraceQuery::DiagonalIndicator(vec![0, 1, 2]);

        let inv = solvers::dense_lu_inverse(&c, 64).unwrap();
        let exact = q.dense_trace(&inv);

        let est = estimate_trace(
            &c,
            &q,
            &z2(3, n),
            &BurnInConfig::default(),
            &StoppingRule {
                rel_tolerance: 2e-3,
                check_every: 100,
                max_cycles: 400_000,
            },
        )
        .unwrap();
        let err = est.mc_std_error.max(1e-12);
        assert!(
            (est.value - exact).norm() <= 3.0 * err,
            "estimate {} vs exact {} (err {})",
            est.value,
            exact,
            err
        );
    }

    #[test]
    fn inverse_elements_identity() {
        let c = SparseMatrix::<f64>::identity(4).unwrap();
        let entries = vec![(0, 0), (1, 1), (0, 2)];
        let out = estimate_inverse_elements(
            &c,
            &entries,
            &z2(5, 4),
            &BurnInConfig::default(),
            &StoppingRule {
                rel_tolerance: 1e-2,
                check_every: 100,
                max_cycles: 50_000,
            },
        )
        .unwrap();
        for (&(i, j), est) in &out {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!(
                (est.value - expect).abs() <= 3.0 * est.mc_std_error.max(1e-9),
                "({i},{j}) -> {} +- {}",
                est.value,
                est.mc_std_error
            );
        }
    }

    #[test]
    fn inverse_diagonal_matches_dense_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 12;
        let mut triplets = Vec::new();
        for i in 0..n {
            let mut off = 0.0;
            for j in 0..n {
                if i != j && rng.gen_bool(0.25) {
                    let v: f64 = rng.gen_range(-0.5..0.5);
                    off += v.abs();
                    triplets.push((i, j, v));
                }
            }
            triplets.push((i, i, 2.0 * off + 1.0));
        }
        let c = SparseMatrix::build(n, &triplets).unwrap();
        let inv = solvers::dense_lu_inverse(&c, 64).unwrap();

        let entries: Vec<_> = (0..n).map(|i| (i, i)).collect();
        let out = estimate_inverse_elements(
            &c,
            &entries,
            &z2(17, n),
            &BurnInConfig::default(),
            &StoppingRule {
                rel_tolerance: 5e-3,
                check_every: 100,
                max_cycles: 400_000,
            },
        )
        .unwrap();
        for (&(i, _), est) in &out {
            assert!(
                (est.value - inv[i][i]).abs() <= 3.0 * est.mc_std_error.max(1e-9),
                "diag {i}: {} vs {} (err {})",
                est.value,
                inv[i][i],
                est.mc_std_error
            );
        }
    }

    #[test]
    fn hermitian_collapse_real() {
        // For hermitian C with identical starts and noise, w == z bitwise.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 10;
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen_bool(0.3) {
                    let v: f64 = rng.gen_range(-0.4..0.4);
                    triplets.push((i, j, v));
                    triplets.push((j, i, v));
                }
            }
            triplets.push((i, i, 5.0));
        }
        let c = SparseMatrix::build(n, &triplets).unwrap();
        let noise = z2(4, n);
        let mut z = vec![0.0; n];
        let mut w = vec![0.0; n];
        for k in 1..=50u64 {
            let phi: Vec<f64> = noise.draw(k);
            sweep_z(&c, &mut z, &phi).unwrap();
            sweep_w(&c, &mut w, &phi).unwrap();
            assert_eq!(z, w, "cycle {k}");
        }
    }

    #[test]
    fn coupled_difference_follows_gauss_seidel() {
        // The difference of two coupled chains is the deterministic GS
        // iteration for C d = 0 started from the initial difference.
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let n = 10;
        let mut triplets = Vec::new();
        for i in 0..n {
            let mut off = 0.0;
            for j in 0..n {
                if i != j && rng.gen_bool(0.4) {
                    let v: f64 = rng.gen_range(-0.5..0.5);
                    off += v.abs();
                    triplets.push((i, j, v));
                }
            }
            triplets.push((i, i, off * 2.0 + 0.5));
        }
        let c = SparseMatrix::build(n, &triplets).unwrap();
        let noise = z2(6, n);

        let mut za = vec![0.0; n];
        let mut zb: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let mut d: Vec<f64> = zb.clone();
        let b = vec![0.0; n];
        for k in 1..=40u64 {
            let phi: Vec<f64> = noise.draw(k);
            sweep_z(&c, &mut za, &phi).unwrap();
            sweep_z(&c, &mut zb, &phi).unwrap();
            solvers::gs_sweep(&c, &mut d, &b).unwrap();
            for i in 0..n {
                assert!(
                    ((zb[i] - za[i]) - d[i]).abs() < 1e-12,
                    "cycle {k} component {i}"
                );
            }
        }
    }

    #[test]
    fn unbiased_at_small_order_with_clt_rate() {
        // Mean of z w† converges to C^{-1}; error shrinks as 1/sqrt(cycles).
        let c = SparseMatrix::build(
            4,
            &[
                (0, 0, 3.0),
                (1, 1, 4.0),
                (2, 2, 3.5),
                (3, 3, 5.0),
                (0, 1, 1.0),
                (1, 2, -0.8),
                (2, 3, 0.9),
                (3, 0, -1.1),
                (2, 0, 0.7),
            ],
        )
        .unwrap();
        let inv = solvers::dense_lu_inverse(&c, 16).unwrap();
        let checkpoints = [1_000usize, 10_000, 100_000, 1_000_000];
        // Average the checkpoint errors over a few independent streams;
        // a single stream's slope is too noisy for a tight band.
        let mut sum_ln_err = vec![0.0f64; checkpoints.len()];
        let seeds = [11u64, 12, 13];
        for &seed in &seeds {
            let noise = z2(seed, 4);
            let (n_burn, mut state) = run_burn_in(&c, &noise, &BurnInConfig::default()).unwrap();
            let mut acc = [[0.0f64; 4]; 4];
            let mut count = 0usize;
            for k in (n_burn as u64 + 1)..=(n_burn as u64 + 1_000_000) {
                let phi: Vec<f64> = noise.draw(k);
                sweep_z(&c, &mut state.z, &phi).unwrap();
                sweep_w(&c, &mut state.w, &phi).unwrap();
                for i in 0..4 {
                    for j in 0..4 {
                        acc[i][j] += state.z[i] * state.w[j];
                    }
                }
                count += 1;
                if let Some(slot) = checkpoints.iter().position(|&cp| cp == count) {
                    let mut err = 0.0;
                    for i in 0..4 {
                        for j in 0..4 {
                            err += (acc[i][j] / count as f64 - inv[i][j]).powi(2);
                        }
                    }
                    sum_ln_err[slot] += err.sqrt().ln();
                }
            }
        }
        let errors: Vec<(f64, f64)> = checkpoints
            .iter()
            .zip(&sum_ln_err)
            .map(|(&cp, &s)| (cp as f64, (s / seeds.len() as f64).exp()))
            .collect();
        // Least-squares slope of log(err) vs log(cycles); CLT gives -1/2.
        let logs: Vec<(f64, f64)> = errors.iter().map(|&(n, e)| (n.ln(), e.ln())).collect();
        let m = logs.len() as f64;
        let sx: f64 = logs.iter().map(|p| p.0).sum();
        let sy: f64 = logs.iter().map(|p| p.1).sum();
        let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
        let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        assert!(
            (-0.6..=-0.4).contains(&slope),
            "log-log slope {slope}, errors {errors:?}"
        );
    }

    #[test]
    fn determinism_identical_inputs_identical_samples() {
        let c = SparseMatrix::build(3, &[(0, 0, 2.0), (1, 1, 3.0), (2, 2, 4.0), (0, 1, 0.5)])
            .unwrap();
        let stop = StoppingRule {
            rel_tolerance: 1e-3,
            check_every: 100,
            max_cycles: 20_000,
        };
        let a = estimate_trace(&c, &TraceQuery::Identity, &z2(99, 3), &BurnInConfig::default(), &stop)
            .unwrap();
        let b = estimate_trace(&c, &TraceQuery::Identity, &z2(99, 3), &BurnInConfig::default(), &stop)
            .unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.samples.len(), b.samples.len());
        assert_eq!(a.burn_in, b.burn_in);
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
