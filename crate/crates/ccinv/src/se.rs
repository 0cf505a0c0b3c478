//! Stochastic estimation baseline: repeated linear solves `C v = phi`
//! with ensemble averaging, `E(v phi†) = C⁻¹`. Samples are independent
//! across systems, so no effective-length correction is needed.

use std::collections::BTreeMap;

use crate::cc::{CcEstimate, StoppingRule, TraceQuery};
use crate::diagnostics;
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::scalar::Scalar;
use crate::solvers::{self, SolveReport};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerSolver {
    Bicg,
    GaussSeidel,
}

#[derive(Debug, Clone, Copy)]
pub struct SeConfig {
    pub inner: InnerSolver,
    /// Max-norm change between successive inner iterates.
    pub inner_tol: f64,
    pub inner_max_iter: usize,
}

impl Default for SeConfig {
    fn default() -> Self {
        Self {
            inner: InnerSolver::Bicg,
            inner_tol: 5e-5,
            inner_max_iter: 10_000,
        }
    }
}

/// Solver-effort bookkeeping across systems.
#[derive(Debug, Clone, Copy, Default)]
pub struct SeStats {
    pub systems: usize,
    pub total_rounds: usize,
}

impl SeStats {
    pub fn rounds_per_system(&self) -> f64 {
        if self.systems == 0 {
            0.0
        } else {
            self.total_rounds as f64 / self.systems as f64
        }
    }
}

fn solve_system<T: Scalar>(
    c: &SparseMatrix<T>,
    phi: &[T],
    cfg: &SeConfig,
) -> Result<SolveReport<T>> {
    let x0 = vec![T::ZERO; c.order()];
    let report = match cfg.inner {
        InnerSolver::Bicg => solvers::bicg(c, phi, &x0, cfg.inner_tol, cfg.inner_max_iter)?,
        InnerSolver::GaussSeidel => {
            solvers::gauss_seidel(c, phi, &x0, cfg.inner_tol, cfg.inner_max_iter)?
        }
    };
    if !report.converged {
        return Err(Error::NoConvergence {
            iterations: report.iterations,
            change: report.change_norm,
        });
    }
    Ok(report)
}

fn summarize<T: Scalar>(samples: &[T]) -> Result<(T, f64, f64)> {
    // Independent samples: plain sqrt(var / n) error bars.
    let n = samples.len() as f64;
    let mean_re = samples.iter().map(|s| s.re()).sum::<f64>() / n;
    let mean_im = samples.iter().map(|s| s.im()).sum::<f64>() / n;
    let re: Vec<f64> = samples.iter().map(|s| s.re()).collect();
    let var_re = diagnostics::sample_variance(&re);
    let (var, err) = if T::IS_COMPLEX {
        let im: Vec<f64> = samples.iter().map(|s| s.im()).collect();
        let var_im = diagnostics::sample_variance(&im);
        (var_re + var_im, ((var_re + var_im) / n).sqrt())
    } else {
        (var_re, (var_re / n).sqrt())
    };
    Ok((T::from_parts(mean_re, mean_im), err, var))
}

/// Estimate `tr Q C⁻¹` from samples `phi† Q v` with `C v = phi`.
pub fn se_estimate_trace<T: Scalar>(
    c: &SparseMatrix<T>,
    q: &TraceQuery<T>,
    noise: &NoiseSpec,
    cfg: &SeConfig,
    stop: &StoppingRule,
) -> Result<(CcEstimate<T>, SeStats)> {
    q.validate(c.order())?;
    let mut samples: Vec<T> = Vec::new();
    let mut stats = SeStats::default();
    let mut converged = false;
    let check_every = stop.check_every.max(1);

    loop {
        let k = samples.len() as u64 + 1;
        let phi: Vec<T> = noise.draw(k);
        let report = solve_system(c, &phi, cfg)?;
        stats.systems += 1;
        stats.total_rounds += report.iterations;

        let s = q.quadratic_form(&phi, &report.x);
        if !s.is_finite() {
            return Err(Error::NonFiniteSample {
                cycle: stats.systems,
            });
        }
        samples.push(s);

        if samples.len() >= 10 && samples.len() % check_every == 0 {
            let (value, err, _) = summarize(&samples)?;
            if err / value.abs().max(f64::MIN_POSITIVE) < stop.rel_tolerance {
                converged = true;
                break;
            }
        }
        if samples.len() >= stop.max_cycles {
            break;
        }
    }

    let (value, err, var) = summarize(&samples)?;
    let n = samples.len();
    Ok((
        CcEstimate {
            value,
            mc_std_error: err,
            total_cycles: n,
            burn_in: 0,
            effective_length: n as f64,
            sample_variance: var,
            samples,
            converged,
        },
        stats,
    ))
}

/// Estimate selected elements of `C⁻¹` from `v_i conj(phi_j)`.
pub fn se_estimate_inverse_elements<T: Scalar>(
    c: &SparseMatrix<T>,
    entries: &[(usize, usize)],
    noise: &NoiseSpec,
    cfg: &SeConfig,
    stop: &StoppingRule,
) -> Result<(BTreeMap<(usize, usize), CcEstimate<T>>, SeStats)> {
    if entries.is_empty() {
        return Err(Error::InvalidInput("entry list is empty".into()));
    }
    let n = c.order();
    for &(i, j) in entries {
        if i >= n || j >= n {
            return Err(Error::IndexOutOfRange { row: i, col: j, n });
        }
    }
    let mut series: Vec<Vec<T>> = vec![Vec::new(); entries.len()];
    let mut stats = SeStats::default();
    let mut converged = false;
    let check_every = stop.check_every.max(1);
    let mut count = 0usize;

    loop {
        let k = count as u64 + 1;
        let phi: Vec<T> = noise.draw(k);
        let report = solve_system(c, &phi, cfg)?;
        stats.systems += 1;
        stats.total_rounds += report.iterations;
        for (slot, &(i, j)) in entries.iter().enumerate() {
            series[slot].push(report.x[i] * phi[j].conj());
        }
        count += 1;

        if count >= 10 && count % check_every == 0 {
            let mut worst = 0.0f64;
            let mut scale = f64::MIN_POSITIVE;
            for s in &series {
                let (value, err, _) = summarize(s)?;
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
        let (value, err, var) = summarize(&samples)?;
        out.insert(
            (i, j),
            CcEstimate {
                value,
                mc_std_error: err,
                total_cycles: count,
                burn_in: 0,
                effective_length: count as f64,
                sample_variance: var,
                samples,
                converged,
            },
        );
    }
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cc;
    use crate::noise::NoiseFamily;
    use crate::scalar::Complex64;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn z2(seed: u64, dim: usize) -> NoiseSpec {
        NoiseSpec::new(NoiseFamily::Z2, seed, dim)
    }

    fn stop(tol: f64, max: usize) -> StoppingRule {
        StoppingRule {
            rel_tolerance: tol,
            check_every: 10,
            max_cycles: max,
        }
    }

    #[test]
    fn identity_with_z2_noise_is_variance_free() {
        // C = I gives v = phi and phi† phi = n exactly for +-1 components.
        let n = 6;
        let c = SparseMatrix::<f64>::identity(n).unwrap();
        let (est, stats) = se_estimate_trace(
            &c,
            &TraceQuery::Identity,
            &z2(1, n),
            &SeConfig::default(),
            &stop(1e-6, 50),
        )
        .unwrap();
        assert_eq!(est.value, n as f64);
        assert_eq!(est.mc_std_error, 0.0);
        assert!(est.samples.iter().all(|&s| s == n as f64));
        assert!(stats.systems >= 10);
    }

    #[test]
    fn diag_2_4_trace() {
        let c = SparseMatrix::build(2, &[(0, 0, 2.0), (1, 1, 4.0)]).unwrap();
        let (est, _) = se_estimate_trace(
            &c,
            &TraceQuery::Identity,
            &z2(2, 2),
            &SeConfig::default(),
            &stop(1e-3, 100_000),
        )
        .unwrap();
        assert!((est.value - 0.75).abs() <= 3.0 * est.mc_std_error.max(1e-12));
    }

    #[test]
    fn identity_inverse_diagonal_is_exact() {
        let c = SparseMatrix::<f64>::identity(4).unwrap();
        let entries = vec![(0, 0), (2, 2), (0, 1)];
        let (out, _) = se_estimate_inverse_elements(
            &c,
            &entries,
            &z2(3, 4),
            &SeConfig::default(),
            &stop(1e-2, 10_000),
        )
        .unwrap();
        // v_i phi_i = 1 for every sample at i = j.
        assert_eq!(out[&(0, 0)].value, 1.0);
        assert_eq!(out[&(2, 2)].value, 1.0);
        assert!(out[&(0, 1)].value.abs() <= 3.0 * out[&(0, 1)].mc_std_error.max(1e-9));
    }

    #[test]
    fn diag_inverse_elements() {
        let c = SparseMatrix::build(2, &[(0, 0, 2.0), (1, 1, 4.0)]).unwrap();
        let (out, _) = se_estimate_inverse_elements(
            &c,
            &[(0, 0), (1, 1)],
            &z2(4, 2),
            &SeConfig::default(),
            &stop(1e-3, 10_000),
        )
        .unwrap();
        assert!((out[&(0, 0)].value - 0.5).abs() < 1e-10);
        assert!((out[&(1, 1)].value - 0.25).abs() < 1e-10);
    }

    fn random_dd_complex(n: usize, seed: u64) -> SparseMatrix<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
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
            triplets.push((i, i, Complex64::new(2.0 * off + 1.0, 0.1)));
        }
        SparseMatrix::build(n, &triplets).unwrap()
    }

    #[test]
    fn se_and_cc_agree_on_complex_matrix() {
        let n = 16;
        let c = random_dd_complex(n, 21);
        let rule = StoppingRule {
            rel_tolerance: 2e-3,
            check_every: 100,
            max_cycles: 300_000,
        };
        let cc_est = cc::estimate_trace(
            &c,
            &TraceQuery::Identity,
            &z2(5, n),
            &cc::BurnInConfig::default(),
            &rule,
        )
        .unwrap();
        let (se_est, _) = se_estimate_trace(
            &c,
            &TraceQuery::Identity,
            &z2(6, n),
            &SeConfig::default(),
            &rule,
        )
        .unwrap();
        let combined = (cc_est.mc_std_error.powi(2) + se_est.mc_std_error.powi(2)).sqrt();
        assert!(
            (cc_est.value - se_est.value).norm() <= 3.0 * combined.max(1e-12),
            "cc {} vs se {} (combined err {})",
            cc_est.value,
            se_est.value,
            combined
        );
    }

    #[test]
    fn z2_noise_beats_gaussian_for_diagonal_estimates() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 16;
        let mut triplets = Vec::new();
        for i in 0..n {
            let mut off = 0.0;
            for j in 0..n {
                if i != j && rng.gen_bool(0.3) {
                    let v: f64 = rng.gen_range(-0.5..0.5);
                    off += v.abs();
                    triplets.push((i, j, v));
                }
            }
            triplets.push((i, i, 2.0 * off + 1.0));
        }
        let c = SparseMatrix::build(n, &triplets).unwrap();
        let entries: Vec<_> = (0..n).map(|i| (i, i)).collect();
        let fixed = StoppingRule {
            rel_tolerance: 0.0, // never satisfied: fixed sample count
            check_every: usize::MAX,
            max_cycles: 2_000,
        };
        let mut variances = Vec::new();
        for family in [NoiseFamily::Z2, NoiseFamily::Gaussian] {
            let noise = NoiseSpec::new(family, 7, n);
            let (out, _) =
                se_estimate_inverse_elements(&c, &entries, &noise, &SeConfig::default(), &fixed)
                    .unwrap();
            let mean_var: f64 =
                out.values().map(|e| e.sample_variance).sum::<f64>() / n as f64;
            variances.push(mean_var);
        }
        assert!(
            variances[0] < variances[1],
            "z2 {} vs gaussian {}",
            variances[0],
            variances[1]
        );
    }

    #[test]
    fn samples_are_serially_uncorrelated() {
        let c = random_dd_complex(8, 30);
        let fixed = StoppingRule {
            rel_tolerance: 0.0,
            check_every: usize::MAX,
            max_cycles: 4_000,
        };
        let (est, _) = se_estimate_trace(
            &c,
            &TraceQuery::Identity,
            &z2(9, 8),
            &SeConfig::default(),
            &fixed,
        )
        .unwrap();
        let re: Vec<f64> = est.samples.iter().map(|s| s.re()).collect();
        let c0 = crate::diagnostics::sample_variance(&re);
        let c1 = crate::diagnostics::autocovariance(&re, 1);
        let r1 = c1 / c0;
        let bound = 4.0 / (re.len() as f64).sqrt();
        assert!(r1.abs() < bound, "lag-1 autocorrelation {r1} vs bound {bound}");
    }

    #[test]
    fn inner_gauss_seidel_also_works() {
        let c = SparseMatrix::build(2, &[(0, 0, 2.0), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 4.0)])
            .unwrap();
        let cfg = SeConfig {
            inner: InnerSolver::GaussSeidel,
            ..SeConfig::default()
        };
        let (est, stats) = se_estimate_trace(
            &c,
            &TraceQuery::Identity,
            &z2(10, 2),
            &cfg,
            &stop(5e-3, 100_000),
        )
        .unwrap();
        assert!(stats.rounds_per_system() >= 1.0);
        let inv = crate::solvers::dense_lu_inverse(&c, 4).unwrap();
        let exact = inv[0][0] + inv[1][1];
        assert!((est.value - exact).abs() <= 3.0 * est.mc_std_error.max(1e-9));
    }
}
