//! Deterministic solvers and desk-scale oracles: Gauss-Seidel, BiCG,
//! dense LU inversion, and power-iteration spectral radius estimates for
//! the sweep operators T = (D+L)⁻¹U and S = L(D+U)⁻¹.

use crate::error::{Error, Result};
use crate::scalar::{max_norm, max_norm_diff, Scalar};
use crate::sparse::SparseMatrix;

/// Hard cap for the dense oracle.
pub const DENSE_ORACLE_CAP: usize = 4096;

#[derive(Debug, Clone)]
pub struct SolveReport<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    /// Max-norm of the last successive-iterate change.
    pub change_norm: f64,
    pub converged: bool,
}

/// One in-place forward Gauss-Seidel sweep for `C x = b`.
pub fn gs_sweep<T: Scalar>(c: &SparseMatrix<T>, x: &mut [T], b: &[T]) -> Result<()> {
    for i in 0..c.order() {
        let d = c.diagonal()[i];
        if d == T::ZERO {
            return Err(Error::ZeroDiagonal { index: i });
        }
        let mut acc = T::ZERO;
        for (j, v) in c.row(i) {
            if j != i {
                acc += v * x[j];
            }
        }
        x[i] = (b[i] - acc) / d;
    }
    Ok(())
}

/// Forward-sweep Gauss-Seidel iteration; converges iff sp(T) < 1.
/// Convergence test is the max-norm change between successive iterates.
pub fn gauss_seidel<T: Scalar>(
    c: &SparseMatrix<T>,
    b: &[T],
    x0: &[T],
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport<T>> {
    if b.len() != c.order() || x0.len() != c.order() {
        return Err(Error::DimensionMismatch {
            expected: c.order(),
            got: b.len().max(x0.len()),
        });
    }
    let mut x = x0.to_vec();
    let mut prev = x.clone();
    let mut change = f64::INFINITY;
    for it in 1..=max_iter {
        gs_sweep(c, &mut x, b)?;
        change = max_norm_diff(&x, &prev);
        if change <= tol {
            return Ok(SolveReport {
                x,
                iterations: it,
                change_norm: change,
                converged: true,
            });
        }
        if !change.is_finite() {
            break;
        }
        prev.copy_from_slice(&x);
    }
    Ok(SolveReport {
        x,
        iterations: max_iter,
        change_norm: change,
        converged: false,
    })
}

/// Unpreconditioned bi-conjugate gradient for `C x = b`, with the dual
/// system driven by `C†`. Near-zero inner products report a breakdown,
/// distinct from running out of iterations.
pub fn bicg<T: Scalar>(
    c: &SparseMatrix<T>,
    b: &[T],
    x0: &[T],
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport<T>> {
    let n = c.order();
    if b.len() != n || x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len().max(x0.len()),
        });
    }
    let mut x = x0.to_vec();
    let ax = c.matvec(&x)?;
    let mut r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &axi)| bi - axi).collect();
    let mut r_dual = r.clone();
    let mut p = r.clone();
    let mut p_dual = r_dual.clone();

    let b_scale = max_norm(b).max(1.0);
    let breakdown_eps = 1e-300;

    let mut rho_prev = T::ZERO;
    let mut change = f64::INFINITY;
    for it in 1..=max_iter {
        // Residual test first: an exactly solved system would otherwise
        // trip the rho breakdown guard below.
        let rnorm = max_norm(&r);
        if rnorm <= tol * b_scale {
            return Ok(SolveReport {
                x,
                iterations: it - 1,
                change_norm: rnorm,
                converged: true,
            });
        }
        let rho: T = r_dual.iter().zip(&r).map(|(rd, rr)| rd.conj() * *rr).sum();
        if rho.abs() < breakdown_eps * b_scale {
            return Err(Error::Breakdown {
                iteration: it,
                magnitude: rho.abs(),
            });
        }
        if it > 1 {
            let beta = rho / rho_prev;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
                p_dual[i] = r_dual[i] + beta.conj() * p_dual[i];
            }
        }
        let q = c.matvec(&p)?;
        let q_dual = c.adjoint_matvec(&p_dual)?;
        let denom: T = p_dual.iter().zip(&q).map(|(pd, qq)| pd.conj() * *qq).sum();
        if denom.abs() < breakdown_eps * b_scale {
            return Err(Error::Breakdown {
                iteration: it,
                magnitude: denom.abs(),
            });
        }
        let alpha = rho / denom;
        change = 0.0;
        for i in 0..n {
            let step = alpha * p[i];
            x[i] += step;
            change = change.max(step.abs());
            r[i] -= alpha * q[i];
            r_dual[i] -= alpha.conj() * q_dual[i];
        }
        rho_prev = rho;
    }
    let rnorm = max_norm(&r);
    Ok(SolveReport {
        x,
        iterations: max_iter,
        change_norm: change.min(rnorm),
        converged: rnorm <= tol * b_scale,
    })
}

/// Full inverse by partially pivoted dense LU. Desk-scale oracle only;
/// orders above `cap` (at most [`DENSE_ORACLE_CAP`]) are refused.
pub fn dense_lu_inverse<T: Scalar>(c: &SparseMatrix<T>, cap: usize) -> Result<Vec<Vec<T>>> {
    let n = c.order();
    let cap = cap.min(DENSE_ORACLE_CAP);
    if n > cap {
        return Err(Error::OrderCap { n, cap });
    }
    let mut a = c.to_dense();
    let mut perm: Vec<usize> = (0..n).collect();

    // In-place LU with partial pivoting.
    for k in 0..n {
        let (pivot_row, pivot_mag) = (k..n)
            .map(|i| (i, a[i][k].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if pivot_mag < 1e-300 {
            return Err(Error::Singular {
                step: k,
                pivot: pivot_mag,
            });
        }
        a.swap(k, pivot_row);
        perm.swap(k, pivot_row);
        let pivot = a[k][k];
        for i in (k + 1)..n {
            let factor = a[i][k] / pivot;
            a[i][k] = factor;
            for j in (k + 1)..n {
                let akj = a[k][j];
                a[i][j] -= factor * akj;
            }
        }
    }

    // Solve A X = I column by column via the factorization.
    let mut inv = vec![vec![T::ZERO; n]; n];
    let mut col = vec![T::ZERO; n];
    for e in 0..n {
        for i in 0..n {
            col[i] = if perm[i] == e { T::ONE } else { T::ZERO };
        }
        // Forward: L y = P e (unit lower triangular).
        for i in 0..n {
            for j in 0..i {
                let y = col[j];
                col[i] -= a[i][j] * y;
            }
        }
        // Backward: U x = y.
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                let y = col[j];
                col[i] -= a[i][j] * y;
            }
            col[i] = col[i] / a[i][i];
        }
        for i in 0..n {
            inv[i][e] = col[i];
        }
    }
    Ok(inv)
}

/// `y = T x` with T = (D+L)⁻¹U, computed as a strict-upper product
/// followed by a lower triangular solve. T itself is never materialized.
pub fn apply_t<T: Scalar>(c: &SparseMatrix<T>, x: &[T]) -> Result<Vec<T>> {
    let n = c.order();
    let mut y = vec![T::ZERO; n];
    for i in 0..n {
        let mut acc = T::ZERO;
        for (j, v) in c.row(i) {
            if j > i {
                acc += v * x[j];
            }
        }
        y[i] = acc;
    }
    // Forward solve (D + L) out = y.
    for i in 0..n {
        let d = c.diagonal()[i];
        if d == T::ZERO {
            return Err(Error::ZeroDiagonal { index: i });
        }
        let mut acc = y[i];
        for (j, v) in c.row(i) {
            if j < i {
                acc -= v * y[j];
            }
        }
        y[i] = acc / d;
    }
    Ok(y)
}

/// `y = S† x` with S = L(D+U)⁻¹, so S† = (D+U)⁻† L†. Both factors are
/// applied through the adjoint-row (column-major) view.
pub fn apply_s_adjoint<T: Scalar>(c: &SparseMatrix<T>, x: &[T]) -> Result<Vec<T>> {
    let n = c.order();
    let mut y = vec![T::ZERO; n];
    // L† is strict upper: (L†)_{ij} = conj(c_ji) for j > i.
    for i in 0..n {
        let mut acc = T::ZERO;
        for (j, v) in c.adjoint_row(i) {
            if j > i {
                acc += v * x[j];
            }
        }
        y[i] = acc;
    }
    // (D+U)† is lower triangular with rows from the adjoint view.
    for i in 0..n {
        let d = c.diagonal()[i].conj();
        if d == T::ZERO {
            return Err(Error::ZeroDiagonal { index: i });
        }
        let mut acc = y[i];
        for (j, v) in c.adjoint_row(i) {
            if j < i {
                acc -= v * y[j];
            }
        }
        y[i] = acc / d;
    }
    Ok(y)
}

#[derive(Debug, Clone, Copy)]
pub struct SpectralEstimate {
    pub value: f64,
    /// Power iteration can stagnate for defective or complex-paired
    /// spectra; the estimate is still reported, flagged unconverged.
    pub converged: bool,
    pub iterations: usize,
}

fn power_iteration<T, F>(n: usize, mut op: F, tol: f64, max_iter: usize) -> Result<SpectralEstimate>
where
    T: Scalar,
    F: FnMut(&[T]) -> Result<Vec<T>>,
{
    // Deterministic, non-symmetric start so no dominant mode is missed
    // by an unlucky orthogonal initial vector.
    let mut v: Vec<T> =
        (0..n).map(|i| T::from_re(1.0 + (i as f64 + 1.0) / n as f64)).collect();
    let norm0 = max_norm(&v);
    for x in v.iter_mut() {
        *x = *x / T::from_re(norm0);
    }

    // The per-step max-norm ratio oscillates when the dominant
    // eigenvalues are a complex-conjugate pair, so the estimate is the
    // geometric mean growth rate over the trailing half of the run.
    let mut log_growth = vec![0.0f64];
    let mut estimate = 0.0f64;
    let mut prev = f64::INFINITY;
    for it in 1..=max_iter {
        let w = op(&v)?;
        let norm = max_norm(&w);
        if norm == 0.0 {
            // Nilpotent operator: spectral radius is exactly zero.
            return Ok(SpectralEstimate {
                value: 0.0,
                converged: true,
                iterations: it,
            });
        }
        if !norm.is_finite() {
            return Ok(SpectralEstimate {
                value: f64::INFINITY,
                converged: true,
                iterations: it,
            });
        }
        log_growth.push(log_growth[it - 1] + norm.ln());
        v = w;
        for x in v.iter_mut() {
            *x = *x / T::from_re(norm);
        }
        let half = it / 2;
        estimate = ((log_growth[it] - log_growth[half]) / (it - half) as f64).exp();
        if it >= 20 && (estimate - prev).abs() <= tol * estimate.max(1e-30) {
            return Ok(SpectralEstimate {
                value: estimate,
                converged: true,
                iterations: it,
            });
        }
        prev = estimate;
    }
    Ok(SpectralEstimate {
        value: estimate,
        converged: false,
        iterations: max_iter,
    })
}

/// Power-iteration estimate of sp(T), T = (D+L)⁻¹U.
pub fn spectral_radius_t<T: Scalar>(
    c: &SparseMatrix<T>,
    tol: f64,
    max_iter: usize,
) -> Result<SpectralEstimate> {
    power_iteration::<T, _>(c.order(), |x| apply_t(c, x), tol, max_iter)
}

/// Power-iteration estimate of sp(S) via S†, which shares the spectrum
/// magnitudes of S.
pub fn spectral_radius_s<T: Scalar>(
    c: &SparseMatrix<T>,
    tol: f64,
    max_iter: usize,
) -> Result<SpectralEstimate> {
    power_iteration::<T, _>(c.order(), |x| apply_s_adjoint(c, x), tol, max_iter)
}
