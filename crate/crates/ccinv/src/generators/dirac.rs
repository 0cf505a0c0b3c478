//! Free Wilson-Dirac lattice operator.
//!
//! The operator on a periodic 4-torus is
//! `L = 1 + K sum_mu [ (1 + gamma^mu) fwd_mu + (1 - gamma^mu) bwd_mu ]`
//! with a four-component spinor per site. The gamma matrices are the
//! chiral-basis Euclidean set: gamma^{1,2,3} have the Pauli matrices in
//! the off-diagonal 2x2 blocks and gamma^4 is diag(I, -I). Each
//! projector block (1 +- gamma^mu) then carries exactly two nonzeros per
//! spinor row for the spatial directions and the rank-two diagonal for
//! the fourth, which is what makes fourteen nonzeros per row at extents
//! >= 3.
//!
//! Boundary conditions are periodic wraparound in all four directions.

use crate::cc::TraceQuery;
use crate::error::{Error, Result};
use crate::scalar::Complex64;
use crate::solvers;
use crate::sparse::SparseMatrix;

/// Lattice extents per direction plus the hopping constant K.
#[derive(Debug, Clone, Copy)]
pub struct LatticeSpec {
    /// Extents `[N0, N1, N2, N3]`; N0 is the time direction.
    pub extents: [usize; 4],
    pub hopping: f64,
}

impl LatticeSpec {
    pub fn cubic(n: usize, hopping: f64) -> Self {
        Self {
            extents: [n; 4],
            hopping,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.extents.iter().any(|&n| n < 2) {
            return Err(Error::InvalidInput(
                "lattice extents must be at least 2 for periodic wraparound".into(),
            ));
        }
        Ok(())
    }

    pub fn sites(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn order(&self) -> usize {
        4 * self.sites()
    }
}

const I: Complex64 = Complex64::new(0.0, 1.0);
const O: Complex64 = Complex64::new(0.0, 0.0);
const R1: Complex64 = Complex64::new(1.0, 0.0);

/// gamma^mu for mu in 1..=4, as a dense 4x4 block.
pub fn gamma(mu: usize) -> [[Complex64; 4]; 4] {
    let n1 = Complex64::new(-1.0, 0.0);
    let ni = Complex64::new(0.0, -1.0);
    match mu {
        // [[0, sigma], [sigma, 0]] with sigma1 = [[0,1],[1,0]].
        1 => [
            [O, O, O, R1],
            [O, O, R1, O],
            [O, R1, O, O],
            [R1, O, O, O],
        ],
        // sigma2 = [[0,-i],[i,0]].
        2 => [
            [O, O, O, ni],
            [O, O, I, O],
            [O, ni, O, O],
            [I, O, O, O],
        ],
        // sigma3 = [[1,0],[0,-1]].
        3 => [
            [O, O, R1, O],
            [O, O, O, n1],
            [R1, O, O, O],
            [O, n1, O, O],
        ],
        // diag(I, -I).
        4 => [
            [R1, O, O, O],
            [O, R1, O, O],
            [O, O, n1, O],
            [O, O, O, n1],
        ],
        _ => panic!("gamma index must be 1..=4"),
    }
}

/// 1 + sign * gamma^mu.
fn projector(mu: usize, sign: f64) -> [[Complex64; 4]; 4] {
    let g = gamma(mu);
    let mut out = g;
    for (a, row) in out.iter_mut().enumerate() {
        for (b, v) in row.iter_mut().enumerate() {
            *v = *v * Complex64::new(sign, 0.0);
            if a == b {
                *v += R1;
            }
        }
    }
    out
}

/// Order and nonzero count without materializing the matrix.
///
/// Per spinor row: the unit diagonal, one entry per fourth-direction
/// neighbor block (the diagonal projector is rank two, so exactly one of
/// the forward/backward blocks hits each row), and per spatial direction
/// four entries at extents >= 3 or two when extent 2 merges the forward
/// and backward neighbors.
pub fn dirac_dimensions(spec: &LatticeSpec) -> Result<(usize, usize)> {
    spec.validate()?;
    let per_row = 1
        + 1
        + [1usize, 2, 3]
            .iter()
            .map(|&dir| {
                let extent = spec.extents[dir];
                if extent >= 3 {
                    4
                } else {
                    2
                }
            })
            .sum::<usize>();
    let order = spec.order();
    Ok((order, order * per_row))
}

/// Assemble the operator as a complex sparse matrix of order
/// `4 * N0 N1 N2 N3`. Structural zeros of the projector blocks are
/// skipped; entries that merge to numeric zero at extent 2 are kept.
pub fn build_dirac_matrix(spec: &LatticeSpec) -> Result<SparseMatrix<Complex64>> {
    spec.validate()?;
    let [n0, n1, n2, n3] = spec.extents;
    let k = Complex64::new(spec.hopping, 0.0);
    let order = spec.order();

    // Flattening: idx = a + N1 (b + N2 (c + N3 (d + N0 s))) with spatial
    // coordinates (a, b, c), time d, and spinor s slowest.
    let idx = |a: usize, b: usize, c: usize, d: usize, s: usize| -> usize {
        a + n1 * (b + n2 * (c + n3 * (d + n0 * s)))
    };

    let projectors: Vec<([[Complex64; 4]; 4], [[Complex64; 4]; 4])> =
        (1..=4).map(|mu| (projector(mu, 1.0), projector(mu, -1.0))).collect();

    let (_, expected_nnz) = dirac_dimensions(spec)?;
    let mut triplets: Vec<(usize, usize, Complex64)> = Vec::with_capacity(expected_nnz);
    for d in 0..n0 {
        for c in 0..n3 {
            for b in 0..n2 {
                for a in 0..n1 {
                    for s in 0..4 {
                        triplets.push((idx(a, b, c, d, s), idx(a, b, c, d, s), R1));
                    }
                    for (dir, (fwd_block, bwd_block)) in projectors.iter().enumerate() {
                        let dir = dir + 1;
                        let (fwd, bwd) = match dir {
                            1 => (
                                idx((a + 1) % n1, b, c, d, 0),
                                idx((a + n1 - 1) % n1, b, c, d, 0),
                            ),
                            2 => (
                                idx(a, (b + 1) % n2, c, d, 0),
                                idx(a, (b + n2 - 1) % n2, c, d, 0),
                            ),
                            3 => (
                                idx(a, b, (c + 1) % n3, d, 0),
                                idx(a, b, (c + n3 - 1) % n3, d, 0),
                            ),
                            _ => (
                                idx(a, b, c, (d + 1) % n0, 0),
                                idx(a, b, c, (d + n0 - 1) % n0, 0),
                            ),
                        };
                        let here = idx(a, b, c, d, 0);
                        let stride = n1 * n2 * n3 * n0;
                        for (neighbor, block) in [(fwd, fwd_block), (bwd, bwd_block)] {
                            for (alpha, row) in block.iter().enumerate() {
                                for (beta, &v) in row.iter().enumerate() {
                                    if v != O {
                                        triplets.push((
                                            here + alpha * stride,
                                            neighbor + beta * stride,
                                            k * v,
                                        ));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let m = SparseMatrix::build(order, &triplets)?;
    debug_assert_eq!(m.nnz(), expected_nnz);
    Ok(m)
}

/// Exact `tr C⁻¹` by dense LU, desk-scale only.
pub fn dirac_exact_trace(spec: &LatticeSpec, cap: usize) -> Result<Complex64> {
    let m = build_dirac_matrix(spec)?;
    let inv = solvers::dense_lu_inverse(&m, cap)?;
    Ok(TraceQuery::Identity.dense_trace(&inv))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matmul(a: &[[Complex64; 4]; 4], b: &[[Complex64; 4]; 4]) -> [[Complex64; 4]; 4] {
        let mut out = [[O; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                for l in 0..4 {
                    out[i][j] += a[i][l] * b[l][j];
                }
            }
        }
        out
    }

    #[test]
    fn gamma_clifford_closure() {
        // gamma^mu gamma^nu + gamma^nu gamma^mu = 2 delta_{mu nu} I.
        for mu in 1..=4 {
            for nu in 1..=4 {
                let ab = matmul(&gamma(mu), &gamma(nu));
                let ba = matmul(&gamma(nu), &gamma(mu));
                for i in 0..4 {
                    for j in 0..4 {
                        let got = ab[i][j] + ba[i][j];
                        let expect = if mu == nu && i == j {
                            Complex64::new(2.0, 0.0)
                        } else {
                            O
                        };
                        assert!(
                            (got - expect).norm() < 1e-15,
                            "anticommutator ({mu},{nu}) at ({i},{j}): {got}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn sigma2_sign_variant_breaks_clifford_closure() {
        // With sigma2 = [[0,-i],[-i,0]] (both entries -i) the square of
        // gamma^2 is -I, so that variant cannot be used.
        let ni = Complex64::new(0.0, -1.0);
        let g2_variant = [
            [O, O, O, ni],
            [O, O, ni, O],
            [O, ni, O, O],
            [ni, O, O, O],
        ];
        let sq = matmul(&g2_variant, &g2_variant);
        assert!((sq[0][0] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn dimension_formulas() {
        for n in [3usize, 4, 18, 20] {
            let spec = LatticeSpec::cubic(n, 0.1);
            let (order, nnz) = dirac_dimensions(&spec).unwrap();
            let sites = n * n * n * n;
            assert_eq!(order, 4 * sites);
            assert_eq!(nnz, 56 * sites);
        }
        let (order, nnz) = dirac_dimensions(&LatticeSpec::cubic(18, 0.1)).unwrap();
        assert_eq!(order, 419_904);
        assert_eq!(nnz, 5_878_656);
        let (order, nnz) = dirac_dimensions(&LatticeSpec::cubic(20, 0.1)).unwrap();
        assert_eq!(order, 640_000);
        assert_eq!(nnz, 8_960_000);
    }

    #[test]
    fn built_matrix_matches_dimension_formulas() {
        for n in [3usize, 4] {
            let spec = LatticeSpec::cubic(n, 0.1);
            let m = build_dirac_matrix(&spec).unwrap();
            let (order, nnz) = dirac_dimensions(&spec).unwrap();
            assert_eq!(m.order(), order);
            assert_eq!(m.nnz(), nnz);
            // Every row has exactly 14 stored entries at extents >= 3.
            for i in 0..m.order() {
                assert_eq!(m.row(i).count(), 14, "row {i}");
            }
        }
    }

    #[test]
    fn extent_two_merges_neighbors() {
        let spec = LatticeSpec::cubic(2, 0.1);
        let m = build_dirac_matrix(&spec).unwrap();
        let (order, nnz) = dirac_dimensions(&spec).unwrap();
        assert_eq!(m.order(), order);
        assert_eq!(m.nnz(), nnz);
        // Merged rows: 1 diagonal + 1 (dir 4) + 3 spatial dirs x 2.
        for i in 0..m.order() {
            assert_eq!(m.row(i).count(), 8, "row {i}");
        }
    }

    #[test]
    fn rejects_extent_below_two() {
        assert!(build_dirac_matrix(&LatticeSpec {
            extents: [1, 4, 4, 4],
            hopping: 0.1
        })
        .is_err());
    }

    #[test]
    fn zero_hopping_decouples_to_identity_trace() {
        let spec = LatticeSpec::cubic(2, 0.0);
        let t = dirac_exact_trace(&spec, 256).unwrap();
        assert!((t - Complex64::new(spec.order() as f64, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn small_lattice_trace_is_real() {
        let spec = LatticeSpec::cubic(2, 0.1);
        let t = dirac_exact_trace(&spec, 256).unwrap();
        assert!(t.im.abs() < 1e-10, "imaginary part {}", t.im);
        assert!(t.re > 0.0);
    }

    #[test]
    fn trace_invariant_under_cyclic_site_shift() {
        // Relabeling sites by a cyclic shift along one direction is a
        // permutation similarity, and the operator commutes with it.
        let spec = LatticeSpec::cubic(2, 0.1);
        let m = build_dirac_matrix(&spec).unwrap();
        let n1 = spec.extents[1];
        let sites = spec.sites();
        // idx = a + n1*rest: shift a -> (a+1) mod n1.
        let shift = |i: usize| -> usize {
            let s = i / sites;
            let site = i % sites;
            let a = site % n1;
            let rest = site / n1;
            ((a + 1) % n1) + n1 * rest + s * sites
        };
        let shifted: Vec<_> = m
            .triplets()
            .map(|(i, j, v)| (shift(i), shift(j), v))
            .collect();
        let pm = SparseMatrix::build(m.order(), &shifted).unwrap();
        let t0 = TraceQuery::Identity.dense_trace(&solvers::dense_lu_inverse(&m, 256).unwrap());
        let t1 = TraceQuery::Identity.dense_trace(&solvers::dense_lu_inverse(&pm, 256).unwrap());
        assert!((t0 - t1).norm() < 1e-10);
    }
}
