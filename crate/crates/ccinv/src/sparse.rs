//! Square sparse matrices with row-major storage and a companion
//! column-major index over the same entries.
//!
//! The column-major view exists because the `w` sweep of the correlated
//! chains sampler reads rows of the adjoint every cycle; building the
//! transpose index once at construction amortizes that cost.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Immutable square sparse matrix.
///
/// Entries are stored once, in compressed row-major order with columns
/// sorted inside each row. The column-major index references the same
/// value array by position. Diagonal entries are additionally kept in a
/// dense array for O(1) access during sweeps; a missing diagonal entry is
/// stored as exact zero.
#[derive(Debug, Clone)]
pub struct SparseMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    csc_pos: Vec<usize>,
    diag: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    /// Assemble from triplets. Duplicate `(row, col)` pairs are summed;
    /// explicit zeros are kept.
    pub fn build(n: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        for &(r, c, _) in triplets {
            if r >= n || c >= n {
                return Err(Error::IndexOutOfRange { row: r, col: c, n });
            }
        }
        let mut sorted: Vec<(usize, usize, T)> = triplets.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (r, c));

        let mut rows = Vec::with_capacity(sorted.len());
        let mut cols = Vec::with_capacity(sorted.len());
        let mut vals: Vec<T> = Vec::with_capacity(sorted.len());
        for (r, c, v) in sorted {
            if let (Some(&lr), Some(&lc)) = (rows.last(), cols.last()) {
                if lr == r && lc == c {
                    let last = vals.last_mut().unwrap();
                    *last += v;
                    continue;
                }
            }
            rows.push(r);
            cols.push(c);
            vals.push(v);
        }

        let nnz = vals.len();
        let mut row_ptr = vec![0usize; n + 1];
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }

        // Column-major index by counting sort over columns.
        let mut col_ptr = vec![0usize; n + 1];
        for &c in &cols {
            col_ptr[c + 1] += 1;
        }
        for i in 0..n {
            col_ptr[i + 1] += col_ptr[i];
        }
        let mut next = col_ptr.clone();
        let mut row_idx = vec![0usize; nnz];
        let mut csc_pos = vec![0usize; nnz];
        for pos in 0..nnz {
            let c = cols[pos];
            let slot = next[c];
            row_idx[slot] = rows[pos];
            csc_pos[slot] = pos;
            next[c] += 1;
        }

        let mut diag = vec![T::ZERO; n];
        for pos in 0..nnz {
            if rows[pos] == cols[pos] {
                diag[rows[pos]] = vals[pos];
            }
        }

        Ok(Self {
            n,
            row_ptr,
            col_idx: cols,
            values: vals,
            col_ptr,
            row_idx,
            csc_pos,
            diag,
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let triplets: Vec<_> = (0..n).map(|i| (i, i, T::ONE)).collect();
        Self::build(n, &triplets)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Dense copy of the diagonal; absent entries are exact zero.
    pub fn diagonal(&self) -> &[T] {
        &self.diag
    }

    /// Entries of row `i` as `(col, value)`, columns ascending.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        range.map(move |pos| (self.col_idx[pos], self.values[pos]))
    }

    /// Row `i` of the adjoint: yields `(j, conj(a_ji))` with `j` ascending,
    /// via the column-major view of column `i`.
    pub fn adjoint_row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.col_ptr[i]..self.col_ptr[i + 1];
        range.map(move |slot| (self.row_idx[slot], self.values[self.csc_pos[slot]].conj()))
    }

    /// All stored entries as `(row, col, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut y = vec![T::ZERO; self.n];
        for i in 0..self.n {
            let mut acc = T::ZERO;
            for (j, v) in self.row(i) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
        Ok(y)
    }

    /// `y = A† x`, reading the column-major view.
    pub fn adjoint_matvec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut y = vec![T::ZERO; self.n];
        for i in 0..self.n {
            let mut acc = T::ZERO;
            for (j, v) in self.adjoint_row(i) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
        Ok(y)
    }

    /// Error if any diagonal entry is exactly zero.
    pub fn check_nonzero_diagonal(&self) -> Result<()> {
        for (i, &d) in self.diag.iter().enumerate() {
            if d == T::ZERO {
                return Err(Error::ZeroDiagonal { index: i });
            }
        }
        Ok(())
    }

    /// Triplets of the strict lower part, the diagonal, and the strict
    /// upper part. Reassembling them reproduces the entry set exactly.
    pub fn ldu_triplets(
        &self,
    ) -> (
        Vec<(usize, usize, T)>,
        Vec<(usize, usize, T)>,
        Vec<(usize, usize, T)>,
    ) {
        let mut l = Vec::new();
        let mut d = Vec::new();
        let mut u = Vec::new();
        for (i, j, v) in self.triplets() {
            if j < i {
                l.push((i, j, v));
            } else if j == i {
                d.push((i, j, v));
            } else {
                u.push((i, j, v));
            }
        }
        (l, d, u)
    }

    /// Dense row-major copy, for oracles and desk-scale checks.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut dense = vec![vec![T::ZERO; self.n]; self.n];
        for (i, j, v) in self.triplets() {
            dense[i][j] += v;
        }
        dense
    }
}

impl SparseMatrix<f64> {
    /// Same entry set over complex scalars. Used when a real matrix has
    /// negative diagonal entries and the sweeps need the principal complex
    /// square root.
    pub fn promote(&self) -> SparseMatrix<crate::scalar::Complex64> {
        let triplets: Vec<_> = self
            .triplets()
            .map(|(i, j, v)| (i, j, crate::scalar::Complex64::new(v, 0.0)))
            .collect();
        SparseMatrix::build(self.n, &triplets).expect("promotion preserves validity")
    }
}
