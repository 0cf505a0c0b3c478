//! Matrix Market coordinate I/O (real/complex, general/symmetric/hermitian).
//!
//! Indices are 1-based on disk and 0-based in memory. Values are printed
//! with 17 significant digits so a write/read round trip is bit exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::{Complex64, Scalar};
use crate::sparse::SparseMatrix;

/// A matrix read from disk, tagged real or complex.
pub enum AnyMatrix {
    Real(SparseMatrix<f64>),
    Complex(SparseMatrix<Complex64>),
}

impl AnyMatrix {
    pub fn order(&self) -> usize {
        match self {
            AnyMatrix::Real(a) => a.order(),
            AnyMatrix::Complex(a) => a.order(),
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            AnyMatrix::Real(a) => a.nnz(),
            AnyMatrix::Complex(a) => a.nnz(),
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, AnyMatrix::Complex(_))
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    Hermitian,
}

pub fn read_matrix_market(path: &Path) -> Result<AnyMatrix> {
    let file = File::open(path)?;
    let mut lines = BufReader::new(file).lines();

    let header = lines
        .next()
        .ok_or_else(|| Error::MatrixMarket("empty file".into()))??;
    let fields: Vec<String> = header.split_whitespace().map(|s| s.to_lowercase()).collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(Error::MatrixMarket(format!("bad header line: {header}")));
    }
    if fields[2] != "coordinate" {
        return Err(Error::MatrixMarket(format!(
            "unsupported format '{}', only 'coordinate' is handled",
            fields[2]
        )));
    }
    let complex = match fields[3].as_str() {
        "real" | "integer" => false,
        "complex" => true,
        other => {
            return Err(Error::MatrixMarket(format!("unsupported field type '{other}'")));
        }
    };
    let symmetry = match fields[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "hermitian" => Symmetry::Hermitian,
        other => {
            return Err(Error::MatrixMarket(format!("unsupported symmetry '{other}'")));
        }
    };

    // Size line, skipping comments.
    let mut size_line = None;
    for line in lines.by_ref() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        size_line = Some(line);
        break;
    }
    let size_line = size_line.ok_or_else(|| Error::MatrixMarket("missing size line".into()))?;
    let sizes: Vec<usize> = size_line
        .split_whitespace()
        .map(|s| s.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::MatrixMarket(format!("bad size line '{size_line}': {e}")))?;
    if sizes.len() != 3 {
        return Err(Error::MatrixMarket(format!("bad size line '{size_line}'")));
    }
    let (rows, cols, nnz) = (sizes[0], sizes[1], sizes[2]);
    if rows != cols {
        return Err(Error::MatrixMarket(format!(
            "matrix is {rows}x{cols}, only square matrices are supported"
        )));
    }

    let mut entries: Vec<(usize, usize, Complex64)> = Vec::with_capacity(nnz);
    for line in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        let expect = if complex { 4 } else { 3 };
        if toks.len() != expect {
            return Err(Error::MatrixMarket(format!("bad entry line '{trimmed}'")));
        }
        let i: usize = toks[0]
            .parse()
            .map_err(|e| Error::MatrixMarket(format!("bad row index '{}': {e}", toks[0])))?;
        let j: usize = toks[1]
            .parse()
            .map_err(|e| Error::MatrixMarket(format!("bad col index '{}': {e}", toks[1])))?;
        if i < 1 || i > rows || j < 1 || j > cols {
            return Err(Error::MatrixMarket(format!(
                "entry ({i}, {j}) outside declared {rows}x{cols} matrix"
            )));
        }
        let re: f64 = toks[2]
            .parse()
            .map_err(|e| Error::MatrixMarket(format!("bad value '{}': {e}", toks[2])))?;
        let im: f64 = if complex {
            toks[3]
                .parse()
                .map_err(|e| Error::MatrixMarket(format!("bad value '{}': {e}", toks[3])))?
        } else {
            0.0
        };
        entries.push((i - 1, j - 1, Complex64::new(re, im)));
    }
    if entries.len() != nnz {
        return Err(Error::MatrixMarket(format!(
            "declared {nnz} entries, found {}",
            entries.len()
        )));
    }

    // Expand the stored triangle for symmetric/hermitian files.
    if symmetry != Symmetry::General {
        let mut mirrored = Vec::new();
        for &(i, j, v) in &entries {
            if i != j {
                let mv = if symmetry == Symmetry::Hermitian {
                    v.conj()
                } else {
                    v
                };
                mirrored.push((j, i, mv));
            }
        }
        entries.extend(mirrored);
    }

    if complex {
        Ok(AnyMatrix::Complex(SparseMatrix::build(rows, &entries)?))
    } else {
        let real: Vec<(usize, usize, f64)> =
            entries.into_iter().map(|(i, j, v)| (i, j, v.re)).collect();
        Ok(AnyMatrix::Real(SparseMatrix::build(rows, &real)?))
    }
}

/// Write in coordinate format with `general` symmetry.
pub fn write_matrix_market<T: Scalar>(a: &SparseMatrix<T>, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    let field = if T::IS_COMPLEX { "complex" } else { "real" };
    writeln!(out, "%%MatrixMarket matrix coordinate {field} general")?;
    writeln!(out, "{} {} {}", a.order(), a.order(), a.nnz())?;
    for (i, j, v) in a.triplets() {
        if T::IS_COMPLEX {
            writeln!(out, "{} {} {:.16e} {:.16e}", i + 1, j + 1, v.re(), v.im())?;
        } else {
            writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v.re())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_any(a: &AnyMatrix, path: &Path) -> Result<()> {
    match a {
        AnyMatrix::Real(m) => write_matrix_market(m, path),
        AnyMatrix::Complex(m) => write_matrix_market(m, path),
    }
}
