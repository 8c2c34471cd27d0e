//! Matrix Market exchange format: `coordinate` for sparse, `array` for dense.
//!
//! Only real (or integer) fields are accepted; `complex` and `pattern` files
//! are rejected. Writers emit 17 significant digits so that a read/write
//! cycle reproduces the file byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use super::sparse::SparseMatrix;
use crate::{Error, Result};

/// Matrix read from a Matrix Market file, in the storage the file used.
#[derive(Debug, Clone, PartialEq)]
pub enum MarketMatrix {
    Sparse(SparseMatrix),
    Dense(DMatrix<f64>),
}

impl MarketMatrix {
    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            MarketMatrix::Sparse(s) => s.to_dense(),
            MarketMatrix::Dense(d) => d.clone(),
        }
    }

    pub fn into_sparse(self) -> Result<SparseMatrix> {
        match self {
            MarketMatrix::Sparse(s) => Ok(s),
            MarketMatrix::Dense(d) => SparseMatrix::from_dense(&d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn parse(text: &str) -> Result<MarketMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(1, "missing %%MatrixMarket matrix header"));
    }
    let coordinate = match tokens[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(parse_err(1, format!("unsupported format '{other}'"))),
    };
    match tokens[3].as_str() {
        "real" | "integer" | "double" => {}
        other => return Err(parse_err(1, format!("unsupported field '{other}'"))),
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(parse_err(1, format!("unsupported symmetry '{other}'"))),
    };

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = data.next().ok_or_else(|| parse_err(2, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(size_line, "bad size entry")))
        .collect::<Result<_>>()?;

    let number = |line: usize, tok: &str| -> Result<f64> {
        let v: f64 = tok.parse().map_err(|_| parse_err(line, format!("bad number '{tok}'")))?;
        if !v.is_finite() {
            return Err(parse_err(line, "non-finite value"));
        }
        Ok(v)
    };

    if coordinate {
        let &[rows, cols, nnz] = dims.as_slice() else {
            return Err(parse_err(size_line, "coordinate size line needs rows cols nnz"));
        };
        let mut triplets = Vec::with_capacity(nnz);
        for (line, l) in data.by_ref().take(nnz) {
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 3 {
                return Err(parse_err(line, "coordinate entry needs row col value"));
            }
            let i: usize = t[0].parse().map_err(|_| parse_err(line, "bad row index"))?;
            let j: usize = t[1].parse().map_err(|_| parse_err(line, "bad column index"))?;
            if i == 0 || j == 0 || i > rows || j > cols {
                return Err(parse_err(line, format!("index ({i}, {j}) out of range")));
            }
            let v = number(line, t[2])?;
            triplets.push((i - 1, j - 1, v));
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric if i != j => triplets.push((j - 1, i - 1, v)),
                Symmetry::SkewSymmetric if i != j => triplets.push((j - 1, i - 1, -v)),
                _ => {}
            }
        }
        if triplets.len() < nnz {
            return Err(parse_err(size_line, "fewer entries than declared"));
        }
        if let Some((line, _)) = data.next() {
            return Err(parse_err(line, "more entries than declared"));
        }
        Ok(MarketMatrix::Sparse(SparseMatrix::from_triplets(rows, cols, triplets)?))
    } else {
        let &[rows, cols] = dims.as_slice() else {
            return Err(parse_err(size_line, "array size line needs rows cols"));
        };
        if symmetry != Symmetry::General {
            return Err(parse_err(1, "only general array files are supported"));
        }
        let mut values = Vec::with_capacity(rows * cols);
        for (line, l) in data {
            for tok in l.split_whitespace() {
                values.push(number(line, tok)?);
            }
        }
        if values.len() != rows * cols {
            return Err(parse_err(
                size_line,
                format!("expected {} values, found {}", rows * cols, values.len()),
            ));
        }
        // Array format is column-major.
        Ok(MarketMatrix::Dense(DMatrix::from_column_slice(rows, cols, &values)))
    }
}

pub fn format_sparse(m: &SparseMatrix) -> String {
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", m.nrows(), m.ncols(), m.nnz());
    for (i, j, v) in m.triplets() {
        let _ = writeln!(out, "{} {} {}", i + 1, j + 1, format_value(v));
    }
    out
}

pub fn format_dense(m: &DMatrix<f64>) -> String {
    let mut out = String::from("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(out, "{} {}", m.nrows(), m.ncols());
    for v in m.iter() {
        let _ = writeln!(out, "{}", format_value(*v));
    }
    out
}

pub fn read(path: impl AsRef<Path>) -> Result<MarketMatrix> {
    parse(&fs::read_to_string(path)?)
}

pub fn write_sparse(path: impl AsRef<Path>, m: &SparseMatrix) -> Result<()> {
    Ok(fs::write(path, format_sparse(m))?)
}

pub fn write_dense(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    Ok(fs::write(path, format_dense(m))?)
}
