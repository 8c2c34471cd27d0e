use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub type IndexSet = BTreeSet<(usize, usize)>;

/// Zero sets of the reduced `A_r`, `B_r`, `C_r`, 0-based. Entries listed here
/// are held at exactly zero by the projections.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparsityPattern {
    r: usize,
    m: usize,
    p: usize,
    za: IndexSet,
    zb: IndexSet,
    zc: IndexSet,
}

impl SparsityPattern {
    /// Validating constructor for a pattern of an `r`-state, `m`-input,
    /// `p`-output reduced model.
    pub fn new(r: usize, m: usize, p: usize, za: IndexSet, zb: IndexSet, zc: IndexSet) -> Result<Self> {
        let check = |set: &IndexSet, rows: usize, cols: usize| -> Result<()> {
            match set.iter().find(|&&(i, j)| i >= rows || j >= cols) {
                Some(&(row, col)) => Err(Error::IndexOutOfRange { row, col, rows, cols }),
                None => Ok(()),
            }
        };
        check(&za, r, r)?;
        check(&zb, r, m)?;
        check(&zc, p, r)?;
        if let Some(&(i, _)) = za.iter().find(|&&(i, j)| i == j) {
            return Err(Error::InvalidParameter(format!(
                "diagonal entry ({}, {}) cannot be a pattern zero of A",
                i + 1,
                i + 1
            )));
        }
        Ok(Self { r, m, p, za, zb, zc })
    }

    /// Pattern with no zeros.
    pub fn unconstrained(r: usize, m: usize, p: usize) -> Self {
        Self { r, m, p, za: IndexSet::new(), zb: IndexSet::new(), zc: IndexSet::new() }
    }

    /// Zero sets read off the matrices: `|value| <= ztol` counts as zero.
    /// The diagonal of `a` is never patterned.
    pub fn from_matrices(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, ztol: f64) -> Result<Self> {
        let r = a.nrows();
        if a.ncols() != r {
            return Err(Error::NotSquare { rows: r, cols: a.ncols() });
        }
        if b.nrows() != r {
            return Err(Error::mismatch("rows of B_r", r, b.nrows()));
        }
        if c.ncols() != r {
            return Err(Error::mismatch("columns of C_r", r, c.ncols()));
        }
        let zeros = |m: &DMatrix<f64>, skip_diag: bool| -> IndexSet {
            let mut set = IndexSet::new();
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    if !(skip_diag && i == j) && m[(i, j)].abs() <= ztol {
                        set.insert((i, j));
                    }
                }
            }
            set
        };
        Ok(Self { r, m: b.ncols(), p: c.nrows(), za: zeros(a, true), zb: zeros(b, false), zc: zeros(c, false) })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.r, self.m, self.p)
    }

    pub fn za(&self) -> &IndexSet {
        &self.za
    }

    pub fn zb(&self) -> &IndexSet {
        &self.zb
    }

    pub fn zc(&self) -> &IndexSet {
        &self.zc
    }

    /// True when every listed entry of the three matrices is exactly zero.
    pub fn is_respected_by(&self, a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> bool {
        self.za.iter().all(|&ij| a[ij] == 0.0)
            && self.zb.iter().all(|&ij| b[ij] == 0.0)
            && self.zc.iter().all(|&ij| c[ij] == 0.0)
    }

    /// SHA-256 over a canonical text listing of the pattern (1-based
    /// indices), as lowercase hex.
    pub fn checksum(&self) -> String {
        let mut text = format!("pattern {} {} {}\n", self.r, self.m, self.p);
        for (name, set) in [("A", &self.za), ("B", &self.zb), ("C", &self.zc)] {
            let _ = writeln!(text, "{name} {}", set.len());
            for &(i, j) in set {
                let _ = writeln!(text, "{} {}", i + 1, j + 1);
            }
        }
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}
