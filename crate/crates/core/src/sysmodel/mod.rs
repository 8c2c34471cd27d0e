//! State-space models of positive network systems.

mod h2;
mod heat;
mod io;

use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::numkit::{spectral_abscissa, EigenOptions, MatrixRef, SparseMatrix};
use crate::{Error, Result};

pub use h2::{h2_error_report, h2_error_squared, h2_norm_squared, reduced_objective, H2Options, H2Report};
pub use heat::{heat2d, heat2d_beta, HEAT_CONDUCTIVITY, HEAT_DOMAIN};
pub use io::{load_model, save_model, ModelManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StorageKind {
    Dense,
    Sparse,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateMatrix {
    Dense(DMatrix<f64>),
    Sparse(SparseMatrix),
}

impl StateMatrix {
    pub fn as_ref(&self) -> MatrixRef<'_> {
        match self {
            StateMatrix::Dense(m) => MatrixRef::Dense(m),
            StateMatrix::Sparse(m) => MatrixRef::Sparse(m),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.as_ref().shape()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.as_ref().to_dense()
    }

    pub fn transpose(&self) -> StateMatrix {
        match self {
            StateMatrix::Dense(m) => StateMatrix::Dense(m.transpose()),
            StateMatrix::Sparse(m) => StateMatrix::Sparse(m.transpose()),
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            StateMatrix::Dense(m) => m.iter().all(|v| v.is_finite()),
            StateMatrix::Sparse(m) => m.triplets().all(|(_, _, v)| v.is_finite()),
        }
    }

    /// Entries that may be nonzero, as `(row, col, value)`.
    fn entries(&self) -> Box<dyn Iterator<Item = (usize, usize, f64)> + '_> {
        match self {
            StateMatrix::Dense(m) => Box::new(
                (0..m.nrows()).flat_map(move |i| (0..m.ncols()).map(move |j| (i, j, m[(i, j)]))),
            ),
            StateMatrix::Sparse(m) => Box::new(m.triplets()),
        }
    }
}

/// `x' = A x + B u`, `y = C x`.
#[derive(Debug, Clone)]
pub struct StateSpaceModel {
    a: StateMatrix,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    abscissa: OnceLock<f64>,
}

impl PartialEq for StateSpaceModel {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a && self.b == other.b && self.c == other.c
    }
}

impl StateSpaceModel {
    pub fn new(a: StateMatrix, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let (n, n2) = a.shape();
        if n != n2 {
            return Err(Error::NotSquare { rows: n, cols: n2 });
        }
        if b.nrows() != n {
            return Err(Error::mismatch("rows of B", n, b.nrows()));
        }
        if c.ncols() != n {
            return Err(Error::mismatch("columns of C", n, c.ncols()));
        }
        if !a.is_finite() {
            return Err(Error::NonFinite("A".into()));
        }
        if b.iter().chain(c.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("B or C".into()));
        }
        Ok(Self { a, b, c, abscissa: OnceLock::new() })
    }

    pub fn dense(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        Self::new(StateMatrix::Dense(a), b, c)
    }

    pub fn a(&self) -> &StateMatrix {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn a_dense(&self) -> DMatrix<f64> {
        self.a.to_dense()
    }

    pub fn n(&self) -> usize {
        self.a.shape().0
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    pub fn storage(&self) -> StorageKind {
        match self.a {
            StateMatrix::Dense(_) => StorageKind::Dense,
            StateMatrix::Sparse(_) => StorageKind::Sparse,
        }
    }

    /// Spectral abscissa of `A`, computed once with default eigen options.
    pub fn spectral_abscissa(&self) -> Result<f64> {
        if let Some(&v) = self.abscissa.get() {
            return Ok(v);
        }
        let v = spectral_abscissa(self.a.as_ref(), &EigenOptions::default())?;
        let _ = self.abscissa.set(v);
        Ok(v)
    }

    pub fn is_stable(&self) -> Result<bool> {
        Ok(self.spectral_abscissa()? < 0.0)
    }

    pub(crate) fn require_stable(&self, what: &str) -> Result<f64> {
        let abscissa = self.spectral_abscissa()?;
        if abscissa < 0.0 {
            Ok(abscissa)
        } else {
            Err(Error::Unstable { what: what.into(), abscissa })
        }
    }
}

/// Which matrix a positivity violation was found in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixId {
    A,
    B,
    C,
}

/// 1-based location of an offending entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationSite {
    pub matrix: MatrixId,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub is_metzler: bool,
    pub is_nonneg_b: bool,
    pub is_nonneg_c: bool,
    /// Most negative offending entry, or `0` when nothing is negative.
    pub worst_violation: f64,
    pub location: Option<ViolationSite>,
}

impl PositivityReport {
    pub fn is_positive(&self) -> bool {
        self.is_metzler && self.is_nonneg_b && self.is_nonneg_c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspnReport {
    pub positivity: PositivityReport,
    pub abscissa: f64,
    pub stable: bool,
}

impl AspnReport {
    /// Stable and positive.
    pub fn is_aspn(&self) -> bool {
        self.stable && self.positivity.is_positive()
    }
}

/// Positivity and stability check of a model.
///
/// Off-diagonal entries of `A` and all entries of `B`, `C` must be `>= -tol`.
pub fn positivity_report(model: &StateSpaceModel, tol: f64) -> PositivityReport {
    let mut worst = 0.0f64;
    let mut location = None;
    let mut note = |value: f64, site: ViolationSite| {
        if value < worst {
            worst = value;
            location = Some(site);
        }
    };
    let mut is_metzler = true;
    for (i, j, v) in model.a.entries() {
        if i != j && v < 0.0 {
            note(v, ViolationSite { matrix: MatrixId::A, row: i + 1, col: j + 1 });
            is_metzler &= v >= -tol;
        }
    }
    let mut scan = |m: &DMatrix<f64>, id: MatrixId| {
        let mut ok = true;
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v < 0.0 {
                    note(v, ViolationSite { matrix: id, row: i + 1, col: j + 1 });
                    ok &= v >= -tol;
                }
            }
        }
        ok
    };
    let is_nonneg_b = scan(&model.b, MatrixId::B);
    let is_nonneg_c = scan(&model.c, MatrixId::C);
    PositivityReport { is_metzler, is_nonneg_b, is_nonneg_c, worst_violation: worst, location }
}

pub fn validate_aspn(model: &StateSpaceModel, tol: f64) -> Result<AspnReport> {
    let positivity = positivity_report(model, tol);
    let abscissa = model.spectral_abscissa()?;
    Ok(AspnReport { positivity, abscissa, stable: abscissa < 0.0 })
}

/// Replaces `A` by `A - alpha I`, turning a semi-stable positive system into
/// a stable one with the same `B` and `C`.
pub fn semistable_shift(model: &StateSpaceModel, alpha: f64) -> Result<StateSpaceModel> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("shift alpha must be positive, got {alpha}")));
    }
    let a = match &model.a {
        StateMatrix::Dense(m) => {
            let n = m.nrows();
            StateMatrix::Dense(m - DMatrix::identity(n, n) * alpha)
        }
        StateMatrix::Sparse(m) => StateMatrix::Sparse(m.add_diagonal(-alpha)),
    };
    StateSpaceModel::new(a, model.b.clone(), model.c.clone())
}
