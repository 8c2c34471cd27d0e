use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::pattern::SparsityPattern;
use super::perron::{perron, PerronData};
use crate::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_GAMMA: f64 = 1e7;

/// Relative slack on `epsilon <= -mu1`, so that `epsilon = -mu1` computed
/// from a rounded `mu1` still lands on the boundary case.
const EPSILON_SLACK: f64 = 1e-10;

/// The box `{A : -gamma I <= A <= abar}` (off-diagonal lower bound 0) of
/// stable Metzler matrices around the initial reduced state matrix.
///
/// Every member is Metzler with spectral abscissa at most `-epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityBox {
    /// Elementwise upper bound `A0 - (mu1 + epsilon) v1 w1^T`.
    #[serde(with = "crate::serde_rows::matrix")]
    pub abar: DMatrix<f64>,
    pub gamma: f64,
    pub epsilon: f64,
    pub perron: PerronData,
}

impl StabilityBox {
    pub fn dim(&self) -> usize {
        self.abar.nrows()
    }

    /// Lower bound of entry `(i, j)`.
    pub fn lower(&self, i: usize, j: usize) -> f64 {
        if i == j {
            -self.gamma
        } else {
            0.0
        }
    }

    /// Whether `a` lies in the box (pattern not considered).
    pub fn contains(&self, a: &DMatrix<f64>) -> bool {
        a.shape() == self.abar.shape()
            && (0..self.dim()).all(|i| {
                (0..self.dim()).all(|j| a[(i, j)] >= self.lower(i, j) && a[(i, j)] <= self.abar[(i, j)])
            })
    }
}

/// Builds the box from the Perron pair of `a0`.
///
/// Requires `0 < epsilon <= -mu1` and `gamma > 0` with
/// `-gamma <= min_i a0_ii`.
pub fn build_box(a0: &DMatrix<f64>, epsilon: f64, gamma: f64) -> Result<StabilityBox> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    let min_diag = a0.diagonal().min();
    if -gamma > min_diag {
        return Err(Error::InvalidParameter(format!(
            "gamma = {gamma} too small: need -gamma <= min diagonal of A0 = {min_diag}"
        )));
    }
    let perron = perron(a0)?;
    let mu1 = perron.mu1;
    if epsilon > -mu1 * (1.0 + EPSILON_SLACK) {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {epsilon} out of range: need 0 < epsilon <= -mu1 = {}",
            -mu1
        )));
    }
    // On the boundary the rank-one term vanishes and abar = A0.
    let coeff = (mu1 + epsilon).min(0.0);
    let abar = a0 - (&perron.v1 * perron.w1.transpose()) * coeff;
    Ok(StabilityBox { abar, gamma, epsilon, perron })
}

/// Projection of `ar` onto `st(A0)` intersected with the box: pattern zeros
/// are set to zero, other off-diagonals are clamped to `[0, abar_ij]` and the
/// diagonal to `[-gamma, abar_ii]`.
///
/// # Panics
/// If `ar`, the box and the pattern disagree in size.
pub fn project_a(ar: &DMatrix<f64>, bx: &StabilityBox, pat: &SparsityPattern) -> DMatrix<f64> {
    let r = bx.dim();
    assert_eq!(ar.shape(), (r, r), "A_r shape does not match the box");
    assert_eq!(pat.dims().0, r, "pattern size does not match the box");
    let mut out = DMatrix::from_fn(r, r, |i, j| ar[(i, j)].max(bx.lower(i, j)).min(bx.abar[(i, j)]));
    for &ij in pat.za() {
        out[ij] = 0.0;
    }
    out
}

fn project_nonneg(m: &DMatrix<f64>, zeros: &super::pattern::IndexSet) -> DMatrix<f64> {
    let mut out = m.map(|v| v.max(0.0));
    for &ij in zeros {
        out[ij] = 0.0;
    }
    out
}

/// Projection onto nonnegative `r x m` matrices with the pattern zeros of `B_r`.
///
/// # Panics
/// If `br` does not match the pattern dimensions.
pub fn project_b(br: &DMatrix<f64>, pat: &SparsityPattern) -> DMatrix<f64> {
    let (r, m, _) = pat.dims();
    assert_eq!(br.shape(), (r, m), "B_r shape does not match the pattern");
    project_nonneg(br, pat.zb())
}

/// Projection onto nonnegative `p x r` matrices with the pattern zeros of `C_r`.
///
/// # Panics
/// If `cr` does not match the pattern dimensions.
pub fn project_c(cr: &DMatrix<f64>, pat: &SparsityPattern) -> DMatrix<f64> {
    let (r, _, p) = pat.dims();
    assert_eq!(cr.shape(), (p, r), "C_r shape does not match the pattern");
    project_nonneg(cr, pat.zc())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasible::pattern::IndexSet;
    use crate::numkit::{spectral_abscissa, EigenOptions, MatrixRef};

    fn a0() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[-2.0, 1.0, 1.0, -2.0])
    }

    fn abscissa(m: &DMatrix<f64>) -> f64 {
        spectral_abscissa(MatrixRef::Dense(m), &EigenOptions::default()).unwrap()
    }

    #[test]
    fn symmetric_box_example() {
        let bx = build_box(&a0(), 0.5, 10.0).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[-1.75, 1.25, 1.25, -1.75]);
        assert!((&bx.abar - expected).norm() < 1e-14);
        assert!((abscissa(&bx.abar) + 0.5).abs() < 1e-12);
        assert!(bx.contains(&a0()));
    }

    #[test]
    fn boundary_epsilon_gives_a0() {
        let bx = build_box(&a0(), 1.0, 10.0).unwrap();
        assert_eq!(bx.abar, a0());
        assert!((abscissa(&bx.abar) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn preconditions() {
        assert!(build_box(&a0(), 1.5, 10.0).is_err());
        assert!(build_box(&a0(), 0.0, 10.0).is_err());
        assert!(build_box(&a0(), 0.5, 1.0).is_err());
        assert!(build_box(&a0(), 0.5, 2.0).is_ok());
    }

    #[test]
    fn projection_examples() {
        let bx = build_box(&a0(), 0.5, 10.0).unwrap();
        let pat = SparsityPattern::unconstrained(2, 1, 1);
        assert_eq!(project_a(&a0(), &bx, &pat), a0());
        let ar = DMatrix::from_row_slice(2, 2, &[-20.0, -0.3, 5.0, -1.0]);
        let pa = project_a(&ar, &bx, &pat);
        assert_eq!(pa, DMatrix::from_row_slice(2, 2, &[-10.0, 0.0, bx.abar[(1, 0)], bx.abar[(1, 1)]]));

        let pat = SparsityPattern::new(2, 1, 1, IndexSet::from([(1, 0)]), IndexSet::from([(0, 0)]), IndexSet::new())
            .unwrap();
        assert_eq!(project_a(&a0(), &bx, &pat)[(1, 0)], 0.0);
        let br = DMatrix::from_row_slice(2, 1, &[5.0, -1.0]);
        assert_eq!(project_b(&br, &pat), DMatrix::zeros(2, 1));
        let cr = DMatrix::from_row_slice(1, 2, &[-1.0, 2.0]);
        assert_eq!(project_c(&cr, &pat), DMatrix::from_row_slice(1, 2, &[0.0, 2.0]));
    }

    #[test]
    fn serializes_to_json() {
        let bx = build_box(&a0(), 0.5, 10.0).unwrap();
        let json = serde_json::to_value(&bx).unwrap();
        assert_eq!(json["abar"].as_array().unwrap().len(), 2);
        assert!(json["perron"]["mu1"].is_f64());
        let back: StabilityBox = serde_json::from_value(json).unwrap();
        assert_eq!(back, bx);
    }
}
