use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::graph::require_irreducible;
use crate::numkit::eigen::nonnegative_power_iteration;
use crate::numkit::MatrixRef;
use crate::{Error, Result};

/// Rayleigh-quotient tolerance of the power iteration.
pub const PERRON_TOL: f64 = 1e-12;
/// Iteration cap of the power iteration.
pub const PERRON_MAX_ITERS: usize = 100_000;
const POLISH_STEPS: usize = 3;

/// Perron eigenvalue of a Metzler irreducible matrix with its positive right
/// and left eigenvectors, scaled so that `w1^T v1 = 1` and `||v1||_2 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerronData {
    pub mu1: f64,
    #[serde(with = "crate::serde_rows::vector")]
    pub v1: DVector<f64>,
    #[serde(with = "crate::serde_rows::vector")]
    pub w1: DVector<f64>,
}

impl PerronData {
    /// `(||A0 v1 - mu1 v1||_2, ||w1^T A0 - mu1 w1^T||_2)`.
    pub fn residuals(&self, a0: &DMatrix<f64>) -> (f64, f64) {
        let right = (a0 * &self.v1 - &self.v1 * self.mu1).norm();
        let left = (a0.transpose() * &self.w1 - &self.w1 * self.mu1).norm();
        (right, left)
    }
}

/// Positive Perron pair of `a0` for a stable, Metzler, irreducible `a0`.
///
/// `N = a0 + sI` with `s = 1 + max|a0_ii|` is nonnegative with a positive
/// diagonal, hence primitive, so plain power iteration on `N` and `N^T`
/// converges. A few steps of inverse iteration at the computed root then
/// bring the eigen-residuals down to rounding level.
pub fn perron(a0: &DMatrix<f64>) -> Result<PerronData> {
    let r = a0.nrows();
    if r != a0.ncols() {
        return Err(Error::NotSquare { rows: r, cols: a0.ncols() });
    }
    if r == 0 {
        return Err(Error::InvalidParameter("empty matrix has no Perron pair".into()));
    }
    if a0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("A0".into()));
    }
    if !MatrixRef::Dense(a0).is_metzler() {
        return Err(Error::InvalidParameter("Perron analysis needs a Metzler matrix".into()));
    }
    require_irreducible(a0)?;

    let shift = 1.0 + a0.diagonal().iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
    let n_mat = a0 + DMatrix::identity(r, r) * shift;
    let n_t = n_mat.transpose();
    let right = nonnegative_power_iteration(r, |x| &n_mat * x, PERRON_TOL, PERRON_MAX_ITERS)?;
    let left = nonnegative_power_iteration(r, |x| &n_t * x, PERRON_TOL, PERRON_MAX_ITERS)?;
    let mut mu1 = right.value - shift;
    if mu1 >= 0.0 {
        return Err(Error::Unstable { what: "A0 (Perron eigenvalue)".into(), abscissa: mu1 });
    }

    let mut v = polish(a0, right.vector, mu1);
    let mut w = polish(&a0.transpose(), left.vector, mu1);
    // Two-sided Rayleigh quotient; second-order accurate in the vector errors.
    let wv = w.dot(&v);
    if wv != 0.0 {
        mu1 = w.dot(&(a0 * &v)) / wv;
    }
    if mu1 >= 0.0 {
        return Err(Error::Unstable { what: "A0 (Perron eigenvalue)".into(), abscissa: mu1 });
    }

    for x in [&mut v, &mut w] {
        if x.sum() < 0.0 {
            x.neg_mut();
        }
        if x.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::NonPositiveEigenvector);
        }
    }
    v /= v.norm();
    let scale = w.dot(&v);
    w /= scale;
    Ok(PerronData { mu1, v1: v, w1: w })
}

/// Inverse iteration `x <- (M - mu I)^{-1} x` at a fixed, nearly exact shift.
/// Falls back to the unpolished vector if the shifted matrix is exactly
/// singular or the step produces garbage.
fn polish(m: &DMatrix<f64>, mut x: DVector<f64>, mu: f64) -> DVector<f64> {
    let r = m.nrows();
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let mut lu = (m - DMatrix::identity(r, r) * mu).lu();
    if lu.u().diagonal().iter().any(|&d| d == 0.0) {
        lu = (m - DMatrix::identity(r, r) * (mu + 1e-14 * scale)).lu();
    }
    for _ in 0..POLISH_STEPS {
        let Some(y) = lu.solve(&x) else { break };
        let norm = y.norm();
        if !norm.is_finite() || norm == 0.0 {
            break;
        }
        x = y / norm;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_example() {
        let a0 = DMatrix::from_row_slice(2, 2, &[-2.0, 1.0, 1.0, -2.0]);
        let p = perron(&a0).unwrap();
        assert!((p.mu1 + 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..2 {
            assert!((p.v1[i] - h).abs() < 1e-14);
            assert!((p.w1[i] - h).abs() < 1e-14);
        }
        assert!((p.w1.dot(&p.v1) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn scalar_example() {
        let p = perron(&DMatrix::from_element(1, 1, -3.0)).unwrap();
        assert_eq!(p.mu1, -3.0);
        assert!((p.v1[0] - 1.0).abs() < 1e-15 && (p.w1[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unstable_rejected() {
        let a0 = DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, 2.0, -1.0]);
        assert!(matches!(perron(&a0), Err(Error::Unstable { .. })));
    }

    #[test]
    fn reducible_and_non_metzler_rejected() {
        let a0 = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
        assert!(matches!(perron(&a0), Err(Error::Reducible { .. })));
        let a0 = DMatrix::from_row_slice(2, 2, &[-1.0, -1.0, 1.0, -1.0]);
        assert!(matches!(perron(&a0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn nonsymmetric_residuals() {
        // Directed cycle plus a chord; the shifted matrix is primitive.
        let a0 = DMatrix::from_row_slice(
            4,
            4,
            &[-3.0, 2.0, 0.0, 0.0, 0.0, -1.5, 0.7, 0.0, 0.0, 0.0, -2.0, 1.9, 0.4, 0.3, 0.0, -2.5],
        );
        let p = perron(&a0).unwrap();
        let (r, l) = p.residuals(&a0);
        let bound = 1e-10 * a0.norm();
        assert!(r <= bound && l <= bound, "{r:e} {l:e}");
        assert!((p.w1.dot(&p.v1) - 1.0).abs() <= 1e-12);
        let abscissa = crate::numkit::spectral_abscissa(
            MatrixRef::Dense(&a0),
            &crate::numkit::EigenOptions::default(),
        )
        .unwrap();
        assert!((abscissa - p.mu1).abs() < 1e-12);
    }
}
