use serde::{Deserialize, Serialize};

use crate::feasible::SparsityPattern;
use crate::sysmodel::StateSpaceModel;
use crate::Result;

/// Slack allowed on the abscissa bound `-epsilon`.
pub const ABSCISSA_SLACK: f64 = 1e-8;

/// Independent check that a reduced model lies in the feasible set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityCertificate {
    pub abscissa: f64,
    pub epsilon: f64,
    /// Smallest off-diagonal entry of `A_r`; absent for `r = 1`.
    pub min_offdiag: Option<f64>,
    pub min_b: f64,
    pub min_c: f64,
    /// SHA-256 of the enforced pattern.
    pub pattern_checksum: String,
    pub pattern_respected: bool,
    pub passed: bool,
}

pub fn certify(red: &StateSpaceModel, pat: &SparsityPattern, epsilon: f64) -> Result<FeasibilityCertificate> {
    let a = red.a_dense();
    let abscissa = red.spectral_abscissa()?;
    let r = a.nrows();
    let min_offdiag = (0..r)
        .flat_map(|i| (0..r).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|ij| a[ij])
        .reduce(f64::min);
    let min_b = red.b().iter().copied().fold(f64::INFINITY, f64::min);
    let min_c = red.c().iter().copied().fold(f64::INFINITY, f64::min);
    let pattern_respected = pat.dims() == (r, red.m(), red.p()) && pat.is_respected_by(&a, red.b(), red.c());
    let passed = abscissa <= -epsilon + ABSCISSA_SLACK
        && min_offdiag.is_none_or(|v| v >= 0.0)
        && !(min_b < 0.0)
        && !(min_c < 0.0)
        && pattern_respected;
    Ok(FeasibilityCertificate {
        abscissa,
        epsilon,
        min_offdiag,
        min_b,
        min_c,
        pattern_checksum: pat.checksum(),
        pattern_respected,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn detects_each_violation() {
        let pat = SparsityPattern::unconstrained(2, 1, 1);
        let ok = StateSpaceModel::dense(
            DMatrix::from_row_slice(2, 2, &[-2.0, 1.0, 0.0, -1.0]),
            DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
            DMatrix::from_row_slice(1, 2, &[0.0, 1.0]),
        )
        .unwrap();
        let cert = certify(&ok, &pat, 1e-6).unwrap();
        assert!(cert.passed);
        assert_eq!(cert.min_offdiag, Some(0.0));
        assert!(!certify(&ok, &pat, 2.0).unwrap().passed);

        let neg_b = StateSpaceModel::dense(ok.a_dense(), DMatrix::from_row_slice(2, 1, &[1.0, -1e-3]), ok.c().clone())
            .unwrap();
        assert!(!certify(&neg_b, &pat, 1e-6).unwrap().passed);

        let strict = SparsityPattern::from_matrices(&ok.a_dense(), ok.b(), ok.c(), 0.0).unwrap();
        let filled = StateSpaceModel::dense(
            DMatrix::from_row_slice(2, 2, &[-2.0, 1.0, 0.5, -1.0]),
            ok.b().clone(),
            ok.c().clone(),
        )
        .unwrap();
        let cert = certify(&filled, &strict, 1e-6).unwrap();
        assert!(!cert.pattern_respected && !cert.passed);
    }
}
