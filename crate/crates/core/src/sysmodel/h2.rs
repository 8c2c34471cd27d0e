use serde::{Deserialize, Serialize};

use super::{StateMatrix, StateSpaceModel};
use crate::numkit::{solve_lyapunov, solve_sylvester, MatrixRef, SylvesterOptions, SylvesterProblem};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H2Options {
    /// Largest full-order dimension for which the Gramian of `A` is formed.
    pub size_cap: usize,
    pub sylvester: SylvesterOptions,
}

impl Default for H2Options {
    fn default() -> Self {
        Self { size_cap: 5000, sylvester: SylvesterOptions::default() }
    }
}

/// `||G||^2 = tr(C P C^T)` with `A P + P A^T + B B^T = 0`.
pub fn h2_norm_squared(model: &StateSpaceModel, opts: &H2Options) -> Result<f64> {
    let abscissa = model.require_stable("A")?;
    let n = model.n();
    if n > opts.size_cap {
        return Err(Error::SizeCapExceeded { n, cap: opts.size_cap });
    }
    let bbt = model.b() * model.b().transpose();
    let gramian = match model.a() {
        StateMatrix::Dense(a) => solve_lyapunov(a, &bbt, &opts.sylvester)?,
        StateMatrix::Sparse(a) => {
            let right = a.to_dense();
            let problem = SylvesterProblem::new(MatrixRef::Sparse(a), &right, &bbt)
                .with_left_abscissa(abscissa);
            solve_sylvester(&problem, &opts.sylvester)?
        }
    };
    let value = (model.c() * gramian * model.c().transpose()).trace();
    Ok(value.max(0.0))
}

fn check_compatible(full: &StateSpaceModel, reduced: &StateSpaceModel) -> Result<()> {
    if full.m() != reduced.m() {
        return Err(Error::mismatch("input dimension", full.m(), reduced.m()));
    }
    if full.p() != reduced.p() {
        return Err(Error::mismatch("output dimension", full.p(), reduced.p()));
    }
    Ok(())
}

/// The cross objective `f = 1/2 tr(C_r P C_r^T - 2 C_r X^T C^T)` with
/// `A X + X A_r^T + B B_r^T = 0` and `A_r P + P A_r^T + B_r B_r^T = 0`.
pub fn reduced_objective(
    full: &StateSpaceModel,
    reduced: &StateSpaceModel,
    opts: &SylvesterOptions,
) -> Result<f64> {
    check_compatible(full, reduced)?;
    let left_abscissa = full.require_stable("full-order A")?;
    reduced.require_stable("reduced A")?;
    let ar = reduced.a_dense();
    let (br, cr) = (reduced.b(), reduced.c());
    let cross = full.b() * br.transpose();
    let x = solve_sylvester(
        &SylvesterProblem::new(full.a().as_ref(), &ar, &cross).with_left_abscissa(left_abscissa),
        opts,
    )?;
    let p = solve_lyapunov(&ar, &(br * br.transpose()), opts)?;
    Ok(0.5 * (cr * p * cr.transpose() - 2.0 * cr * x.transpose() * full.c().transpose()).trace())
}

/// H² comparison of a reduced model against the full one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H2Report {
    /// Objective `f` of the reduced model.
    pub f: f64,
    /// `||G||^2`, absent when the full model exceeds the Gramian size cap.
    pub full_norm_squared: Option<f64>,
    /// `||G - G_r||^2 = 2 f + ||G||^2`.
    pub error_squared: Option<f64>,
}

impl H2Report {
    pub fn error(&self) -> Option<f64> {
        self.error_squared.map(f64::sqrt)
    }

    pub fn relative_error(&self) -> Option<f64> {
        match (self.error_squared, self.full_norm_squared) {
            (Some(e), Some(g)) if g > 0.0 => Some((e / g).sqrt()),
            _ => None,
        }
    }
}

/// Like [`h2_error_squared`] but degrades to the `f` part alone when the
/// full model is above the size cap.
pub fn h2_error_report(
    full: &StateSpaceModel,
    reduced: &StateSpaceModel,
    opts: &H2Options,
) -> Result<H2Report> {
    let f = reduced_objective(full, reduced, &opts.sylvester)?;
    let full_norm_squared = match h2_norm_squared(full, opts) {
        Ok(g) => Some(g),
        Err(Error::SizeCapExceeded { .. }) => None,
        Err(e) => return Err(e),
    };
    let error_squared = full_norm_squared.map(|g| {
        let e = 2.0 * f + g;
        if e < 0.0 {
            if e < -1e-8 * g {
                log::warn!("H2 error squared {e:e} is negative beyond tolerance (||G||^2 = {g:e})");
            }
            0.0
        } else {
            e
        }
    });
    Ok(H2Report { f, full_norm_squared, error_squared })
}

/// `||G - G_r||^2` through `2 f + ||G||^2`.
pub fn h2_error_squared(
    full: &StateSpaceModel,
    reduced: &StateSpaceModel,
    opts: &H2Options,
) -> Result<f64> {
    let report = h2_error_report(full, reduced, opts)?;
    report
        .error_squared
        .ok_or(Error::SizeCapExceeded { n: full.n(), cap: opts.size_cap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn scalar(a: f64, b: f64, c: f64) -> StateSpaceModel {
        StateSpaceModel::dense(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, b),
            DMatrix::from_element(1, 1, c),
        )
        .unwrap()
    }

    #[test]
    fn norm_examples() {
        let o = H2Options::default();
        assert!((h2_norm_squared(&scalar(-1.0, 1.0, 1.0), &o).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(h2_norm_squared(&scalar(-1.0, 1.0, 0.0), &o).unwrap(), 0.0);
        let m = StateSpaceModel::dense(
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]),
            DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        )
        .unwrap();
        assert!((h2_norm_squared(&m, &o).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn error_examples() {
        let o = H2Options::default();
        let full = scalar(-1.0, 1.0, 1.0);
        assert!(h2_error_squared(&full, &full, &o).unwrap().abs() < 1e-15);
        let e = h2_error_squared(&full, &scalar(-2.0, 1.0, 1.0), &o).unwrap();
        assert!((e - 1.0 / 12.0).abs() < 1e-14, "{e}");
        let e = h2_error_squared(&full, &scalar(-2.0, 0.0, 1.0), &o).unwrap();
        assert!((e - 0.5).abs() < 1e-15);
    }

    #[test]
    fn size_cap_degrades_report() {
        let o = H2Options { size_cap: 0, ..Default::default() };
        let full = scalar(-1.0, 1.0, 1.0);
        let r = h2_error_report(&full, &scalar(-2.0, 1.0, 1.0), &o).unwrap();
        assert!(r.full_norm_squared.is_none() && r.error_squared.is_none());
        assert!((r.f + 5.0 / 24.0).abs() < 1e-15);
        assert!(matches!(
            h2_error_squared(&full, &full, &o),
            Err(Error::SizeCapExceeded { .. })
        ));
    }

    #[test]
    fn mismatch_and_instability_rejected() {
        let o = H2Options::default();
        let full = scalar(-1.0, 1.0, 1.0);
        assert!(matches!(
            h2_error_squared(&full, &scalar(0.5, 1.0, 1.0), &o),
            Err(Error::Unstable { .. })
        ));
        let two_in = StateSpaceModel::dense(
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::from_element(1, 2, 1.0),
            DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        assert!(matches!(
            h2_error_squared(&full, &two_in, &o),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
