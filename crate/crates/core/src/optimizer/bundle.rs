use nalgebra::DMatrix;

use super::AlgoConfig;
use crate::numkit::{solve_lyapunov, solve_sylvester, SylvesterOptions, SylvesterProblem};
use crate::sysmodel::{StateMatrix, StateSpaceModel};
use crate::{Error, Result};

/// Solutions of the four matrix equations shared by the objective, the
/// gradients and the step constants:
///
/// - `A X + X A_r^T + B B_r^T = 0`
/// - `A^T Y + Y A_r - C^T C_r = 0`
/// - `A_r P + P A_r^T + B_r B_r^T = 0`
/// - `A_r^T Q + Q A_r + C_r^T C_r = 0`
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
}

pub(crate) fn check_dims(full: &StateSpaceModel, red: &StateSpaceModel) -> Result<()> {
    if full.m() != red.m() {
        return Err(Error::mismatch("input dimension", full.m(), red.m()));
    }
    if full.p() != red.p() {
        return Err(Error::mismatch("output dimension", full.p(), red.p()));
    }
    Ok(())
}

pub fn assemble_bundle(
    full: &StateSpaceModel,
    red: &StateSpaceModel,
    opts: &SylvesterOptions,
) -> Result<GradientBundle> {
    check_dims(full, red)?;
    let abscissa = full.require_stable("full-order A")?;
    red.require_stable("reduced A")?;
    let ar = red.a_dense();
    let ar_t = ar.transpose();
    let (br, cr) = (red.b(), red.c());

    let bx = full.b() * br.transpose();
    let x = solve_sylvester(
        &SylvesterProblem::new(full.a().as_ref(), &ar, &bx).with_left_abscissa(abscissa),
        opts,
    )?;

    // A^T Y + Y (A_r^T)^T + (-C^T C_r) = 0, same spectrum as A.
    let cy = -(full.c().transpose() * cr);
    let a_t: StateMatrix = full.a().transpose();
    let y = solve_sylvester(
        &SylvesterProblem::new(a_t.as_ref(), &ar_t, &cy).with_left_abscissa(abscissa),
        opts,
    )?;

    let p = solve_lyapunov(&ar, &(br * br.transpose()), opts)?;
    let q = solve_lyapunov(&ar_t, &(cr.transpose() * cr), opts)?;
    Ok(GradientBundle { x, y, p, q })
}

/// `f = 1/2 tr(C_r P C_r^T - 2 C_r X^T C^T)`.
pub fn objective_f(bundle: &GradientBundle, full: &StateSpaceModel, red: &StateSpaceModel) -> f64 {
    let cr = red.c();
    let cx = full.c() * &bundle.x;
    0.5 * ((cr * &bundle.p * cr.transpose()).trace() - 2.0 * (cr * cx.transpose()).trace())
}

/// The same objective through the dual form `1/2 tr(B_r^T Q B_r + 2 B^T Y B_r)`.
pub fn objective_f_dual(bundle: &GradientBundle, full: &StateSpaceModel, red: &StateSpaceModel) -> f64 {
    let br = red.b();
    let yb = &bundle.y * br;
    0.5 * ((br.transpose() * &bundle.q * br).trace() + 2.0 * (full.b().transpose() * yb).trace())
}

/// `Q P + Y^T X`.
pub fn grad_a(bundle: &GradientBundle) -> DMatrix<f64> {
    &bundle.q * &bundle.p + bundle.y.transpose() * &bundle.x
}

/// `Q B_r + Y^T B`.
pub fn grad_b(bundle: &GradientBundle, full: &StateSpaceModel, red: &StateSpaceModel) -> DMatrix<f64> {
    &bundle.q * red.b() + bundle.y.transpose() * full.b()
}

/// `C_r P - C X`.
pub fn grad_c(bundle: &GradientBundle, full: &StateSpaceModel, red: &StateSpaceModel) -> DMatrix<f64> {
    red.c() * &bundle.p - full.c() * &bundle.x
}

/// `(c1 + c2 ||B_r|| ||C_r||) ||B_r|| ||C_r||` (Frobenius norms).
pub fn lipschitz_a(red: &StateSpaceModel, cfg: &AlgoConfig) -> f64 {
    let nbc = red.b().norm() * red.c().norm();
    (cfg.c1 + cfg.c2 * nbc) * nbc
}

/// `||Q||_F`, exact for the `B_r` block.
pub fn lipschitz_b(bundle: &GradientBundle) -> f64 {
    bundle.q.norm()
}

/// `||P||_F`, exact for the `C_r` block.
pub fn lipschitz_c(bundle: &GradientBundle) -> f64 {
    bundle.p.norm()
}
