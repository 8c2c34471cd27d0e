//! Sylvester and Lyapunov solvers in the normal form
//! `left * Z + Z * right^T + constant = 0`.
//!
//! Dense left factors use Bartels-Stewart on complex Schur forms of both
//! factors. Sparse left factors only decompose the small right factor and
//! then perform one shifted sparse LU per distinct eigenvalue, which keeps
//! the cost linear in the number of columns of `Z` times one band LU.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::eigen::{complex_schur, spectral_abscissa, EigenOptions, MatrixRef};
use super::lu::{BandStructure, ShiftedLu};
use super::sparse::SparseMatrix;
use crate::{Error, Result};

type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, Copy)]
pub struct SylvesterProblem<'a> {
    /// `n x n`, dense or sparse.
    pub left: MatrixRef<'a>,
    /// `r x r`.
    pub right: &'a DMatrix<f64>,
    /// `n x r`.
    pub constant: &'a DMatrix<f64>,
    /// Spectral abscissa of `left` when the caller has already certified it.
    /// Skips a potentially expensive eigen computation on large operators.
    pub left_abscissa: Option<f64>,
}

impl<'a> SylvesterProblem<'a> {
    pub fn new(left: MatrixRef<'a>, right: &'a DMatrix<f64>, constant: &'a DMatrix<f64>) -> Self {
        Self { left, right, constant, left_abscissa: None }
    }

    pub fn with_left_abscissa(mut self, abscissa: f64) -> Self {
        self.left_abscissa = Some(abscissa);
        self
    }

    fn validate(&self, opts: &SylvesterOptions) -> Result<()> {
        let (n, n2) = self.left.shape();
        if n != n2 {
            return Err(Error::NotSquare { rows: n, cols: n2 });
        }
        let r = self.right.nrows();
        if !self.right.is_square() {
            return Err(Error::NotSquare { rows: r, cols: self.right.ncols() });
        }
        if self.constant.shape() != (n, r) {
            return Err(Error::mismatch(
                "Sylvester constant",
                format!("{n}x{r}"),
                format!("{}x{}", self.constant.nrows(), self.constant.ncols()),
            ));
        }
        if self.constant.iter().any(|v| !v.is_finite()) || self.right.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Sylvester data".into()));
        }
        let right_abscissa = spectral_abscissa(MatrixRef::Dense(self.right), &opts.eigen)?;
        if !(right_abscissa < 0.0) {
            return Err(Error::Unstable { what: "right factor".into(), abscissa: right_abscissa });
        }
        let left_abscissa = match self.left_abscissa {
            Some(a) => a,
            None => spectral_abscissa(self.left, &opts.eigen)?,
        };
        if !(left_abscissa < 0.0) {
            return Err(Error::Unstable { what: "left factor".into(), abscissa: left_abscissa });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SylvesterOptions {
    pub rtol: f64,
    /// Largest eigenvector-matrix condition number for the diagonal route.
    pub max_eigvec_condition: f64,
    pub eigen: EigenOptions,
}

impl Default for SylvesterOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, max_eigvec_condition: 1e8, eigen: EigenOptions::default() }
    }
}

/// Which decomposition of the right factor drove a sparse solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SparseRoute {
    Eigen,
    Schur,
}

/// Solves `left * Z + Z * right^T + constant = 0`.
pub fn solve_sylvester(p: &SylvesterProblem<'_>, opts: &SylvesterOptions) -> Result<DMatrix<f64>> {
    p.validate(opts)?;
    let z = match p.left {
        MatrixRef::Dense(left) => bartels_stewart(left, p.right, p.constant, opts)?,
        MatrixRef::Sparse(left) => sparse_sylvester(left, p.right, p.constant, opts)?.0,
    };
    check_residual(p, &z, opts.rtol)?;
    Ok(z)
}

/// Sparse-path solve that also reports which route was taken.
pub fn solve_sylvester_sparse(
    left: &SparseMatrix,
    right: &DMatrix<f64>,
    constant: &DMatrix<f64>,
    opts: &SylvesterOptions,
) -> Result<(DMatrix<f64>, SparseRoute)> {
    let p = SylvesterProblem::new(MatrixRef::Sparse(left), right, constant);
    p.validate(opts)?;
    let (z, route) = sparse_sylvester(left, right, constant, opts)?;
    check_residual(&p, &z, opts.rtol)?;
    Ok((z, route))
}

/// Solves the Lyapunov equation `M Z + Z M^T + S = 0` and returns the
/// symmetrized solution.
pub fn solve_lyapunov(
    m: &DMatrix<f64>,
    s: &DMatrix<f64>,
    opts: &SylvesterOptions,
) -> Result<DMatrix<f64>> {
    if !s.is_square() || s.nrows() != m.nrows() {
        return Err(Error::mismatch(
            "Lyapunov right-hand side",
            format!("{0}x{0}", m.nrows()),
            format!("{}x{}", s.nrows(), s.ncols()),
        ));
    }
    let asymmetry = (s - s.transpose()).norm();
    if asymmetry > 1e-12 * s.norm() {
        return Err(Error::NotSymmetric { asymmetry });
    }
    let z = solve_sylvester(&SylvesterProblem::new(MatrixRef::Dense(m), m, s), opts)?;
    Ok((&z + z.transpose()) * 0.5)
}

fn check_residual(p: &SylvesterProblem<'_>, z: &DMatrix<f64>, rtol: f64) -> Result<()> {
    let residual = (p.left.mul_dense(z) + z * p.right.transpose() + p.constant).norm();
    let zn = z.norm();
    let bound = rtol * (p.left.frobenius_norm() * zn + zn * p.right.norm() + p.constant.norm());
    if residual.is_finite() && residual <= bound {
        Ok(())
    } else {
        Err(Error::ResidualTooLarge { residual, bound })
    }
}

fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}

fn real_part(m: &CMatrix) -> DMatrix<f64> {
    m.map(|z| z.re)
}

/// Dense Bartels-Stewart on complex Schur forms.
///
/// With `left = U T U^H` and `right = V S V^H`, the unknown `W = U^H Z conj(V)`
/// satisfies `T W + W S^T + U^H constant conj(V) = 0`; since `S^T` is lower
/// triangular the columns are solved from last to first, each by one
/// upper-triangular substitution.
fn bartels_stewart(
    left: &DMatrix<f64>,
    right: &DMatrix<f64>,
    constant: &DMatrix<f64>,
    opts: &SylvesterOptions,
) -> Result<DMatrix<f64>> {
    let n = left.nrows();
    let r = right.nrows();
    let (u, t) = complex_schur(left, &opts.eigen)?;
    let (v, s) = complex_schur(right, &opts.eigen)?;
    let v_conj = v.map(|z| z.conj());
    let rhs = u.adjoint() * to_complex(constant) * &v_conj;

    let scale = t.iter().chain(s.iter()).fold(0.0f64, |a, z| a.max(z.norm())).max(f64::MIN_POSITIVE);
    let mut w = CMatrix::zeros(n, r);
    for j in (0..r).rev() {
        let mut col: DVector<Complex64> = -rhs.column(j);
        for k in j + 1..r {
            let coeff = s[(j, k)];
            if coeff.norm() != 0.0 {
                col -= w.column(k) * coeff;
            }
        }
        let shift = s[(j, j)];
        for i in (0..n).rev() {
            let mut acc = col[i];
            for l in i + 1..n {
                acc -= t[(i, l)] * col[l];
            }
            let diag = t[(i, i)] + shift;
            if diag.norm() <= scale * f64::EPSILON {
                return Err(Error::Singular("Bartels-Stewart diagonal system".into()));
            }
            col[i] = acc / diag;
        }
        w.set_column(j, &col);
    }
    Ok(real_part(&(u * w * v.transpose())))
}

/// Eigenvectors of an upper-triangular matrix by back substitution, columns
/// normalized to unit length. `None` when two diagonal entries coincide to
/// working precision.
fn triangular_eigenvectors(t: &CMatrix) -> Option<CMatrix> {
    let r = t.nrows();
    let scale = t.iter().fold(0.0f64, |a, z| a.max(z.norm())).max(f64::MIN_POSITIVE);
    let mut x = CMatrix::zeros(r, r);
    for j in 0..r {
        let lambda = t[(j, j)];
        x[(j, j)] = Complex64::new(1.0, 0.0);
        for i in (0..j).rev() {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in i + 1..=j {
                acc += t[(i, l)] * x[(l, j)];
            }
            let gap = t[(i, i)] - lambda;
            if gap.norm() <= scale * 1e-14 {
                return None;
            }
            x[(i, j)] = -acc / gap;
        }
        let norm = x.column(j).norm();
        x.column_mut(j).unscale_mut(norm);
    }
    Some(x)
}

/// Groups numerically identical shifts so each distinct one is factored once.
struct ShiftCache<'a> {
    matrix: &'a SparseMatrix,
    structure: BandStructure,
    factors: Vec<(Complex64, ShiftedLu)>,
}

impl<'a> ShiftCache<'a> {
    fn new(matrix: &'a SparseMatrix) -> Result<Self> {
        Ok(Self { matrix, structure: BandStructure::analyze(matrix)?, factors: Vec::new() })
    }

    fn solve(&mut self, shift: Complex64, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let tol = 1e-14 * shift.norm().max(1e-300);
        let pos = self.factors.iter().position(|(s, _)| (s - shift).norm() <= tol);
        let idx = match pos {
            Some(i) => i,
            None => {
                let lu = ShiftedLu::factor(self.matrix, &self.structure, shift)?;
                self.factors.push((shift, lu));
                self.factors.len() - 1
            }
        };
        Ok(self.factors[idx].1.solve(rhs))
    }
}

fn sparse_sylvester(
    left: &SparseMatrix,
    right: &DMatrix<f64>,
    constant: &DMatrix<f64>,
    opts: &SylvesterOptions,
) -> Result<(DMatrix<f64>, SparseRoute)> {
    let n = left.nrows();
    let r = right.nrows();
    let (v, s) = complex_schur(right, &opts.eigen)?;
    let mut cache = ShiftCache::new(left)?;

    // Diagonal route: right = E diag(lambda) E^{-1}, W = Z E^{-T},
    // (left + lambda_j I) w_j = -(constant E^{-T})_j, Z = W E^T.
    if let Some(x) = triangular_eigenvectors(&s) {
        let e = &v * x;
        let svd = e.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin > 0.0 && smax / smin <= opts.max_eigvec_condition {
            let et = e.transpose();
            // constant E^{-T} = (E^{-1} constant^T)^T
            let rhs = e
                .lu()
                .solve(&to_complex(&constant.transpose()))
                .ok_or_else(|| Error::Singular("eigenvector matrix".into()))?
                .transpose();
            let mut w = CMatrix::zeros(n, r);
            for j in 0..r {
                let b: Vec<Complex64> = rhs.column(j).iter().map(|z| -z).collect();
                let col = cache.solve(s[(j, j)], &b)?;
                w.set_column(j, &DVector::from_vec(col));
            }
            return Ok((real_part(&(w * et)), SparseRoute::Eigen));
        }
    }

    // Schur route: W = Z conj(V), left W + W S^T + constant conj(V) = 0,
    // columns from last to first.
    let v_conj = v.map(|z| z.conj());
    let rhs = to_complex(constant) * &v_conj;
    let mut w = CMatrix::zeros(n, r);
    for j in (0..r).rev() {
        let mut col: DVector<Complex64> = -rhs.column(j);
        for k in j + 1..r {
            let coeff = s[(j, k)];
            if coeff.norm() != 0.0 {
                col -= w.column(k) * coeff;
            }
        }
        let solved = cache.solve(s[(j, j)], col.as_slice())?;
        w.set_column(j, &DVector::from_vec(solved));
    }
    Ok((real_part(&(w * v.transpose())), SparseRoute::Schur))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, data)
    }

    fn solve_dense(l: &DMatrix<f64>, r: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
        solve_sylvester(&SylvesterProblem::new(MatrixRef::Dense(l), r, c), &Default::default())
            .unwrap()
    }

    #[test]
    fn scalar_examples() {
        let z = solve_dense(&d(1, 1, &[-1.0]), &d(1, 1, &[-1.0]), &d(1, 1, &[1.0]));
        assert!((z[(0, 0)] - 0.5).abs() < 1e-15);
        let z = solve_dense(&d(1, 1, &[-1.0]), &d(1, 1, &[-2.0]), &d(1, 1, &[1.0]));
        assert!((z[(0, 0)] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn decoupled_example() {
        let l = d(2, 2, &[-2.0, 0.0, 0.0, -3.0]);
        let z = solve_dense(&l, &d(1, 1, &[-1.0]), &d(2, 1, &[3.0, 4.0]));
        assert!((z[(0, 0)] - 1.0).abs() < 1e-14 && (z[(1, 0)] - 1.0).abs() < 1e-14);
        let (zs, _) = solve_sylvester_sparse(
            &SparseMatrix::from_dense(&l).unwrap(),
            &d(1, 1, &[-1.0]),
            &d(2, 1, &[3.0, 4.0]),
            &Default::default(),
        )
        .unwrap();
        assert!((zs - z).norm() < 1e-14);
    }

    #[test]
    fn lyapunov_examples() {
        let o = SylvesterOptions::default();
        let z = solve_lyapunov(&d(1, 1, &[-1.0]), &d(1, 1, &[1.0]), &o).unwrap();
        assert!((z[(0, 0)] - 0.5).abs() < 1e-15);
        let z = solve_lyapunov(&d(1, 1, &[-2.0]), &d(1, 1, &[1.0]), &o).unwrap();
        assert!((z[(0, 0)] - 0.25).abs() < 1e-15);
        let z = solve_lyapunov(&(-DMatrix::identity(2, 2)), &DMatrix::identity(2, 2), &o).unwrap();
        assert!((z - DMatrix::identity(2, 2) * 0.5).norm() < 1e-15);
    }

    #[test]
    fn asymmetric_lyapunov_rhs_rejected() {
        let err = solve_lyapunov(
            &(-DMatrix::identity(2, 2)),
            &d(2, 2, &[1.0, 0.5, 0.0, 1.0]),
            &Default::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotSymmetric { .. }));
    }

    #[test]
    fn unstable_factors_rejected() {
        let o = SylvesterOptions::default();
        let err = solve_sylvester(
            &SylvesterProblem::new(MatrixRef::Dense(&d(1, 1, &[1.0])), &d(1, 1, &[-1.0]), &d(1, 1, &[1.0])),
            &o,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Unstable { .. }));
        let err = solve_sylvester(
            &SylvesterProblem::new(MatrixRef::Dense(&d(1, 1, &[-1.0])), &d(1, 1, &[0.5]), &d(1, 1, &[1.0])),
            &o,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Unstable { .. }));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let err = solve_sylvester(
            &SylvesterProblem::new(
                MatrixRef::Dense(&d(2, 2, &[-1.0, 0.0, 0.0, -1.0])),
                &d(1, 1, &[-1.0]),
                &d(1, 1, &[1.0]),
            ),
            &Default::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn repeated_eigenvalues_take_schur_route() {
        // Jordan block: not diagonalizable.
        let right = d(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
        let left = SparseMatrix::from_dense(&d(3, 3, &[-2.0, 1.0, 0.0, 0.5, -3.0, 1.0, 0.0, 0.2, -1.5]))
            .unwrap();
        let c = d(3, 2, &[1.0, 0.0, 2.0, -1.0, 0.5, 0.3]);
        let (z, route) = solve_sylvester_sparse(&left, &right, &c, &Default::default()).unwrap();
        assert_eq!(route, SparseRoute::Schur);
        let zd = solve_dense(&left.to_dense(), &right, &c);
        assert!((&z - &zd).norm() <= 1e-12 * zd.norm());
    }

    #[test]
    fn complex_right_spectrum_takes_eigen_route() {
        let right = d(2, 2, &[-1.0, 2.0, -2.0, -1.0]);
        let left = SparseMatrix::from_dense(&d(2, 2, &[-2.0, 1.0, 0.0, -3.0])).unwrap();
        let c = d(2, 2, &[1.0, 0.0, 2.0, -1.0]);
        let (z, route) = solve_sylvester_sparse(&left, &right, &c, &Default::default()).unwrap();
        assert_eq!(route, SparseRoute::Eigen);
        let zd = solve_dense(&left.to_dense(), &right, &c);
        assert!((&z - &zd).norm() <= 1e-12 * zd.norm());
    }
}
