//! Eigenvalue tools: Schur forms, spectral abscissa and Perron power iteration.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;

use super::lu::{BandStructure, ShiftedLu};
use super::sparse::SparseMatrix;
use crate::{Error, Result};

/// Borrowed square operator, either dense or sparse.
#[derive(Debug, Clone, Copy)]
pub enum MatrixRef<'a> {
    Dense(&'a DMatrix<f64>),
    Sparse(&'a SparseMatrix),
}

impl MatrixRef<'_> {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            MatrixRef::Dense(m) => m.shape(),
            MatrixRef::Sparse(m) => m.shape(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match self {
            MatrixRef::Dense(m) => m.norm(),
            MatrixRef::Sparse(m) => m.frobenius_norm(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            MatrixRef::Dense(m) => (*m).clone(),
            MatrixRef::Sparse(m) => m.to_dense(),
        }
    }

    /// `self * z` for a dense right factor.
    pub fn mul_dense(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            MatrixRef::Dense(m) => *m * z,
            MatrixRef::Sparse(m) => m.mul_dense(z),
        }
    }

    pub fn is_metzler(&self) -> bool {
        match self {
            MatrixRef::Dense(m) => (0..m.nrows())
                .all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] >= 0.0)),
            MatrixRef::Sparse(m) => m.triplets().all(|(i, j, v)| i == j || v >= 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Largest dimension handled by a full dense eigendecomposition.
    pub dense_threshold: usize,
    /// Iteration cap is `iteration_factor * n`.
    pub iteration_factor: usize,
    pub tol: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { dense_threshold: 2000, iteration_factor: 10, tol: 1e-12 }
    }
}

impl EigenOptions {
    fn cap(&self, n: usize) -> usize {
        // Small matrices still get a workable number of QR sweeps.
        (self.iteration_factor * n).max(100)
    }
}

fn ensure_square(rows: usize, cols: usize) -> Result<()> {
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    Ok(())
}

fn is_exactly_symmetric(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..i).all(|j| m[(i, j)] == m[(j, i)]))
}

/// Real Schur decomposition `m = U T U^T` with `T` quasi upper triangular.
pub fn real_schur(m: &DMatrix<f64>, opts: &EigenOptions) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    ensure_square(m.nrows(), m.ncols())?;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("eigenvalue input".into()));
    }
    let n = m.nrows();
    if is_exactly_symmetric(m) {
        // Orthogonal diagonalization is a real Schur form, and the symmetric
        // QR iteration is far more robust on clustered spectra.
        let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, opts.cap(n)).ok_or_else(|| {
            Error::NoConvergence { what: "symmetric eigendecomposition".into(), iterations: opts.cap(n) }
        })?;
        return Ok((eig.eigenvectors, DMatrix::from_diagonal(&eig.eigenvalues)));
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, opts.cap(n)).ok_or_else(|| {
        Error::NoConvergence { what: "Schur decomposition".into(), iterations: opts.cap(n) }
    })?;
    Ok(schur.unpack())
}

/// Complex Schur decomposition `m = U T U^H` with `T` upper triangular.
///
/// Obtained from the real Schur form by unitary rotations that split each
/// 2x2 block carrying a complex conjugate pair.
pub fn complex_schur(
    m: &DMatrix<f64>,
    opts: &EigenOptions,
) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let (u, t) = real_schur(m, opts)?;
    let n = m.nrows();
    let mut u = u.map(|v| Complex64::new(v, 0.0));
    let mut t = t.map(|v| Complex64::new(v, 0.0));
    for k in (1..n).rev() {
        let sub = t[(k, k - 1)];
        if sub.re == 0.0 && sub.im == 0.0 {
            continue;
        }
        let (a, b, d) = (t[(k - 1, k - 1)], t[(k - 1, k)], t[(k, k)]);
        let half_trace = (a + d) * 0.5;
        let disc = ((a - d) * (a - d) * 0.25 + b * sub).sqrt();
        let mu = half_trace + disc - d;
        let r = (mu.norm_sqr() + sub.norm_sqr()).sqrt();
        let c = mu / r;
        let s = sub / r;
        // G = [conj(c) s; -s c], applied as T <- G T G^H, U <- U G^H.
        for j in (k - 1)..n {
            let x = t[(k - 1, j)];
            let y = t[(k, j)];
            t[(k - 1, j)] = c.conj() * x + s * y;
            t[(k, j)] = -s * x + c * y;
        }
        for i in 0..=k {
            let x = t[(i, k - 1)];
            let y = t[(i, k)];
            t[(i, k - 1)] = x * c + y * s.conj();
            t[(i, k)] = -x * s.conj() + y * c.conj();
        }
        for i in 0..n {
            let x = u[(i, k - 1)];
            let y = u[(i, k)];
            u[(i, k - 1)] = x * c + y * s.conj();
            u[(i, k)] = -x * s.conj() + y * c.conj();
        }
        t[(k, k - 1)] = Complex64::new(0.0, 0.0);
    }
    Ok((u, t))
}

/// All eigenvalues of a dense matrix.
pub fn eigenvalues(m: &DMatrix<f64>, opts: &EigenOptions) -> Result<Vec<Complex64>> {
    let (_, t) = complex_schur(m, opts)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Largest real part over the eigenvalues of `m`.
///
/// Dense eigendecomposition up to `opts.dense_threshold`; above it the
/// operator must be Metzler and the abscissa is its Perron root, found by
/// power iteration (see [`large_metzler_abscissa`]).
pub fn spectral_abscissa(m: MatrixRef<'_>, opts: &EigenOptions) -> Result<f64> {
    let (rows, cols) = m.shape();
    ensure_square(rows, cols)?;
    if rows == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    if rows <= opts.dense_threshold {
        let dense = m.to_dense();
        let values = eigenvalues(&dense, opts)?;
        return Ok(values.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max));
    }
    if !m.is_metzler() {
        return Err(Error::InvalidParameter(format!(
            "spectral abscissa of a {rows}x{rows} non-Metzler matrix is above the dense threshold"
        )));
    }
    let sparse;
    let sp = match m {
        MatrixRef::Sparse(s) => s,
        MatrixRef::Dense(d) => {
            sparse = SparseMatrix::from_dense(d)?;
            &sparse
        }
    };
    large_metzler_abscissa(sp, opts)
}

/// Result of a nonnegative power iteration.
#[derive(Debug, Clone)]
pub struct PowerResult {
    pub value: f64,
    pub vector: DVector<f64>,
    pub iterations: usize,
}

/// Power iteration for the Perron root of a nonnegative operator.
///
/// Starts from the all-ones vector and stops when successive Rayleigh
/// quotients differ by at most `tol * max(1, |value|)`.
pub fn nonnegative_power_iteration(
    n: usize,
    mut apply: impl FnMut(&DVector<f64>) -> DVector<f64>,
    tol: f64,
    cap: usize,
) -> Result<PowerResult> {
    let mut x = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut value = f64::NAN;
    for it in 1..=cap {
        let y = apply(&x);
        let rayleigh = x.dot(&y);
        let norm = y.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Ok(PowerResult { value: 0.0, vector: x, iterations: it });
        }
        x = y / norm;
        if (rayleigh - value).abs() <= tol * rayleigh.abs().max(1.0) {
            return Ok(PowerResult { value: rayleigh, vector: x, iterations: it });
        }
        value = rayleigh;
    }
    Err(Error::NoConvergence { what: "power iteration".into(), iterations: cap })
}

/// Spectral abscissa of a large sparse Metzler matrix.
///
/// For a stable Metzler `M`, `-M^{-1}` is nonnegative with Perron root
/// `-1/abscissa`, so inverse iteration converges at the ratio of the two
/// rightmost eigenvalues. If the iterate loses positivity (or `M` is
/// singular), `M` is not stable and the abscissa is located by power
/// iteration on the nonnegative shift `M + sI`.
pub fn large_metzler_abscissa(m: &SparseMatrix, opts: &EigenOptions) -> Result<f64> {
    let n = m.nrows();
    let cap = opts.iteration_factor * n;
    if let Some(value) = inverse_metzler_iteration(m, opts.tol, cap)? {
        return Ok(value);
    }
    let shift = m.diagonal().iter().fold(0.0f64, |acc, d| acc.max(d.abs())) + 1.0;
    let shifted = m.add_diagonal(shift);
    let res = nonnegative_power_iteration(
        n,
        |x| DVector::from_vec(shifted.mul_vec(x.as_slice())),
        opts.tol,
        cap,
    )?;
    Ok(res.value - shift)
}

fn inverse_metzler_iteration(m: &SparseMatrix, tol: f64, cap: usize) -> Result<Option<f64>> {
    let n = m.nrows();
    let structure = BandStructure::analyze(m)?;
    let lu = match ShiftedLu::factor(m, &structure, Complex64::new(0.0, 0.0)) {
        Ok(lu) => lu,
        Err(Error::Singular(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let mut positive = true;
    let res = match nonnegative_power_iteration(
        n,
        |x| {
            let rhs: Vec<Complex64> = x.iter().map(|&v| Complex64::new(-v, 0.0)).collect();
            let y: Vec<f64> = lu.solve(&rhs).iter().map(|z| z.re).collect();
            if y.iter().any(|&v| v < 0.0) {
                positive = false;
            }
            DVector::from_vec(y)
        },
        tol,
        cap,
    ) {
        Ok(res) => res,
        Err(Error::NoConvergence { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    if !positive || !(res.value > 0.0) {
        return Ok(None);
    }
    Ok(Some(-1.0 / res.value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abscissa_examples() {
        let o = EigenOptions::default();
        let m = DMatrix::from_row_slice(1, 1, &[-1.0]);
        assert_eq!(spectral_abscissa(MatrixRef::Dense(&m), &o).unwrap(), -1.0);
        let m = DMatrix::from_row_slice(2, 2, &[-2.0, 1.0, 1.0, -2.0]);
        assert!((spectral_abscissa(MatrixRef::Dense(&m), &o).unwrap() + 1.0).abs() < 1e-14);
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![-4.0, -4.0]));
        assert!((spectral_abscissa(MatrixRef::Dense(&m), &o).unwrap() + 4.0).abs() < 1e-14);
    }

    #[test]
    fn non_square_rejected() {
        let m = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(
            spectral_abscissa(MatrixRef::Dense(&m), &EigenOptions::default()),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn complex_schur_reconstructs_rotation_matrix() {
        // Eigenvalues -1 ± 2i and -3.
        let m = DMatrix::from_row_slice(3, 3, &[-1.0, 2.0, 0.5, -2.0, -1.0, 0.0, 0.3, 0.1, -3.0]);
        let (u, t) = complex_schur(&m, &EigenOptions::default()).unwrap();
        let back = &u * &t * u.adjoint();
        for i in 0..3 {
            for j in 0..3 {
                assert!((back[(i, j)] - Complex64::new(m[(i, j)], 0.0)).norm() < 1e-12);
                if i > j {
                    assert!(t[(i, j)].norm() < 1e-14);
                }
            }
        }
        let uu = u.adjoint() * &u;
        assert!((uu - DMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn large_path_matches_dense_for_metzler() {
        // Path graph with decay, forced onto the large path by a low threshold.
        let n = 30;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, -2.5 - 0.01 * i as f64));
            if i + 1 < n {
                t.push((i, i + 1, 1.0));
                t.push((i + 1, i, 0.8));
            }
        }
        let sp = SparseMatrix::from_triplets(n, n, t).unwrap();
        let dense_val = spectral_abscissa(MatrixRef::Sparse(&sp), &EigenOptions::default()).unwrap();
        let small = EigenOptions { dense_threshold: 4, ..Default::default() };
        let large_val = spectral_abscissa(MatrixRef::Sparse(&sp), &small).unwrap();
        assert!((dense_val - large_val).abs() < 1e-9, "{dense_val} vs {large_val}");

        // Unstable: shifted power path. The path spectrum is tightly packed,
        // so the default 10n cap is too short for plain power iteration.
        let unstable = sp.add_diagonal(2.5);
        let d = spectral_abscissa(MatrixRef::Sparse(&unstable), &EigenOptions::default()).unwrap();
        let patient = EigenOptions { iteration_factor: 2000, ..small };
        assert!(matches!(
            spectral_abscissa(MatrixRef::Sparse(&unstable), &small),
            Err(Error::NoConvergence { .. })
        ));
        let l = spectral_abscissa(MatrixRef::Sparse(&unstable), &patient).unwrap();
        assert!(d > 0.0);
        assert!((d - l).abs() < 1e-6, "{d} vs {l}");
    }
}
