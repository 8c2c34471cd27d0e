//! Independent oracles and random instance generators shared by the
//! integration tests. Nothing here calls the solvers under test.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use posreduce::clustering::ClusterPartition;
use posreduce::sysmodel::StateSpaceModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random irreducible, strictly diagonally dominant Metzler matrix. A
/// directed cycle through all nodes guarantees strong connectivity; further
/// edges appear with probability `density`.
pub fn random_metzler(rng: &mut ChaCha8Rng, n: usize, density: f64) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let on_cycle = n > 1 && j == (i + 1) % n;
            if i != j && (on_cycle || rng.random::<f64>() < density) {
                a[(i, j)] = rng.random_range(0.1..1.0);
            }
        }
    }
    for i in 0..n {
        let off: f64 = a.row(i).sum();
        a[(i, i)] = -off - rng.random_range(0.1..1.0);
    }
    a
}

pub fn random_nonneg(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(0.0..1.0))
}

pub fn random_model(rng: &mut ChaCha8Rng, n: usize, m: usize, p: usize) -> StateSpaceModel {
    let a = random_metzler(rng, n, 0.3);
    let b = random_nonneg(rng, n, m);
    let c = random_nonneg(rng, p, n);
    StateSpaceModel::dense(a, b, c).unwrap()
}

/// Uniformly random partition of `n` nodes into exactly `r` clusters.
pub fn random_partition(rng: &mut ChaCha8Rng, n: usize, r: usize) -> ClusterPartition {
    let mut nodes: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        nodes.swap(i, rng.random_range(0..=i));
    }
    let mut assignment = vec![0; n];
    for (k, &i) in nodes.iter().enumerate() {
        assignment[i] = if k < r { k } else { rng.random_range(0..r) };
    }
    ClusterPartition::from_assignment(assignment).unwrap()
}

/// `left Z + Z right^T + constant = 0` by the Kronecker form
/// `(I kron left + right kron I) vec Z = -vec constant`.
pub fn kron_sylvester(left: &DMatrix<f64>, right: &DMatrix<f64>, constant: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, r) = (left.nrows(), right.nrows());
    let mut k = DMatrix::zeros(n * r, n * r);
    for j in 0..r {
        for i in 0..n {
            for l in 0..n {
                k[(j * n + i, j * n + l)] += left[(i, l)];
            }
            for l in 0..r {
                k[(j * n + i, l * n + i)] += right[(j, l)];
            }
        }
    }
    let rhs = DVector::from_iterator(n * r, constant.iter().map(|v| -v));
    let z = k.lu().solve(&rhs).expect("Kronecker system is nonsingular");
    DMatrix::from_column_slice(n, r, z.as_slice())
}

/// `f = 1/2 tr(C_r P C_r^T - 2 C_r X^T C^T)` from Kronecker solves.
pub fn kron_objective(full: &StateSpaceModel, red: &StateSpaceModel) -> f64 {
    let (a, ar) = (full.a_dense(), red.a_dense());
    let (br, cr) = (red.b(), red.c());
    let x = kron_sylvester(&a, &ar, &(full.b() * br.transpose()));
    let p = kron_sylvester(&ar, &ar, &(br * br.transpose()));
    0.5 * ((cr * p * cr.transpose()).trace() - 2.0 * (cr * x.transpose() * full.c().transpose()).trace())
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

fn transfer(m: &StateSpaceModel, omega: f64) -> DMatrix<Complex64> {
    let n = m.n();
    let a = m.a_dense().map(|v| Complex64::new(v, 0.0));
    let shifted = DMatrix::<Complex64>::identity(n, n) * Complex64::new(0.0, omega) - a;
    let b = m.b().map(|v| Complex64::new(v, 0.0));
    let x = shifted.lu().solve(&b).expect("i omega is not an eigenvalue");
    m.c().map(|v| Complex64::new(v, 0.0)) * x
}

/// `||G - G_r||^2 = 1/(2 pi) int ||G(i w) - G_r(i w)||_F^2 dw` over
/// `[-1e6, 1e6]`, using `w = tan(theta)` and the symmetry in `w`.
pub fn h2_error_quadrature(full: &StateSpaceModel, red: &StateSpaceModel) -> f64 {
    let integrand = |theta: f64| {
        let w = theta.tan();
        let d = transfer(full, w) - transfer(red, w);
        let sec2 = 1.0 + w * w;
        d.iter().map(|z| z.norm_sqr()).sum::<f64>() * sec2
    };
    let top = 1e6f64.atan();
    2.0 * adaptive_simpson(&integrand, 0.0, top, 1e-12) / (2.0 * std::f64::consts::PI)
}

/// Spectral radius through the dense eigenvalues of nalgebra's own complex
/// eigen solver on a real matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_real_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Off-diagonal zero set of the 4x4 grid graph on 16 clusters numbered
/// row-major.
pub fn grid_16_zero_set() -> std::collections::BTreeSet<(usize, usize)> {
    let mut set = std::collections::BTreeSet::new();
    for i in 0..16usize {
        for j in 0..16usize {
            let manhattan = (i / 4).abs_diff(j / 4) + (i % 4).abs_diff(j % 4);
            if i != j && manhattan != 1 {
                set.insert((i, j));
            }
        }
    }
    set
}
