use nalgebra::DMatrix;

use super::{StateMatrix, StateSpaceModel};
use crate::clustering::ClusterPartition;
use crate::numkit::SparseMatrix;
use crate::{Error, Result};

/// Side length `d` of the square domain.
pub const HEAT_DOMAIN: f64 = 10.0;
/// Thermal conductivity `a`.
pub const HEAT_CONDUCTIVITY: f64 = 0.0241;

/// `beta = a / h^2` with grid spacing `h = d / (K + 1)`.
pub fn heat2d_beta(k: usize) -> f64 {
    let h = HEAT_DOMAIN / (k as f64 + 1.0);
    HEAT_CONDUCTIVITY / (h * h)
}

/// Finite-difference model of the 2-D heat equation on a `K x K` interior
/// grid with Dirichlet boundary, nodes numbered row-major.
///
/// `A = beta * (5-point Laplacian)`, `B = beta * [e_1, e_n]`,
/// `C = [e_1, e_n]^T`. When `K` is divisible by 4 the second value is the
/// partition of the grid into a 4x4 array of square `(K/4) x (K/4)` clusters.
pub fn heat2d(k: usize) -> Result<(StateSpaceModel, Option<ClusterPartition>)> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("heat grid size K must be >= 2, got {k}")));
    }
    let n = k * k;
    let beta = heat2d_beta(k);
    let mut triplets = Vec::with_capacity(5 * n);
    for row in 0..k {
        for col in 0..k {
            let i = row * k + col;
            if row > 0 {
                triplets.push((i, i - k, beta));
            }
            if col > 0 {
                triplets.push((i, i - 1, beta));
            }
            triplets.push((i, i, -4.0 * beta));
            if col + 1 < k {
                triplets.push((i, i + 1, beta));
            }
            if row + 1 < k {
                triplets.push((i, i + k, beta));
            }
        }
    }
    let a = SparseMatrix::from_triplets(n, n, triplets)?;
    let mut b = DMatrix::zeros(n, 2);
    b[(0, 0)] = beta;
    b[(n - 1, 1)] = beta;
    let mut c = DMatrix::zeros(2, n);
    c[(0, 0)] = 1.0;
    c[(1, n - 1)] = 1.0;
    let model = StateSpaceModel::new(StateMatrix::Sparse(a), b, c)?;

    let partition = if k % 4 == 0 {
        let block = k / 4;
        let assignment = (0..n)
            .map(|i| {
                let (row, col) = (i / k, i % k);
                (row / block) * 4 + col / block
            })
            .collect();
        Some(ClusterPartition::from_assignment(assignment)?)
    } else {
        None
    };
    Ok((model, partition))
}
