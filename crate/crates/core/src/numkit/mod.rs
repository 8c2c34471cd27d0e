//! Linear-algebra kernels shared by the rest of the crate.

pub mod eigen;
pub mod lu;
pub mod mmio;
pub mod sparse;
pub mod sylvester;

pub use eigen::{spectral_abscissa, EigenOptions, MatrixRef};
pub use sparse::SparseMatrix;
pub use sylvester::{solve_lyapunov, solve_sylvester, SylvesterOptions, SylvesterProblem};
