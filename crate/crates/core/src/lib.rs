//! Structure-preserving H² model reduction for asymptotically stable positive
//! network systems.
//!
//! A large Metzler system `(A, B, C)` is first aggregated over a cluster
//! partition into an initial reduced model. The reduced model is then refined
//! by a cyclic block projected gradient method whose iterates stay inside a
//! box of stable Metzler matrices built from the Perron pair of the initial
//! reduced state matrix, so every iterate is stable, positive and keeps the
//! cluster interconnection pattern.
//!
//! Modules:
//! - [`numkit`]: sparse storage, banded LU, eigen tools, Sylvester/Lyapunov solvers,
//!   Matrix Market IO.
//! - [`sysmodel`]: state-space models, positivity checks, H² norms, the heat benchmark.
//! - [`clustering`]: partitions, the characteristic matrix, the initial reduced model.
//! - [`feasible`]: Perron analysis, the stability box and the block projections.
//! - [`optimizer`]: objective, gradients, step constants and the block iteration.

pub mod clustering;
pub mod error;
pub mod feasible;
pub mod numkit;
pub mod optimizer;
mod serde_rows;
pub mod sysmodel;

pub use error::{Error, Result};
