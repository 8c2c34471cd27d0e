//! Perron analysis of the initial reduced state matrix, the box of stable
//! Metzler matrices built from it, and the projections used by the block
//! iteration.

mod graph;
mod pattern;
mod perron;
mod stability_box;

pub use graph::{check_irreducible, require_irreducible, strongly_connected_components};
pub use pattern::{IndexSet, SparsityPattern};
pub use perron::{perron, PerronData, PERRON_MAX_ITERS, PERRON_TOL};
pub use stability_box::{
    build_box, project_a, project_b, project_c, StabilityBox, DEFAULT_EPSILON, DEFAULT_GAMMA,
};
