//! Objective, gradients, step constants and the cyclic block projected
//! gradient iteration.

mod algorithm;
mod bundle;
mod certificate;
mod config;
mod trace;

pub use algorithm::{run_algorithm1, stationarity_residual, RunFailure, RunOutcome, StopReason, DESCENT_TOL};
pub use bundle::{
    assemble_bundle, grad_a, grad_b, grad_c, lipschitz_a, lipschitz_b, lipschitz_c, objective_f,
    objective_f_dual, GradientBundle,
};
pub use certificate::{certify, FeasibilityCertificate, ABSCISSA_SLACK};
pub use config::AlgoConfig;
pub use trace::{IterateTrace, TraceRecord};
