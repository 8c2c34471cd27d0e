use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::bundle::{
    assemble_bundle, check_dims, grad_a, grad_b, grad_c, lipschitz_a, lipschitz_b, lipschitz_c,
    objective_f, GradientBundle,
};
use super::certificate::certify;
use super::trace::{IterateTrace, TraceRecord};
use super::AlgoConfig;
use crate::feasible::{project_a, project_b, project_c, SparsityPattern, StabilityBox};
use crate::sysmodel::StateSpaceModel;
use crate::{Error, Result};

/// Relative tolerance on a per-cycle increase of `f`.
pub const DESCENT_TOL: f64 = 1e-10;
const NORM_FLOOR: f64 = 1e-12;
const GRAMIAN_FLOOR: f64 = 1e-14;

/// Projected-gradient residual with unit step:
/// `sqrt(sum_X ||X - proj_X(X - grad_X f)||_F^2)` over the three blocks.
pub fn stationarity_residual(
    full: &StateSpaceModel,
    red: &StateSpaceModel,
    bundle: &GradientBundle,
    bx: &StabilityBox,
    pat: &SparsityPattern,
) -> f64 {
    let ar = red.a_dense();
    let ra = &ar - project_a(&(&ar - grad_a(bundle)), bx, pat);
    let rb = red.b() - project_b(&(red.b() - grad_b(bundle, full, red)), pat);
    let rc = red.c() - project_c(&(red.c() - grad_c(bundle, full, red)), pat);
    (ra.norm_squared() + rb.norm_squared() + rc.norm_squared()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Stationary,
    MaxIterations,
    Failed,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub model: StateSpaceModel,
    pub trace: IterateTrace,
    /// Model after each cycle, when `keep_iterates` is set.
    pub iterates: Vec<StateSpaceModel>,
    pub initial_f: f64,
    pub initial_residual: f64,
    pub final_f: f64,
    pub final_residual: f64,
    /// Completed cycles.
    pub iterations: usize,
    pub stop: StopReason,
    /// Cycles `k` whose `f` rose by more than the descent tolerance.
    pub descent_violations: Vec<usize>,
    /// Number of cycles retried with doubled `c1`, `c2`.
    pub adaptive_retries: usize,
    /// `c1`, `c2` in effect at the end of the run.
    pub c1: f64,
    pub c2: f64,
    pub warnings: Vec<String>,
}

/// A mid-run failure, carrying everything computed up to that point.
#[derive(Debug, thiserror::Error)]
#[error("block iteration failed after {} cycles: {error}", .partial.iterations)]
pub struct RunFailure {
    #[source]
    pub error: Error,
    pub partial: Box<RunOutcome>,
}

struct Warnings(Vec<String>);

impl Warnings {
    fn once(&mut self, key: &str, msg: String) {
        if !self.0.iter().any(|w| w.starts_with(key)) {
            log::warn!("{msg}");
            self.0.push(format!("{key}: {msg}"));
        }
    }
}

fn min_eigenvalue(sym: &DMatrix<f64>) -> f64 {
    if sym.is_empty() {
        return 0.0;
    }
    sym.clone().symmetric_eigenvalues().min()
}

fn with_a(red: &StateSpaceModel, a: DMatrix<f64>) -> Result<StateSpaceModel> {
    StateSpaceModel::dense(a, red.b().clone(), red.c().clone())
}

fn with_b(red: &StateSpaceModel, b: DMatrix<f64>) -> Result<StateSpaceModel> {
    StateSpaceModel::dense(red.a_dense(), b, red.c().clone())
}

fn with_c(red: &StateSpaceModel, c: DMatrix<f64>) -> Result<StateSpaceModel> {
    StateSpaceModel::dense(red.a_dense(), red.b().clone(), c)
}

/// Step size `1 / constant`, or `None` for a degenerate block whose gradient
/// also vanishes (nothing to do).
fn step(block: &'static str, constant: f64, grad: &DMatrix<f64>) -> Result<Option<f64>> {
    if constant > 0.0 && constant.is_finite() {
        Ok(Some(1.0 / constant))
    } else if grad.norm() == 0.0 {
        Ok(None)
    } else {
        Err(Error::Degenerate {
            block,
            detail: format!("step constant {constant:e} with gradient norm {:e}", grad.norm()),
        })
    }
}

struct Cycle {
    model: StateSpaceModel,
    bundle: GradientBundle,
    c_a: f64,
    c_b: f64,
    c_c: f64,
}

struct Runner<'a> {
    full: &'a StateSpaceModel,
    bx: &'a StabilityBox,
    pat: &'a SparsityPattern,
    cfg: &'a AlgoConfig,
}

impl Runner<'_> {
    fn bundle(&self, red: &StateSpaceModel) -> Result<GradientBundle> {
        assemble_bundle(self.full, red, &self.cfg.sylvester)
    }

    fn check_feasible(&self, red: &StateSpaceModel, block: &'static str) -> Result<()> {
        let cert = certify(red, self.pat, self.bx.epsilon)?;
        if cert.passed {
            Ok(())
        } else {
            Err(Error::Degenerate {
                block,
                detail: format!("iterate left the feasible set: {cert:?}"),
            })
        }
    }

    /// One A -> B -> C cycle from `red` with a bundle fresh at `red`.
    fn cycle(&self, red: &StateSpaceModel, bundle: &GradientBundle, c1: f64, c2: f64) -> Result<Cycle> {
        let cfg = AlgoConfig { c1, c2, ..*self.cfg };

        let c_a = cfg.c * lipschitz_a(red, &cfg);
        let g = grad_a(bundle);
        let red = match step("A", c_a, &g)? {
            Some(t) => with_a(red, project_a(&(red.a_dense() - g * t), self.bx, self.pat))?,
            None => red.clone(),
        };
        self.check_feasible(&red, "A")?;
        let bundle = self.bundle(&red)?;

        let c_b = cfg.c * lipschitz_b(&bundle);
        let g = grad_b(&bundle, self.full, &red);
        let red = match step("B", c_b, &g)? {
            Some(t) => with_b(&red, project_b(&(red.b() - g * t), self.pat))?,
            None => red,
        };
        self.check_feasible(&red, "B")?;
        let bundle = self.bundle(&red)?;

        let c_c = cfg.c * lipschitz_c(&bundle);
        let g = grad_c(&bundle, self.full, &red);
        let red = match step("C", c_c, &g)? {
            Some(t) => with_c(&red, project_c(&(red.c() - g * t), self.pat))?,
            None => red,
        };
        self.check_feasible(&red, "C")?;
        let bundle = self.bundle(&red)?;
        Ok(Cycle { model: red, bundle, c_a, c_b, c_c })
    }

    fn monitor(&self, red: &StateSpaceModel, bundle: &GradientBundle, warnings: &mut Warnings) {
        if red.b().norm() < NORM_FLOOR {
            warnings.once("small-B", format!("||B_r||_F = {:e} is below {NORM_FLOOR:e}", red.b().norm()));
        }
        if red.c().norm() < NORM_FLOOR {
            warnings.once("small-C", format!("||C_r||_F = {:e} is below {NORM_FLOOR:e}", red.c().norm()));
        }
        let lp = min_eigenvalue(&bundle.p);
        if lp < GRAMIAN_FLOOR {
            warnings.once("gramian-P", format!("controllability Gramian min eigenvalue {lp:e} is below {GRAMIAN_FLOOR:e}"));
        }
        let lq = min_eigenvalue(&bundle.q);
        if lq < GRAMIAN_FLOOR {
            warnings.once("gramian-Q", format!("observability Gramian min eigenvalue {lq:e} is below {GRAMIAN_FLOOR:e}"));
        }
    }
}

/// Cyclic block projected gradient method.
///
/// Each cycle takes a projected gradient step in `A_r`, then `B_r`, then
/// `C_r`, each with step `1 / (c L)` for the block's Lipschitz bound and a
/// freshly solved bundle at the current point. There is no line search.
/// The initial model is projected once onto the feasible set. The run stops
/// when the stationarity residual drops to `cfg.stat_tol` or after
/// `cfg.max_iters` cycles.
pub fn run_algorithm1(
    full: &StateSpaceModel,
    red0: &StateSpaceModel,
    bx: &StabilityBox,
    pat: &SparsityPattern,
    cfg: &AlgoConfig,
) -> std::result::Result<RunOutcome, RunFailure> {
    let mut outcome = RunOutcome {
        model: red0.clone(),
        trace: IterateTrace::default(),
        iterates: Vec::new(),
        initial_f: f64::NAN,
        initial_residual: f64::NAN,
        final_f: f64::NAN,
        final_residual: f64::NAN,
        iterations: 0,
        stop: StopReason::Failed,
        descent_violations: Vec::new(),
        adaptive_retries: 0,
        c1: cfg.c1,
        c2: cfg.c2,
        warnings: Vec::new(),
    };
    match run_inner(full, red0, bx, pat, cfg, &mut outcome) {
        Ok(()) => Ok(outcome),
        Err(error) => {
            outcome.stop = StopReason::Failed;
            Err(RunFailure { error, partial: Box::new(outcome) })
        }
    }
}

fn run_inner(
    full: &StateSpaceModel,
    red0: &StateSpaceModel,
    bx: &StabilityBox,
    pat: &SparsityPattern,
    cfg: &AlgoConfig,
    out: &mut RunOutcome,
) -> Result<()> {
    cfg.validate()?;
    check_dims(full, red0)?;
    let r = red0.n();
    if bx.dim() != r || pat.dims() != (r, red0.m(), red0.p()) {
        return Err(Error::mismatch("box/pattern size", r, bx.dim()));
    }
    let runner = Runner { full, bx, pat, cfg };
    let mut warnings = Warnings(Vec::new());

    let mut red = StateSpaceModel::dense(
        project_a(&red0.a_dense(), bx, pat),
        project_b(red0.b(), pat),
        project_c(red0.c(), pat),
    )?;
    runner.check_feasible(&red, "initial")?;
    let mut bundle = runner.bundle(&red)?;
    let mut f = objective_f(&bundle, full, &red);
    let mut residual = stationarity_residual(full, &red, &bundle, bx, pat);
    out.model = red.clone();
    out.initial_f = f;
    out.initial_residual = residual;
    out.final_f = f;
    out.final_residual = residual;
    runner.monitor(&red, &bundle, &mut warnings);

    let (mut c1, mut c2) = (cfg.c1, cfg.c2);
    let start = Instant::now();
    let mut stop = StopReason::MaxIterations;
    if residual <= cfg.stat_tol {
        stop = StopReason::Stationary;
    }
    let mut k = 0;
    while stop == StopReason::MaxIterations && k < cfg.max_iters {
        k += 1;
        let cycle_start = Instant::now();
        let mut next = runner.cycle(&red, &bundle, c1, c2)?;
        let mut f_next = objective_f(&next.bundle, full, &next.model);
        let tol = DESCENT_TOL * (1.0 + f.abs());
        if f_next > f + tol && cfg.adaptive {
            c1 *= 2.0;
            c2 *= 2.0;
            out.adaptive_retries += 1;
            log::info!("cycle {k} increased f; retrying with c1 = {c1}, c2 = {c2}");
            next = runner.cycle(&red, &bundle, c1, c2)?;
            f_next = objective_f(&next.bundle, full, &next.model);
        }
        if f_next > f + tol {
            out.descent_violations.push(k);
            warnings.once(
                "descent",
                format!("cycle {k} increased f from {f:e} to {f_next:e}; c1, c2 may not bound the A-block curvature"),
            );
        }
        red = next.model;
        bundle = next.bundle;
        f = f_next;
        residual = stationarity_residual(full, &red, &bundle, bx, pat);
        runner.monitor(&red, &bundle, &mut warnings);
        if cfg.trace {
            out.trace.records.push(TraceRecord {
                k,
                f,
                residual,
                c_a: next.c_a,
                c_b: next.c_b,
                c_c: next.c_c,
                millis: cycle_start.elapsed().as_secs_f64() * 1e3,
            });
        }
        if cfg.keep_iterates {
            out.iterates.push(red.clone());
        }
        out.model = red.clone();
        out.iterations = k;
        out.final_f = f;
        out.final_residual = residual;
        out.c1 = c1;
        out.c2 = c2;
        out.warnings = warnings.0.clone();
        if residual <= cfg.stat_tol {
            stop = StopReason::Stationary;
        }
    }
    log::debug!("block iteration finished after {k} cycles in {:?}", start.elapsed());
    out.stop = stop;
    out.warnings = warnings.0;
    Ok(())
}
