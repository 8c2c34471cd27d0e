use std::fs;
use std::path::{Path, PathBuf};

use posreduce::clustering::{build_characteristic_matrix, initial_reduced_model, reduced_graph_pattern, ClusterPartition};
use posreduce::feasible::{build_box, require_irreducible, SparsityPattern};
use posreduce::optimizer::{certify, run_algorithm1, AlgoConfig, FeasibilityCertificate, IterateTrace, RunOutcome, StopReason};
use posreduce::sysmodel::{h2_error_report, heat2d, load_model, save_model, validate_aspn, H2Options, H2Report, StateSpaceModel};
use serde::Serialize;

use crate::config::RunConfig;

pub const REDUCED_DIR: &str = "reduced";
pub const INITIAL_DIR: &str = "initial";
pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const BOX_FILE: &str = "box.json";
pub const PATTERN_FILE: &str = "pattern.json";
pub const PARTITION_FILE: &str = "partition.json";

/// Command failure, classified by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments, missing or unreadable files.
    Usage(String),
    /// The problem set-up violates a precondition of the method.
    Infeasible(String),
    /// The iteration itself broke down.
    Solver(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Infeasible(_) => 2,
            Self::Solver(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Infeasible(m) | Self::Solver(m) => m,
        }
    }
}

fn usage(context: impl std::fmt::Display) -> impl FnOnce(posreduce::Error) -> Failure {
    move |e| Failure::Usage(format!("{context}: {e}"))
}

fn infeasible(context: impl std::fmt::Display) -> impl FnOnce(posreduce::Error) -> Failure {
    move |e| Failure::Infeasible(format!("{context}: {e}"))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Usage(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Scientific notation with 17 significant digits.
pub fn full(v: f64) -> String {
    format!("{v:.16e}")
}

// ---------------------------------------------------------------- generate

#[derive(Debug, Serialize)]
pub struct GenerateReport {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub clusters: Option<usize>,
}

pub fn generate_heat2d(k: usize, out: &Path) -> Result<GenerateReport, Failure> {
    let (model, hint) = heat2d(k).map_err(usage("heat2d"))?;
    save_model(&model, out).map_err(usage(out.display()))?;
    if let Some(partition) = &hint {
        partition.save(out.join(PARTITION_FILE)).map_err(usage(PARTITION_FILE))?;
    }
    Ok(GenerateReport { n: model.n(), m: model.m(), p: model.p(), clusters: hint.map(|h| h.num_clusters()) })
}

// ---------------------------------------------------------------- reduce

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub system: PathBuf,
    pub partition: PathBuf,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub r: usize,
    pub alpha: f64,
    pub seed: u64,
    pub config: AlgoConfig,
    pub mu1: f64,
    pub iterations: usize,
    pub stop: StopReason,
    pub initial_f: f64,
    pub final_f: f64,
    pub initial_residual: f64,
    pub final_residual: f64,
    /// `None` when the full model is above the Gramian size cap.
    pub initial_h2: Option<H2Report>,
    pub final_h2: Option<H2Report>,
    pub descent_violations: Vec<usize>,
    pub adaptive_retries: usize,
    pub c1: f64,
    pub c2: f64,
    pub warnings: Vec<String>,
    pub certificate: Option<FeasibilityCertificate>,
    pub error: Option<String>,
}

fn require_input(path: &Option<PathBuf>, what: &str) -> Result<PathBuf, Failure> {
    let path = path.clone().ok_or_else(|| Failure::Usage(format!("no {what} given")))?;
    if !path.exists() {
        return Err(Failure::Usage(format!("{what} {} does not exist", path.display())));
    }
    Ok(path)
}

/// Validates, aggregates, builds the box and runs the block iteration,
/// writing the reduced model, trace, box, pattern and summary into the
/// output directory. Partial results are written on solver failure too.
pub fn reduce(cfg: &RunConfig) -> Result<RunSummary, Failure> {
    let system = require_input(&cfg.system, "system directory")?;
    let partition_path = require_input(&cfg.partition_path(), "partition file")?;
    let out = cfg.output.clone().ok_or_else(|| Failure::Usage("no output directory given".into()))?;

    let full = load_model(&system).map_err(usage(system.display()))?;
    let partition = ClusterPartition::load(&partition_path).map_err(usage(partition_path.display()))?;
    if partition.n() != full.n() {
        return Err(Failure::Usage(format!(
            "partition covers {} nodes but the system has n = {}",
            partition.n(),
            full.n()
        )));
    }
    let algo = cfg.algorithm;
    algo.validate().map_err(infeasible("configuration"))?;

    let report = validate_aspn(&full, 0.0).map_err(infeasible("full model"))?;
    if !report.positivity.is_positive() {
        let site = report
            .positivity
            .location
            .map(|s| format!(" at {:?}({}, {})", s.matrix, s.row, s.col))
            .unwrap_or_default();
        return Err(Failure::Infeasible(format!(
            "full model is not positive: entry {}{site}",
            report.positivity.worst_violation
        )));
    }
    if !report.stable {
        return Err(Failure::Infeasible(format!(
            "full model is unstable: spectral abscissa {}",
            report.abscissa
        )));
    }

    let pi = build_characteristic_matrix(&partition);
    let (red0, alpha) =
        initial_reduced_model(&full, &pi, cfg.alpha.policy()).map_err(infeasible("initial reduced model"))?;
    let a0 = red0.a_dense();
    require_irreducible(&a0).map_err(infeasible("initial reduced state matrix"))?;
    let pattern = reduced_graph_pattern(&red0, 0.0).map_err(infeasible("reduced pattern"))?;
    let bx = build_box(&a0, algo.epsilon, algo.gamma).map_err(infeasible("stability box"))?;

    fs::create_dir_all(&out).map_err(|e| Failure::Usage(format!("{}: {e}", out.display())))?;
    save_model(&red0, out.join(INITIAL_DIR)).map_err(usage(INITIAL_DIR))?;
    write_json(&out.join(BOX_FILE), &bx)?;
    write_json(&out.join(PATTERN_FILE), &pattern)?;

    let h2 = H2Options::default();
    let initial_h2 = h2_report(&full, &red0, &h2);

    let (outcome, error) = match run_algorithm1(&full, &red0, &bx, &pattern, &algo) {
        Ok(o) => (o, None),
        Err(failure) => {
            let message = failure.to_string();
            (*failure.partial, Some(message))
        }
    };
    let final_h2 = if error.is_none() { h2_report(&full, &outcome.model, &h2) } else { None };
    let certificate = certify(&outcome.model, &pattern, algo.epsilon).ok();
    write_outcome(&out, &outcome)?;

    let summary = RunSummary {
        system,
        partition: partition_path,
        n: full.n(),
        m: full.m(),
        p: full.p(),
        r: red0.n(),
        alpha,
        seed: cfg.seed,
        config: algo,
        mu1: bx.perron.mu1,
        iterations: outcome.iterations,
        stop: outcome.stop,
        initial_f: outcome.initial_f,
        final_f: outcome.final_f,
        initial_residual: outcome.initial_residual,
        final_residual: outcome.final_residual,
        initial_h2,
        final_h2,
        descent_violations: outcome.descent_violations,
        adaptive_retries: outcome.adaptive_retries,
        c1: outcome.c1,
        c2: outcome.c2,
        warnings: outcome.warnings,
        certificate,
        error,
    };
    write_json(&out.join(SUMMARY_FILE), &summary)?;
    match &summary.error {
        Some(e) => Err(Failure::Solver(format!("{e} (partial results in {})", out.display()))),
        None => Ok(summary),
    }
}

fn h2_report(full: &StateSpaceModel, red: &StateSpaceModel, opts: &H2Options) -> Option<H2Report> {
    match h2_error_report(full, red, opts) {
        Ok(r) => Some(r),
        Err(e) => {
            log::warn!("H2 evaluation skipped: {e}");
            None
        }
    }
}

fn write_outcome(out: &Path, outcome: &RunOutcome) -> Result<(), Failure> {
    save_model(&outcome.model, out.join(REDUCED_DIR)).map_err(usage(REDUCED_DIR))?;
    outcome.trace.save(out.join(TRACE_FILE)).map_err(usage(TRACE_FILE))
}

// ---------------------------------------------------------------- evaluate

#[derive(Debug, Serialize)]
pub struct Evaluation {
    pub n: usize,
    pub r: usize,
    pub f: f64,
    /// `2 f + ||G||^2`; absent when the full model exceeds the size cap.
    pub error_squared: Option<f64>,
    pub error: Option<f64>,
    pub full_norm_squared: Option<f64>,
    pub relative_error: Option<f64>,
    pub certificate: FeasibilityCertificate,
    pub notice: Option<String>,
}

pub fn evaluate(
    full_dir: &Path,
    reduced_dir: &Path,
    pattern: Option<&Path>,
    epsilon: f64,
    size_cap: usize,
) -> Result<Evaluation, Failure> {
    let full = load_model(full_dir).map_err(usage(full_dir.display()))?;
    let red = load_model(reduced_dir).map_err(usage(reduced_dir.display()))?;
    if (full.m(), full.p()) != (red.m(), red.p()) {
        return Err(Failure::Usage(format!(
            "input/output sizes differ: full ({}, {}), reduced ({}, {})",
            full.m(),
            full.p(),
            red.m(),
            red.p()
        )));
    }
    let pat = match pattern {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<SparsityPattern>(&text)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => SparsityPattern::unconstrained(red.n(), red.m(), red.p()),
    };
    let opts = H2Options { size_cap, ..Default::default() };
    let report = h2_error_report(&full, &red, &opts).map_err(infeasible("H2 evaluation"))?;
    let certificate = certify(&red, &pat, epsilon).map_err(infeasible("certificate"))?;
    let notice = report.full_norm_squared.is_none().then(|| {
        format!(
            "full model has n = {} above the Gramian size cap {size_cap}; reporting f only",
            full.n()
        )
    });
    Ok(Evaluation {
        n: full.n(),
        r: red.n(),
        f: report.f,
        error_squared: report.error_squared,
        error: report.error(),
        full_norm_squared: report.full_norm_squared,
        relative_error: report.relative_error(),
        certificate,
        notice,
    })
}

pub fn render_evaluation(e: &Evaluation) -> String {
    let opt = |v: Option<f64>| v.map(full).unwrap_or_else(|| "n/a".into());
    let c = &e.certificate;
    let mut s = String::new();
    s += &format!("n = {}, r = {}\n", e.n, e.r);
    s += &format!("f                  = {}\n", full(e.f));
    s += &format!("||G||^2            = {}\n", opt(e.full_norm_squared));
    s += &format!("2f + ||G||^2       = {}\n", opt(e.error_squared));
    s += &format!("H2 error           = {}\n", opt(e.error));
    s += &format!("relative H2 error  = {}\n", opt(e.relative_error));
    s += &format!(
        "certificate        = {} (abscissa {}, epsilon {}, min off-diagonal {}, min B {}, min C {}, pattern {})\n",
        if c.passed { "passed" } else { "FAILED" },
        full(c.abscissa),
        full(c.epsilon),
        opt(c.min_offdiag),
        full(c.min_b),
        full(c.min_c),
        c.pattern_checksum
    );
    s
}

// ---------------------------------------------------------------- trace-plotdata

/// Writes `k,f,residual` rows; an empty trace gives a header-only file.
pub fn trace_plotdata(trace_csv: &Path, out_csv: &Path) -> Result<usize, Failure> {
    let trace = IterateTrace::load(trace_csv).map_err(usage(trace_csv.display()))?;
    let file = fs::File::create(out_csv).map_err(|e| Failure::Usage(format!("{}: {e}", out_csv.display())))?;
    let mut w = csv::Writer::from_writer(file);
    let io = |e: csv::Error| Failure::Usage(format!("{}: {e}", out_csv.display()));
    w.write_record(["k", "f", "residual"]).map_err(io)?;
    for r in &trace.records {
        w.write_record([r.k.to_string(), full(r.f), full(r.residual)]).map_err(io)?;
    }
    w.flush().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(trace.records.len())
}
