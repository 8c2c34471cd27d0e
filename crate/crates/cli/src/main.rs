//! `posreduce`: benchmark generation, reduction runs, evaluation and plot
//! data for structure-preserving H² reduction of positive network systems.
//!
//! Exit codes: 0 success, 1 usage or IO error, 2 infeasible set-up
//! (reducible aggregate, unstable or non-positive input, epsilon out of
//! range), 3 solver failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use posreduce::feasible::DEFAULT_EPSILON;
use posreduce::sysmodel::H2Options;

use commands::{full, Failure};
use config::{AlphaSetting, RunConfig};

#[derive(Parser)]
#[command(name = "posreduce", version, about = "Structure-preserving H2 reduction of stable positive network systems")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a benchmark system (and its default partition) to a directory.
    Generate {
        #[arg(long, value_enum, default_value_t = Kind::Heat2d)]
        kind: Kind,
        /// Grid side; the system has n = K^2 states.
        #[arg(short = 'k', long = "k")]
        k: usize,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Aggregate over a partition and refine with the block gradient method.
    Reduce(ReduceArgs),
    /// H2 error and feasibility certificate of a reduced model.
    Evaluate {
        full_dir: PathBuf,
        reduced_dir: PathBuf,
        /// Pattern JSON written by `reduce`; without it no zeros are enforced.
        #[arg(long)]
        pattern: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        /// Largest full dimension for which Gramians are formed.
        #[arg(long, default_value_t = H2Options::default().size_cap)]
        size_cap: usize,
        #[arg(long)]
        json: bool,
    },
    /// Turn a run trace into (k, f, residual) rows for plotting.
    TracePlotdata { trace_csv: PathBuf, out_csv: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Heat2d,
}

/// Flags override the values of `--config`.
#[derive(Args)]
struct ReduceArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    system: Option<PathBuf>,
    #[arg(long)]
    partition: Option<PathBuf>,
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// `auto` or a fixed shift.
    #[arg(long, value_parser = AlphaSetting::parse)]
    alpha: Option<AlphaSetting>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    stat_tol: Option<f64>,
    /// Double c1, c2 and retry a cycle that increases f.
    #[arg(long)]
    adaptive: bool,
}

impl ReduceArgs {
    fn resolve(self) -> Result<RunConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path).map_err(Failure::Usage)?,
            None => RunConfig::default(),
        };
        let set = |slot: &mut Option<PathBuf>, v: Option<PathBuf>| {
            if v.is_some() {
                *slot = v;
            }
        };
        set(&mut cfg.system, self.system);
        set(&mut cfg.partition, self.partition);
        set(&mut cfg.output, self.out);
        cfg.alpha = self.alpha.unwrap_or(cfg.alpha);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        let a = &mut cfg.algorithm;
        a.c = self.c.unwrap_or(a.c);
        a.c1 = self.c1.unwrap_or(a.c1);
        a.c2 = self.c2.unwrap_or(a.c2);
        a.epsilon = self.epsilon.unwrap_or(a.epsilon);
        a.gamma = self.gamma.unwrap_or(a.gamma);
        a.max_iters = self.max_iters.unwrap_or(a.max_iters);
        a.stat_tol = self.stat_tol.unwrap_or(a.stat_tol);
        a.adaptive |= self.adaptive;
        Ok(cfg)
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Generate { kind: Kind::Heat2d, k, out } => {
            let r = commands::generate_heat2d(k, &out)?;
            let clusters = r.clusters.map(|c| format!(", partition.json with {c} clusters")).unwrap_or_default();
            println!("wrote heat2d K = {k}: n = {}, m = {}, p = {}{clusters} to {}", r.n, r.m, r.p, out.display());
        }
        Command::Reduce(args) => {
            let cfg = args.resolve()?;
            let s = commands::reduce(&cfg)?;
            println!("reduced n = {} to r = {} (alpha {}) in {} cycles, stop: {:?}", s.n, s.r, full(s.alpha), s.iterations, s.stop);
            println!("f: {} -> {}", full(s.initial_f), full(s.final_f));
            if let (Some(a), Some(b)) = (s.initial_h2.and_then(|h| h.error()), s.final_h2.and_then(|h| h.error())) {
                println!("H2 error: {} -> {}", full(a), full(b));
            }
            // Individual warnings were already logged by the run.
            if !s.descent_violations.is_empty() {
                println!("f increased at cycles {:?}", s.descent_violations);
            }
            let passed = s.certificate.as_ref().is_some_and(|c| c.passed);
            println!("certificate: {}", if passed { "passed" } else { "FAILED" });
        }
        Command::Evaluate { full_dir, reduced_dir, pattern, epsilon, size_cap, json } => {
            let e = commands::evaluate(&full_dir, &reduced_dir, pattern.as_deref(), epsilon, size_cap)?;
            if let Some(n) = &e.notice {
                eprintln!("notice: {n}");
            }
            if json {
                println!("{}", serde_json::to_string_pretty(&e).map_err(|e| Failure::Usage(e.to_string()))?);
            } else {
                print!("{}", commands::render_evaluation(&e));
            }
        }
        Command::TracePlotdata { trace_csv, out_csv } => {
            let rows = commands::trace_plotdata(&trace_csv, &out_csv)?;
            println!("wrote {rows} rows to {}", out_csv.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap uses 2 for usage errors, which is reserved here.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
