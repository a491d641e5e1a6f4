//! `gemqp`: gradient projection, QP dualization and certification, and a
//! small continual-learning demo.
//!
//! Exit codes: 0 on success, 1 on bad input or usage, 2 when a solver hit
//! its iteration limit (the partial result is still printed).

mod demo;
mod input;
mod project;
mod solve;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gemqp_core::{DualSolver, ProjectionConfig, SolverConfig};

#[derive(Parser, Debug)]
#[command(name = "gemqp", version, about = "Dual QP toolkit for gradient episodic memory")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. Each one overrides the matching field
/// of a JSON request, which in turn overrides the built-in default.
#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Absolute tolerance on the dual KKT residual [default: 1e-10]
    #[arg(long, global = true)]
    tol_kkt: Option<f64>,
    /// Iteration limit for the projected-gradient solver [default: 100000]
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// Relative feasibility slack on the projected gradient [default: 1e-8]
    #[arg(long, global = true)]
    feas_tol: Option<f64>,
    /// Require <g~, g_k> >= margin instead of >= 0 [default: 0]
    #[arg(long, global = true)]
    margin: Option<f64>,
    /// Dual solver: pg or bruteforce [default: pg]
    #[arg(long, global = true)]
    solver: Option<String>,
    /// Seed for the demo task generator and example order [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
}

/// Settings a JSON request may carry.
#[derive(Debug, Clone, Default, PartialEq, serde::Deserialize)]
pub struct RequestSettings {
    pub tol_kkt: Option<f64>,
    pub max_iters: Option<usize>,
    pub margin: Option<f64>,
    pub feas_tol: Option<f64>,
}

impl CommonArgs {
    pub fn solver(&self) -> Result<DualSolver, CliError> {
        match &self.solver {
            None => Ok(DualSolver::default()),
            Some(s) => Ok(s.parse()?),
        }
    }

    pub fn solver_config(&self, req: &RequestSettings) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            tol_kkt: self.tol_kkt.or(req.tol_kkt).unwrap_or(d.tol_kkt),
            max_iters: self.max_iters.or(req.max_iters).unwrap_or(d.max_iters),
            ..d
        }
    }

    pub fn projection_config(&self, req: &RequestSettings) -> Result<ProjectionConfig, CliError> {
        let d = ProjectionConfig::default();
        Ok(ProjectionConfig {
            solver: self.solver()?,
            solver_config: self.solver_config(req),
            feas_tol: self.feas_tol.or(req.feas_tol).unwrap_or(d.feas_tol),
            margin: self.margin.or(req.margin).unwrap_or(d.margin),
            ..d
        })
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Project a gradient so it does not conflict with memory gradients.
    Project(InputArgs),
    /// Dualize, solve or certify a QP given as {C, w, A, b} or {M, q}.
    Solve(solve::SolveArgs),
    /// Train GEM or SGD on synthetic tasks and print per-step losses as CSV.
    Demo(demo::DemoArgs),
}

#[derive(Args, Debug)]
pub struct InputArgs {
    /// Read the JSON request from FILE instead of stdin
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    /// Solver ran out of iterations; carries the JSON or CSV to print anyway.
    NotConverged(String),
}

impl From<gemqp_core::Error> for CliError {
    fn from(e: gemqp_core::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(format!("invalid JSON input: {e}"))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Project(args) => project::run(&args, &cli.common),
        Command::Solve(args) => solve::run(&args, &cli.common),
        Command::Demo(args) => demo::run(&args, &cli.common),
    }
}

fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    // A closed pipe is not worth a panic.
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(text) => {
            emit(&text);
            ExitCode::SUCCESS
        }
        Err(CliError::NotConverged(text)) => {
            emit(&text);
            eprintln!("gemqp: solver reached max_iters without converging");
            ExitCode::from(2)
        }
        Err(CliError::Input(msg)) => {
            eprintln!("gemqp: {msg}");
            ExitCode::from(1)
        }
    }
}
