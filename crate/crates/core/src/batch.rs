//! Batch evaluation over independent problems.
//!
//! With the `parallel` feature (on by default) items are spread over the
//! rayon pool; without it they run in order on the calling thread. Each
//! item is still solved single-threaded and results come back in input
//! order, so both paths return identical values. [`sequential`] is always
//! available for comparison.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::Result;
use crate::gem::{project, GradientSet, ProjectionConfig, ProjectionResult};
use crate::harness::{run_experiment, RunConfig, RunMetrics, Strategy, Task};
use crate::nnq::{DualSolver, NonnegQP, SolverConfig, SolverResult};
use crate::qp::{Certificate, PrimalQP};

fn map_ordered<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

pub fn project_all(sets: &[GradientSet], config: &ProjectionConfig) -> Vec<Result<ProjectionResult>> {
    map_ordered(sets, |gs| project(gs, config))
}

pub fn solve_all(problems: &[NonnegQP], solver: DualSolver, config: &SolverConfig) -> Vec<Result<SolverResult>> {
    map_ordered(problems, |p| solver.solve(p, config))
}

pub fn certify_all(qps: &[PrimalQP], solver: DualSolver, config: &SolverConfig) -> Vec<Result<Certificate>> {
    map_ordered(qps, |qp| qp.certify(solver, config))
}

/// Runs the GEM and SGD strategies on the same stream, concurrently when
/// the `parallel` feature is on. Returns `(gem, sgd)`.
pub fn compare_strategies(tasks: &[Task], config: &RunConfig) -> Result<(RunMetrics, RunMetrics)> {
    let run = |s| run_experiment(tasks, s, config);
    #[cfg(feature = "parallel")]
    let (gem, sgd) = rayon::join(|| run(Strategy::Gem), || run(Strategy::Sgd));
    #[cfg(not(feature = "parallel"))]
    let (gem, sgd) = (run(Strategy::Gem), run(Strategy::Sgd));
    Ok((gem?, sgd?))
}

/// Single-threaded versions of the batch entry points.
pub mod sequential {
    use super::*;

    pub fn project_all(sets: &[GradientSet], config: &ProjectionConfig) -> Vec<Result<ProjectionResult>> {
        sets.iter().map(|gs| project(gs, config)).collect()
    }

    pub fn solve_all(problems: &[NonnegQP], solver: DualSolver, config: &SolverConfig) -> Vec<Result<SolverResult>> {
        problems.iter().map(|p| solver.solve(p, config)).collect()
    }

    pub fn certify_all(qps: &[PrimalQP], solver: DualSolver, config: &SolverConfig) -> Vec<Result<Certificate>> {
        qps.iter().map(|qp| qp.certify(solver, config)).collect()
    }
}
