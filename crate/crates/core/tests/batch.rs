mod common;

use common::*;
use gemqp_core::batch;
use gemqp_core::gem::{build_constraint_matrix, build_dual};
use gemqp_core::harness::{make_synthetic_tasks, run_experiment, RunConfig, Strategy, TaskGenConfig};
use gemqp_core::{DualSolver, ProjectionConfig, SolverConfig};
use rand::Rng;

#[test]
fn batch_projection_matches_sequential() {
    let mut r = rng(51);
    let sets: Vec<_> = (0..400)
        .map(|_| {
            let (p, t) = gem_sizes(&mut r);
            random_gem(&mut r, p, t)
        })
        .collect();
    let cfg = ProjectionConfig::default();
    let par: Vec<_> = batch::project_all(&sets, &cfg).into_iter().map(Result::unwrap).collect();
    let seq: Vec<_> = batch::sequential::project_all(&sets, &cfg).into_iter().map(Result::unwrap).collect();
    assert_eq!(par, seq);
}

#[test]
fn batch_solve_and_certify_match_sequential() {
    let mut r = rng(52);
    let problems: Vec<_> = (0..200)
        .map(|_| {
            let (p, t) = gem_sizes(&mut r);
            let gs = random_gem(&mut r, p, t);
            build_dual(gs.g(), &build_constraint_matrix(gs.memory_grads()).unwrap()).unwrap()
        })
        .collect();
    let cfg = SolverConfig::default();
    for solver in [DualSolver::ProjectedGradient, DualSolver::ActiveSetBruteforce] {
        let par: Vec<_> = batch::solve_all(&problems, solver, &cfg).into_iter().map(Result::unwrap).collect();
        let seq: Vec<_> = batch::sequential::solve_all(&problems, solver, &cfg).into_iter().map(Result::unwrap).collect();
        assert_eq!(par, seq);
    }

    let qps: Vec<_> = (0..200)
        .map(|_| {
            let (p, m) = (r.random_range(1..=10), r.random_range(1..=6));
            random_feasible_qp(&mut r, p, m)
        })
        .collect();
    let par: Vec<_> = batch::certify_all(&qps, DualSolver::ProjectedGradient, &cfg).into_iter().map(Result::unwrap).collect();
    let seq: Vec<_> =
        batch::sequential::certify_all(&qps, DualSolver::ProjectedGradient, &cfg).into_iter().map(Result::unwrap).collect();
    assert_eq!(par, seq);
}

#[test]
fn errors_stay_in_their_slot() {
    let mut r = rng(53);
    let mut sets: Vec<_> = (0..10).map(|_| random_gem(&mut r, 3, 2)).collect();
    let bad = ProjectionConfig { feas_tol: -1.0, ..Default::default() };
    assert!(batch::project_all(&sets, &bad).iter().all(Result::is_err));
    sets.clear();
    assert!(batch::project_all(&sets, &ProjectionConfig::default()).is_empty());
}

#[test]
fn concurrent_strategy_comparison_matches_separate_runs() {
    let tasks = make_synthetic_tasks(&TaskGenConfig { conflict: 1.0, ..Default::default() }).unwrap();
    let cfg = RunConfig { steps_per_task: 60, ..Default::default() };
    let (gem, sgd) = batch::compare_strategies(&tasks, &cfg).unwrap();
    assert_eq!(gem, run_experiment(&tasks, Strategy::Gem, &cfg).unwrap());
    assert_eq!(sgd, run_experiment(&tasks, Strategy::Sgd, &cfg).unwrap());
}
